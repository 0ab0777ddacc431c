"""Group gold standards, a fixed split and polarization-based replication."""

from collections import Counter

from perspectives.augment import AugmentPolicy, copy_count, replicate_by_polarization
from perspectives.goldstd import SplitSpec, majority_gold, make_split, union_gold
from perspectives.partition import natural_partition
from perspectives.polarization import score_items
from perspectives.synthetic import planted_corpus

corpus = planted_corpus(n_items=300, seed=11)
m = corpus.matrix
part = natural_partition(m)

# ----------------------------------------------------------------------
# One gold per perspective plus the overall majority

overall = majority_gold(m, source="overall")
golds = {lbl: majority_gold(m, g, source=lbl) for lbl, g in zip(part.labels, part.groups)}
for name, g in [("overall", overall), *golds.items()]:
    print(f"{name:8s} positives={len(g.positives())} ties={g.tie_count}")
print("union   positives=", len(union_gold(list(golds.values())).positives()))

# The same held-out items for every gold
split = make_split(overall, SplitSpec(0.85, seed=11))
print("train/test:", len(split.train_ids), len(split.test_ids))

# ----------------------------------------------------------------------
# Copy counts as a function of P

policy = AugmentPolicy(factor=3, delete_threshold=1.0)
for p in (0.0, 0.2, 0.49, 0.5, 0.8, 0.99, 1.0):
    print("P =", p, "->", copy_count(p, policy), "copies")

scores = {s.item_id: s.p for s in score_items(m, part) if s is not None}
train_a = golds["A"].restrict(split.train_ids)
aug = replicate_by_polarization(train_a, scores, policy)
print("group A train:", len(train_a), "->", len(aug), "rows,", len(aug.deleted), "deleted")
print("copies histogram:", sorted(Counter(aug.copies.values()).items()))
