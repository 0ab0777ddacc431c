"""Finding the annotator split that maximizes average polarization."""

import numpy as np

from perspectives.partition import count_partitions, natural_partition, search_max_polarization, compare_natural
from perspectives.polarization import polarization_census, rank_by_polarization
from perspectives.synthetic import planted_corpus

# ----------------------------------------------------------------------
# How many candidates are there?

for m in range(4, 11):
    print(m, "annotators:", count_partitions(m, 2, 2), "two-group splits with at least 2 per group")

# ----------------------------------------------------------------------
# A corpus with two planted perspectives

corpus = planted_corpus(n_items=200, seed=5)
m = corpus.matrix
print("annotators:", m.annotator_ids)
print("planted:", corpus.planted)

res = search_max_polarization(m, k=2, min_size=2)
print("best split:", res.best, "avg P =", round(res.best_score, 3))
print("runner-up:", res.scored[1].partition, "avg P =", round(res.scored[1].avg_p, 3))
print("recovered planted split:", res.best.same_split(corpus.planted))

# Natural groups come from the annotator file; here they match the planted ones
nat = natural_partition(m)
print(compare_natural(res, nat, m))

# ----------------------------------------------------------------------
# Which items are most polarized under the best split?

ranked = rank_by_polarization(m, res.best)
texts = corpus.texts
for r in ranked[:5]:
    print(f"{r.p:.3f}", texts[r.item_id])

census = polarization_census(m, res.best)
print("P = 1:", census["max_polarization"], f"({census['max_polarization_pct']}%)")
print("P = 0:", census["zero_polarization"], f"({census['zero_polarization_pct']}%)")

p = np.array([r.p for r in ranked if r.p is not None])
print("mean", p.mean().round(3), "median", np.median(p).round(3))
