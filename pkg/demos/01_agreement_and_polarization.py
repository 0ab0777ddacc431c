"""Agreement and P-index on hand-sized items."""

import numpy as np

from perspectives.agreement import cohen_kappa, fleiss_kappa, intra_agreement
from perspectives.corpus import AnnotationMatrix, Annotator
from perspectives.partition import Partition
from perspectives.polarization import p_index

# ----------------------------------------------------------------------
# Agreement of a single group

for labels in ([1, 0, 0], [1, 1, 1], [0, 0, 1, 0, 1]):
    a = intra_agreement(labels)
    print(labels, "a =", a.exact, f"({a.value:.2f})")

# ----------------------------------------------------------------------
# Two groups of annotators on one item

part = Partition((("a", "b", "c"), ("d", "e", "f")))
for row in ([1, 0, 0, 1, 1, 1], [0, 0, 0, 1, 1, 1], [1, 1, 1, 1, 1, 1]):
    s = p_index(dict(zip("abcdef", row)), part)
    print(row, "P =", s.exact, f"({s.p:.2f})", "groups:", s.group_agreements, "overall:", round(s.overall_agreement, 3))

# Groups may differ in size
s = p_index(dict(zip("abcde", [0, 0, 1, 0, 1])), Partition((("a", "b"), ("c", "d", "e"))))
print("ragged:", s.exact, f"({s.p:.2f})")

# ----------------------------------------------------------------------
# Chance-corrected agreement over a whole matrix

rng = np.random.default_rng(3)
truth = rng.integers(0, 2, 40)
records = []
for j in range(4):
    noisy = np.where(rng.random(40) < 0.05 * (j + 1), 1 - truth, truth)
    records += [(f"t{i:02d}", f"r{j}", str(v)) for i, v in enumerate(noisy)]
m = AnnotationMatrix.from_records(records, annotators=[Annotator(f"r{j}") for j in range(4)])

print("Fleiss kappa, all raters:", round(fleiss_kappa(m).kappa, 3))
for j in range(1, 4):
    print(f"Cohen kappa r0 vs r{j}:", round(cohen_kappa(m, "r0", f"r{j}"), 3))
