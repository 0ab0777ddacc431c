"""Agreement statistics over annotation multisets and matrices.

Per-item agreement is the chi-square statistic of the label counts against the
uniform distribution, normalized to [0, 1] by its maximum ``n * (c - 1)``::

    a(G) = chi2(G) / (n * (c - 1))

which is 0 for an exactly uniform split and 1 for a unanimous set.  Since
``chi2 = (c / n) * sum(x**2) - n`` this is the rational
``(c * sum(x**2) - n**2) / (n**2 * (c - 1))``; it is evaluated exactly with
:class:`fractions.Fraction` so that downstream sums, ties and argmaxes do not
depend on floating-point evaluation order.

Chance-corrected coefficients (Fleiss, Cohen) are exact rationals as well and
returned as floats.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import combinations
from typing import Hashable, Iterable, Sequence

import numpy as np

from .corpus import MISSING, AnnotationMatrix

__all__ = [
    "UndefinedAgreement",
    "AgreementScore",
    "FleissResult",
    "PairwiseNetwork",
    "chi_square_uniform",
    "agreement_from_counts",
    "intra_agreement",
    "fleiss_kappa",
    "cohen_kappa",
    "pairwise_network",
    "agreement_report",
    "render_pairwise_table",
]


class UndefinedAgreement(ValueError):
    """Raised when a statistic is undefined for its input (too few labels, P_e = 1, ...)."""


@dataclass(frozen=True)
class AgreementScore:
    value: float
    exact: Fraction = field(repr=False)
    chi2: float
    support: int


def chi_square_uniform(counts: Sequence[int]) -> float:
    """Pearson chi-square of ``counts`` against the uniform distribution."""
    counts = [int(x) for x in counts]
    if any(x < 0 for x in counts):
        raise ValueError("counts must be non-negative")
    n = sum(counts)
    if n < 1:
        raise UndefinedAgreement("empty annotation set")
    expected = Fraction(n, len(counts))
    return float(sum((x - expected) ** 2 for x in counts) / expected)


@lru_cache(maxsize=65536)
def _exact_agreement(counts: tuple[int, ...]) -> Fraction:
    n = sum(counts)
    c = len(counts)
    return Fraction(c * sum(x * x for x in counts) - n * n, n * n * (c - 1))


def agreement_from_counts(counts: Sequence[int]) -> AgreementScore:
    """Normalized chi-square agreement of a vector of per-category counts."""
    counts = tuple(int(x) for x in counts)
    if len(counts) < 2:
        raise ValueError("need at least two categories")
    n = sum(counts)
    if n < 2:
        raise UndefinedAgreement(f"agreement needs at least 2 annotations, got {n}")
    exact = _exact_agreement(counts)
    return AgreementScore(float(exact), exact, chi_square_uniform(counts), n)


def intra_agreement(
    annotations: Iterable[Hashable],
    n_categories: int = 2,
    categories: Sequence[Hashable] | None = None,
) -> AgreementScore:
    """Agreement of a multiset of labels, e.g. ``intra_agreement([1, 0, 0])``.

    ``categories`` fixes the category set explicitly; otherwise ``n_categories``
    gives its size and the observed distinct labels fill it (absent ones count
    zero).  ``None`` entries are treated as missing and skipped.
    """
    tally = Counter(a for a in annotations if a is not None)
    if categories is not None:
        unknown = set(tally) - set(categories)
        if unknown:
            raise ValueError(f"labels {sorted(map(str, unknown))} not in categories")
        counts = [tally.get(c, 0) for c in categories]
    else:
        if len(tally) > n_categories:
            raise ValueError(f"{len(tally)} distinct labels exceed n_categories={n_categories}")
        counts = list(tally.values()) + [0] * (n_categories - len(tally))
    return agreement_from_counts(counts)


# -- chance-corrected coefficients ------------------------------------------


@dataclass(frozen=True)
class FleissResult:
    kappa: float
    n_items: int
    excluded_items: tuple[str, ...] = ()


def _fleiss_from_counts(counts: np.ndarray) -> Fraction:
    totals = counts.sum(axis=1)
    p_bar = sum(
        Fraction(int((row * row).sum() - n), int(n * (n - 1))) for row, n in zip(counts, totals)
    ) / len(totals)
    grand = int(totals.sum())
    p_e = sum(Fraction(int(col), grand) ** 2 for col in counts.sum(axis=0))
    if p_e == 1:
        raise UndefinedAgreement("expected agreement is 1 (all annotations in one category)")
    return (p_bar - p_e) / (1 - p_e)


def fleiss_kappa(matrix: AnnotationMatrix, annotator_subset: Iterable[str] | None = None) -> FleissResult:
    """Fleiss' kappa over items with at least two labels from ``annotator_subset``.

    Items with fewer labels are excluded and listed in the result.  Raggedness is
    handled by per-item rater counts (each item's own ``n_i``).
    """
    counts = matrix.counts(annotator_subset)
    totals = counts.sum(axis=1)
    keep = totals >= 2
    excluded = tuple(it for it, k in zip(matrix.items, keep) if not k)
    if not keep.any():
        raise UndefinedAgreement("no item has two or more annotations in scope")
    kappa = _fleiss_from_counts(counts[keep])
    return FleissResult(float(kappa), int(keep.sum()), excluded)


def _cohen_from_codes(a: np.ndarray, b: np.ndarray, n_categories: int) -> Fraction:
    both = (a != MISSING) & (b != MISSING)
    n = int(both.sum())
    if n == 0:
        raise UndefinedAgreement("annotators share no annotated items")
    a, b = a[both], b[both]
    p_o = Fraction(int((a == b).sum()), n)
    p_e = sum(
        Fraction(int((a == c).sum()) * int((b == c).sum()), n * n) for c in range(n_categories)
    )
    if p_e == 1:
        raise UndefinedAgreement("expected agreement is 1 (both raters use a single category)")
    return (p_o - p_e) / (1 - p_e)


def cohen_kappa(matrix: AnnotationMatrix, annotator_a: str, annotator_b: str) -> float:
    """Cohen's kappa of two annotators over their co-annotated items."""
    a = matrix.codes[:, matrix.annotator_column(annotator_a)]
    b = matrix.codes[:, matrix.annotator_column(annotator_b)]
    return float(_cohen_from_codes(a, b, matrix.n_categories))


# -- pairwise network -------------------------------------------------------


@dataclass(frozen=True)
class PairwiseNetwork:
    """Cohen's kappa for every unordered annotator pair.

    ``kappas`` only holds defined pairs; undefined ones are listed in
    ``undefined``.  With a partition, ``tags`` maps each pair to ``"intra"`` or
    ``"inter"`` and ``pair_groups`` to the group label for intra pairs.
    """

    annotators: tuple[str, ...]
    kappas: dict
    undefined: tuple[tuple[str, str], ...] = ()
    tags: dict = field(default_factory=dict)
    pair_groups: dict = field(default_factory=dict)

    @property
    def pairs(self) -> list[tuple[str, str]]:
        return list(combinations(self.annotators, 2))

    def kappa(self, a: str, b: str) -> float | None:
        return self.kappas.get((a, b), self.kappas.get((b, a)))

    def summary(self) -> dict:
        """Min/max kappa per tag (``intra``, ``inter``, and ``intra:<group>``)."""
        buckets: dict[str, list[float]] = {}
        for pair, k in self.kappas.items():
            tag = self.tags.get(pair)
            if tag is None:
                buckets.setdefault("all", []).append(k)
                continue
            buckets.setdefault(tag, []).append(k)
            if tag == "intra":
                buckets.setdefault(f"intra:{self.pair_groups[pair]}", []).append(k)
        return {
            tag: {"min": min(v), "max": max(v), "n_pairs": len(v)}
            for tag, v in sorted(buckets.items())
        }

    def to_records(self) -> list[dict]:
        out = []
        for a, b in self.pairs:
            rec = {"a": a, "b": b, "kappa": self.kappas.get((a, b))}
            if (a, b) in self.tags:
                rec["tag"] = self.tags[a, b]
                if (a, b) in self.pair_groups:
                    rec["group"] = self.pair_groups[a, b]
            out.append(rec)
        return out


def pairwise_network(matrix: AnnotationMatrix, partition=None) -> PairwiseNetwork:
    ids = matrix.annotator_ids if partition is None else tuple(sorted(partition.members))
    membership = {} if partition is None else partition.membership()
    kappas, undefined, tags, pair_groups = {}, [], {}, {}
    for a, b in combinations(ids, 2):
        try:
            kappas[a, b] = cohen_kappa(matrix, a, b)
        except UndefinedAgreement:
            undefined.append((a, b))
        if membership:
            same = membership[a] == membership[b]
            tags[a, b] = "intra" if same else "inter"
            if same:
                pair_groups[a, b] = partition.labels[membership[a]]
    return PairwiseNetwork(ids, kappas, tuple(undefined), tags, pair_groups)


def agreement_report(matrix: AnnotationMatrix, partition=None) -> dict:
    """Overall and per-group Fleiss' kappa plus the pairwise network, JSON-ready.

    Undefined kappas are emitted as ``null`` and their scope is listed under
    ``undefined_scopes``.
    """
    excluded: dict[str, list[str]] = {}
    undefined: list[str] = []

    def _fleiss(scope, subset):
        try:
            res = fleiss_kappa(matrix, subset)
        except UndefinedAgreement:
            undefined.append(scope)
            return None
        if res.excluded_items:
            excluded[scope] = list(res.excluded_items)
        return res.kappa

    subset = None if partition is None else sorted(partition.members)
    report = {"overall_kappa": _fleiss("overall", subset), "group_kappas": {}}
    if partition is not None:
        for label, group in zip(partition.labels, partition.groups):
            report["group_kappas"][label] = _fleiss(label, group)
    net = pairwise_network(matrix, partition)
    report["pairwise"] = net.to_records()
    report["pairwise_summary"] = net.summary()
    report["excluded_items"] = excluded
    report["undefined_scopes"] = undefined
    return report


def render_pairwise_table(net: PairwiseNetwork, order: Sequence[str] | None = None, digits: int = 2) -> str:
    """Upper-triangular kappa table, one row per annotator (last row omitted)."""
    order = list(order or net.annotators)
    width = max(6, max(len(a) for a in order) + 1)
    lines = [" " * width + "".join(a.rjust(width) for a in order[1:])]
    for i, a in enumerate(order[:-1]):
        cells = []
        for j, b in enumerate(order[1:], start=1):
            if j <= i:
                cells.append(" " * width)
                continue
            k = net.kappa(a, b)
            cells.append(("--" if k is None else f"{k:.{digits}f}").rjust(width))
        lines.append(a.ljust(width) + "".join(cells))
    return "\n".join(lines) + "\n"


def render_report(report: dict) -> str:
    """Aligned-text rendering of :func:`agreement_report` output."""
    def fmt(v):
        return "undefined" if v is None else f"{v:.3f}"

    rows = [("Overall agreement", fmt(report["overall_kappa"]))]
    rows += [(f"{g} group", fmt(k)) for g, k in report["group_kappas"].items()]
    width = max(len(r[0]) for r in rows) + 2
    out = ["Fleiss' kappa"] + [f"  {name.ljust(width)}{val}" for name, val in rows]
    if report.get("pairwise_summary"):
        out.append("Pairwise Cohen's kappa (min to max)")
        for tag, s in report["pairwise_summary"].items():
            out.append(f"  {tag.ljust(width)}{s['min']:.3f} to {s['max']:.3f}  ({s['n_pairs']} pairs)")
    for scope, ids in report["excluded_items"].items():
        out.append(f"  excluded from {scope}: {len(ids)} items")
    return "\n".join(out) + "\n"


def dumps_report(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"
