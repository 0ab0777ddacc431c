"""Annotator partitions and the exhaustive max-polarization search."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from math import comb
from typing import Iterable, Iterator, Mapping, Sequence

from .agreement import UndefinedAgreement
from .corpus import AnnotationMatrix
from .polarization import _exact_average

__all__ = [
    "Partition",
    "PartitionError",
    "ScoredPartition",
    "SearchResult",
    "count_partitions",
    "enumerate_partitions",
    "search_max_polarization",
    "natural_partition",
    "compare_natural",
    "scores_tsv",
]

#: Above this many candidate partitions enumeration requires ``allow_large=True``.
MAX_PARTITIONS = 10**6


class PartitionError(ValueError):
    pass


@dataclass(frozen=True)
class Partition:
    """Disjoint, non-empty annotator groups, each stored sorted.

    ``labels`` names the groups (default ``group1``, ``group2``, ...).
    """

    groups: tuple[tuple[str, ...], ...]
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        groups = tuple(tuple(sorted(str(a) for a in g)) for g in self.groups)
        if len(groups) < 1 or any(not g for g in groups):
            raise PartitionError("a partition needs at least one group and no empty groups")
        flat = [a for g in groups for a in g]
        if len(set(flat)) != len(flat):
            raise PartitionError("groups overlap")
        labels = tuple(self.labels) or tuple(f"group{w + 1}" for w in range(len(groups)))
        if len(labels) != len(groups) or len(set(labels)) != len(labels):
            raise PartitionError("need one distinct label per group")
        object.__setattr__(self, "groups", groups)
        object.__setattr__(self, "labels", labels)

    @property
    def k(self) -> int:
        return len(self.groups)

    @property
    def members(self) -> frozenset[str]:
        return frozenset(a for g in self.groups for a in g)

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(len(g) for g in self.groups)

    def membership(self) -> dict[str, int]:
        return {a: w for w, g in enumerate(self.groups) for a in g}

    def key(self) -> tuple[tuple[str, ...], ...]:
        """Canonical order: groups sorted lexicographically.  Used for tie-breaks."""
        return tuple(sorted(self.groups))

    def canonical(self) -> "Partition":
        return Partition(self.key())

    def same_split(self, other: "Partition") -> bool:
        """Equal as unordered collections of groups (labels ignored)."""
        return self.key() == other.key()

    def to_dict(self) -> dict:
        return {"k": self.k, "labels": list(self.labels), "groups": [list(g) for g in self.groups]}

    @classmethod
    def from_dict(cls, d: Mapping) -> "Partition":
        return cls(tuple(tuple(g) for g in d["groups"]), tuple(d.get("labels") or ()))

    def __str__(self):
        return " | ".join(f"{lbl}: {','.join(g)}" for lbl, g in zip(self.labels, self.groups))


def natural_partition(matrix: AnnotationMatrix) -> Partition:
    """Partition given by the annotators' group tags, groups ordered by tag."""
    tagged = matrix.groups()
    if len(tagged) < 2:
        raise PartitionError("natural partition needs annotators tagged with at least two groups")
    labels = sorted(tagged)
    return Partition(tuple(tuple(tagged[lbl]) for lbl in labels), tuple(labels))


def count_partitions(m: int, k: int, min_size: int = 1) -> int:
    """Number of unordered partitions of ``m`` items into ``k`` blocks of size >= ``min_size``."""
    if k == 0:
        return 1 if m == 0 else 0
    # Choose the block holding the first remaining element.
    return sum(
        comb(m - 1, s - 1) * count_partitions(m - s, k - 1, min_size)
        for s in range(min_size, m - min_size * (k - 1) + 1)
    )


def _blocks(items: tuple[str, ...], k: int, min_size: int) -> Iterator[tuple[tuple[str, ...], ...]]:
    # The first item always opens the first block, so each unordered partition
    # is produced exactly once and blocks come out in canonical order.
    n = len(items)
    if k == 0:
        if n == 0:
            yield ()
        return
    if n < k * min_size:
        return
    head, rest = items[0], items[1:]
    for s in range(min_size, n - min_size * (k - 1) + 1):
        for others in combinations(rest, s - 1):
            block = (head,) + others
            chosen = set(others)
            remaining = tuple(a for a in rest if a not in chosen)
            for tail in _blocks(remaining, k - 1, min_size):
                yield (block,) + tail


def enumerate_partitions(
    annotators: Iterable[str],
    k: int = 2,
    min_size: int = 2,
    allow_large: bool = False,
) -> list[Partition]:
    """All unordered ``k``-partitions with every group of at least ``min_size``.

    Output is in lexicographic order of the canonical group tuple and does not
    depend on the input order of ``annotators``.
    """
    ids = tuple(sorted(set(annotators)))
    if k < 1 or min_size < 1:
        raise PartitionError("k and min_size must be positive")
    if len(ids) < k * min_size:
        raise PartitionError(
            f"cannot split {len(ids)} annotators into {k} groups of at least {min_size}"
        )
    total = count_partitions(len(ids), k, min_size)
    if total > MAX_PARTITIONS and not allow_large:
        raise PartitionError(f"{total} candidate partitions exceed {MAX_PARTITIONS}; pass allow_large=True")
    if k > 3 and total > 10_000:
        warnings.warn(f"enumerating {total} partitions into {k} groups", RuntimeWarning, stacklevel=2)
    parts = [Partition(b) for b in _blocks(ids, k, min_size)]
    parts.sort(key=Partition.key)
    return parts


@dataclass(frozen=True)
class ScoredPartition:
    partition: Partition
    avg_p: float | None
    exact: Fraction | None = field(default=None, repr=False)
    n_defined: int = 0


@dataclass(frozen=True)
class SearchResult:
    best: Partition
    best_score: float
    scored: tuple[ScoredPartition, ...]
    """Every candidate, best first (score descending, then lexicographic); undefined last."""

    def score_of(self, partition: Partition) -> ScoredPartition:
        key = partition.key()
        for sp in self.scored:
            if sp.partition.key() == key:
                return sp
        raise KeyError(str(partition))


def _score(matrix: AnnotationMatrix, part: Partition) -> ScoredPartition:
    total, n, _ = _exact_average(matrix, part)
    if n == 0:
        return ScoredPartition(part, None)
    mean = total / n
    return ScoredPartition(part, float(mean), mean, n)


def _rank(scored: Iterable[ScoredPartition]) -> tuple[ScoredPartition, ...]:
    scored = list(scored)
    defined = sorted(
        (s for s in scored if s.exact is not None),
        key=lambda s: (-s.exact, s.partition.key()),
    )
    undefined = sorted((s for s in scored if s.exact is None), key=lambda s: s.partition.key())
    return tuple(defined + undefined)


def search_max_polarization(
    matrix: AnnotationMatrix,
    k: int = 2,
    min_size: int = 2,
    annotators: Sequence[str] | None = None,
    allow_large: bool = False,
) -> SearchResult:
    """Exhaustively score every admissible partition by average P and return the argmax.

    Scores are exact rationals, so ties are genuine; they go to the
    lexicographically smallest canonical partition (smallest first group).
    """
    ids = matrix.annotator_ids if annotators is None else annotators
    candidates = enumerate_partitions(ids, k, min_size, allow_large)
    ranked = _rank(_score(matrix, p) for p in candidates)
    if ranked[0].exact is None:
        raise UndefinedAgreement("no partition yields a defined average P-index")
    return SearchResult(ranked[0].partition, ranked[0].avg_p, ranked)


def compare_natural(result: SearchResult, natural: Partition, matrix: AnnotationMatrix | None = None) -> dict:
    """Natural split's score next to the max and min over all *other* splits.

    ``matrix`` is needed only when ``natural`` was not among the searched candidates.
    """
    try:
        nat = result.score_of(natural)
    except KeyError:
        if matrix is None:
            raise
        nat = _score(matrix, natural)
    others = [s.avg_p for s in result.scored if s.avg_p is not None and not s.partition.same_split(natural)]
    return {
        "natural": nat.avg_p,
        "max_other": max(others) if others else None,
        "min_other": min(others) if others else None,
        "natural_is_max": bool(others) and nat.avg_p is not None and nat.exact >= result.scored[0].exact,
        "n_other": len(others),
    }


def scores_tsv(result: SearchResult) -> str:
    """``rank<TAB>avg_p<TAB>group1<TAB>group2...`` with comma-joined members."""
    k = result.best.k
    header = ["rank", "avg_p"] + [f"group{w + 1}" for w in range(k)]
    lines = ["\t".join(header)]
    for rank, sp in enumerate(result.scored, start=1):
        avg = "NA" if sp.avg_p is None else f"{sp.avg_p:.6f}"
        lines.append("\t".join([str(rank), avg] + [",".join(g) for g in sp.partition.key()]))
    return "\n".join(lines) + "\n"
