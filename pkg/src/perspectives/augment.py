"""Polarization-driven resampling of a training set.

Low-polarization items are replicated, more polarized ones less so, and items
at or above ``delete_threshold`` are dropped.  Only training data should pass
through here; test sets stay untouched.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

from ._util import round_half_up
from .goldstd import GoldStandard

__all__ = ["AugmentPolicy", "AugmentedSet", "copy_count", "replicate_by_polarization"]


@dataclass(frozen=True)
class AugmentPolicy:
    factor: int = 3
    delete_threshold: float = 1.0

    def __post_init__(self):
        if int(self.factor) != self.factor or self.factor < 1:
            raise ValueError("factor must be a positive integer")
        if not 0 < self.delete_threshold <= 1:
            raise ValueError("delete_threshold must lie in (0, 1]")


def copy_count(p: float | None, policy: AugmentPolicy = AugmentPolicy()) -> int:
    """``0`` if ``p >= delete_threshold`` else ``max(1, round(factor * (1 - p)))``.

    Rounding is half-up.  Undefined ``p`` keeps a single copy.
    """
    if p is None:
        return 1
    if p >= policy.delete_threshold:
        return 0
    return max(1, round_half_up(policy.factor * (1.0 - p)))


@dataclass(frozen=True)
class AugmentedSet:
    items: tuple[str, ...]
    """Expanded item sequence: input order, copies adjacent."""
    labels: Mapping[str, str]
    copies: Mapping[str, int]
    deleted: tuple[str, ...] = ()
    undefined: tuple[str, ...] = ()
    gold: GoldStandard | None = field(default=None, repr=False)

    def __len__(self):
        return len(self.items)

    def to_csv(self) -> str:
        """Gold CSV of the kept items plus a ``copies`` column."""
        kept = {i: c for i, c in self.copies.items() if c > 0}
        return self.gold.restrict(kept).to_csv(copies=kept)


def replicate_by_polarization(
    train: GoldStandard,
    p_scores: Mapping[str, float | None],
    policy: AugmentPolicy = AugmentPolicy(),
) -> AugmentedSet:
    """Expand ``train`` by per-item copy counts derived from ``p_scores``.

    Items without a score (or with ``None``) are kept once and listed in
    ``undefined``.
    """
    expanded, copies, deleted, undefined = [], {}, [], []
    for item in train.labels:
        p = p_scores.get(item)
        if p is None:
            undefined.append(item)
        n = copy_count(p, policy)
        copies[item] = n
        if n == 0:
            deleted.append(item)
        expanded.extend([item] * n)
    labels = {i: train.labels[i] for i in copies if copies[i] > 0}
    return AugmentedSet(tuple(expanded), labels, copies, tuple(deleted), tuple(undefined), train)
