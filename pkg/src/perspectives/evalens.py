"""Inclusive (OR) ensemble, classification metrics and classifier disagreement."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

from ._util import percent
from .classify import PredictionSet
from .corpus import LabelScheme
from .goldstd import GoldStandard

__all__ = [
    "CoverageError",
    "MetricsReport",
    "DisagreementCensus",
    "inclusive_ensemble",
    "evaluate",
    "classifier_disagreement",
    "render_comparison",
]


class CoverageError(ValueError):
    """Prediction sets that should cover the same items do not."""


def _check_coverage(sets: Sequence[PredictionSet]) -> None:
    ref = set(sets[0].predictions)
    for other in sets[1:]:
        diff = ref.symmetric_difference(other.predictions)
        if diff:
            raise CoverageError(
                f"item coverage differs between {sets[0].source!r} and {other.source!r}: "
                f"{sorted(diff)[:10]}"
            )


def inclusive_ensemble(members: Sequence[PredictionSet], positive: str = "1", negative: str | None = None) -> PredictionSet:
    """Positive wherever at least one member predicts positive.

    Items no member marks positive take ``negative`` if given, else the first
    member's label.
    """
    members = list(members)
    if len(members) < 2:
        raise ValueError("an ensemble needs at least two members")
    _check_coverage(members)
    preds = {}
    for item, first in members[0].predictions.items():
        if any(m.predictions[item] == positive for m in members):
            preds[item] = positive
        else:
            preds[item] = first if negative is None else negative
    return PredictionSet(preds, None, "inclusive")


@dataclass(frozen=True)
class MetricsReport:
    accuracy: float
    per_class: Mapping[str, Mapping[str, float]]
    macro_f1: float
    macro_precision: float
    macro_recall: float
    confusion: Mapping[str, int]
    positive: str
    n: int
    flags: tuple[str, ...] = ()

    @property
    def precision_pos(self) -> float:
        return self.per_class[self.positive]["precision"]

    @property
    def recall_pos(self) -> float:
        return self.per_class[self.positive]["recall"]

    @property
    def f1_pos(self) -> float:
        return self.per_class[self.positive]["f1"]

    @property
    def micro_f1(self) -> float:
        # Single-label classification: micro P = micro R = micro F1 = accuracy.
        return self.accuracy

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "precision_pos": self.precision_pos,
            "recall_pos": self.recall_pos,
            "f1_pos": self.f1_pos,
            "macro_precision": self.macro_precision,
            "macro_recall": self.macro_recall,
            "macro_f1": self.macro_f1,
            "micro_f1": self.micro_f1,
            "per_class": {c: dict(v) for c, v in self.per_class.items()},
            "confusion": dict(self.confusion),
            "n": self.n,
            "flags": list(self.flags),
        }


def _ratio(num, den, flag, flags):
    if den == 0:
        flags.append(flag)
        return 0.0
    return num / den


def evaluate(pred: PredictionSet, gold: GoldStandard) -> MetricsReport:
    """Score ``pred`` on the items of ``gold``.

    Zero-division cells are reported as 0 and named in ``flags`` (e.g.
    ``"precision:1"``).  For binary schemes ``confusion`` holds TP/FP/FN/TN of
    the positive class; otherwise it maps ``"gold->pred"`` pairs to counts.
    """
    scheme: LabelScheme = gold.scheme
    missing = set(gold.labels) - set(pred.predictions)
    if missing:
        raise CoverageError(f"predictions missing for gold items {sorted(missing)[:10]}")
    pairs = [(g, pred.predictions[i]) for i, g in gold.labels.items()]
    n = len(pairs)
    flags: list[str] = []
    per_class = {}
    for c in scheme.categories:
        tp = sum(1 for g, p in pairs if g == c and p == c)
        n_pred = sum(1 for _, p in pairs if p == c)
        n_gold = sum(1 for g, _ in pairs if g == c)
        prec = _ratio(tp, n_pred, f"precision:{c}", flags)
        rec = _ratio(tp, n_gold, f"recall:{c}", flags)
        f1 = _ratio(2 * prec * rec, prec + rec, f"f1:{c}", flags)
        per_class[c] = {"precision": prec, "recall": rec, "f1": f1, "support": n_gold}
    k = len(scheme.categories)
    accuracy = _ratio(sum(1 for g, p in pairs if g == p), n, "accuracy", flags)
    if scheme.is_binary:
        pos = scheme.positive
        confusion = {
            "tp": sum(1 for g, p in pairs if g == pos and p == pos),
            "fp": sum(1 for g, p in pairs if g != pos and p == pos),
            "fn": sum(1 for g, p in pairs if g == pos and p != pos),
            "tn": sum(1 for g, p in pairs if g != pos and p != pos),
        }
    else:
        confusion = {f"{g}->{p}": 0 for g in scheme.categories for p in scheme.categories}
        for g, p in pairs:
            confusion[f"{g}->{p}"] += 1
    return MetricsReport(
        accuracy=accuracy,
        per_class=per_class,
        macro_f1=sum(v["f1"] for v in per_class.values()) / k,
        macro_precision=sum(v["precision"] for v in per_class.values()) / k,
        macro_recall=sum(v["recall"] for v in per_class.values()) / k,
        confusion=confusion,
        positive=scheme.positive,
        n=n,
        flags=tuple(flags),
    )


@dataclass(frozen=True)
class DisagreementCensus:
    total: int
    diverging: int
    percentage: float
    a_positive: int
    b_positive: int
    other: int = 0
    items: tuple[str, ...] = field(default=(), repr=False)
    sources: tuple[str, str] = ("a", "b")

    def to_dict(self) -> dict:
        a, b = self.sources
        return {
            "total": self.total,
            "diverging": self.diverging,
            "percentage": self.percentage,
            "directions": {f"{a}-positive": self.a_positive, f"{b}-positive": self.b_positive, "other": self.other},
            "unbalanced_pct": percent(self.a_positive + self.b_positive, self.diverging),
            "items": list(self.items),
        }


def classifier_disagreement(pred_a: PredictionSet, pred_b: PredictionSet, positive: str = "1") -> DisagreementCensus:
    """Items where two classifiers disagree, split by which side said positive.

    ``other`` counts disagreements where neither side predicted ``positive``
    (only possible with more than two categories).
    """
    _check_coverage([pred_a, pred_b])
    diverging = [i for i, la in pred_a.predictions.items() if la != pred_b.predictions[i]]
    a_pos = sum(1 for i in diverging if pred_a.predictions[i] == positive)
    b_pos = sum(1 for i in diverging if pred_b.predictions[i] == positive)
    total = len(pred_a.predictions)
    return DisagreementCensus(
        total,
        len(diverging),
        percent(len(diverging), total),
        a_pos,
        b_pos,
        len(diverging) - a_pos - b_pos,
        tuple(diverging),
        (pred_a.source or "a", pred_b.source or "b"),
    )


def render_comparison(reports: Mapping[str, MetricsReport], digits: int = 3) -> str:
    """Side-by-side table: one row per classifier, positive-class and macro scores."""
    cols = ["Accuracy", "Prec(1)", "Rec(1)", "F1(1)", "Macro-P", "Macro-R", "Macro-F1"]
    name_w = max([len("Classifier")] + [len(n) for n in reports]) + 2
    col_w = max(len(c) for c in cols) + 2
    lines = ["Classifier".ljust(name_w) + "".join(c.rjust(col_w) for c in cols)]
    lines.append("-" * len(lines[0]))
    for name, r in reports.items():
        vals = [r.accuracy, r.precision_pos, r.recall_pos, r.f1_pos, r.macro_precision, r.macro_recall, r.macro_f1]
        lines.append(name.ljust(name_w) + "".join(f"{v:.{digits}f}".rjust(col_w) for v in vals))
    return "\n".join(lines) + "\n"
