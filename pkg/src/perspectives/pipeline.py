"""End-to-end run: annotations in, per-group classifiers and reports out.

Stages run in order and each writes its artifacts to ``output_dir``::

    ingest -> clean -> partition -> polarize -> gold -> split -> augment
           -> train -> ensemble -> evaluate -> diverge -> report

A ``manifest.json`` is written last.  It records input hashes, the resolved
configuration, every artifact's hash and wall-clock timestamps; timestamps
appear nowhere else, so two runs on the same inputs produce byte-identical
artifacts apart from the manifest's time fields.  If a stage fails the
manifest is still written, with ``status: FAILED`` and the stage name.
"""

from __future__ import annotations

import datetime as _dt
import json
import re
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Mapping

from . import __version__
from ._util import dumps, sha256_file, write_text
from .agreement import agreement_report, render_report
from .augment import AugmentPolicy, replicate_by_polarization
from .classify import Hyperparams, PredictionSet, import_predictions, predict, train_linear
from .corpus import CorpusItem, LabelScheme, deduplicate, keyword_filter, load_annotations, load_annotators, load_texts
from .evalens import MetricsReport, classifier_disagreement, evaluate, inclusive_ensemble, render_comparison
from .goldstd import SplitSpec, apply_split, majority_gold, make_split, union_gold
from .partition import (
    Partition,
    compare_natural,
    natural_partition,
    scores_tsv,
    search_max_polarization,
)
from .polarization import average_p_index, polarization_census, rank_by_polarization, ranking_tsv, score_items

__all__ = ["RunConfig", "PipelineError", "PipelineResult", "full_pipeline"]


class PipelineError(RuntimeError):
    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage {stage!r} failed: {type(cause).__name__}: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass
class RunConfig:
    annotations: str
    format: str = "long-csv"
    texts: str | None = None
    annotators: str | None = None
    scheme: LabelScheme = field(default_factory=LabelScheme)
    partition_mode: str = "search"
    k: int = 2
    min_size: int = 2
    tie_policy: str = "prefer-positive"
    overall_tie_policy: str | None = None
    split: SplitSpec = field(default_factory=SplitSpec)
    augment: AugmentPolicy | None = None
    classifier: str = "reference"
    predictions: dict[str, str] = field(default_factory=dict)
    hyperparams: Hyperparams = field(default_factory=Hyperparams)
    dedup: bool = False
    keywords: list[str] | None = None
    output_dir: str = "out"

    @classmethod
    def from_dict(cls, d: Mapping, base_dir: str | Path | None = None) -> "RunConfig":
        """Build from plain JSON data; relative paths resolve against ``base_dir``."""
        d = dict(d)
        unknown = set(d) - {f for f in cls.__dataclass_fields__}
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        base = Path(base_dir) if base_dir is not None else None

        def resolve(p):
            if p is None or base is None or Path(p).is_absolute():
                return p
            return str(base / p)

        for key in ("annotations", "texts", "annotators", "output_dir"):
            if key in d:
                d[key] = resolve(d[key])
        d["predictions"] = {k: resolve(v) for k, v in (d.get("predictions") or {}).items()}
        if "scheme" in d:
            d["scheme"] = LabelScheme.from_dict(d["scheme"])
        if "split" in d:
            d["split"] = SplitSpec(**d["split"])
        if d.get("augment") is not None:
            d["augment"] = AugmentPolicy(**d["augment"])
        if "hyperparams" in d:
            d["hyperparams"] = Hyperparams(**d["hyperparams"])
        cfg = cls(**d)
        cfg.validate_values()
        return cfg

    @classmethod
    def load(cls, path: str | Path) -> "RunConfig":
        path = Path(path)
        return cls.from_dict(json.loads(path.read_text(encoding="utf-8")), path.parent)

    def validate_values(self) -> None:
        if self.partition_mode not in ("natural", "search"):
            raise ValueError(f"partition_mode must be 'natural' or 'search', not {self.partition_mode!r}")
        if self.classifier not in ("reference", "import"):
            raise ValueError(f"classifier must be 'reference' or 'import', not {self.classifier!r}")

    def check_files(self) -> None:
        paths = [self.annotations, self.texts, self.annotators, *self.predictions.values()]
        missing = [p for p in paths if p is not None and not Path(p).is_file()]
        if missing:
            raise FileNotFoundError(f"missing input file(s): {missing}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["scheme"] = self.scheme.to_dict()
        return d


@dataclass
class PipelineResult:
    output_dir: Path
    partition: Partition
    metrics: dict[str, MetricsReport]
    own_group_metrics: dict[str, MetricsReport]
    union_metrics: dict[str, MetricsReport]
    artifacts: dict[str, Path]
    summary: dict = field(default_factory=dict)


def _slug(label: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", label) or "group"


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


class _Run:
    def __init__(self, config: RunConfig):
        self.config = config
        self.out = Path(config.output_dir)
        self.artifacts: dict[str, Path] = {}
        self.stage = "config"

    def emit(self, name: str, text: str) -> Path:
        path = write_text(self.out / name, text)
        self.artifacts[name] = path
        return path

    def manifest(self, started: str, status: str, error: BaseException | None = None) -> None:
        cfg = self.config
        inputs = {}
        for p in [cfg.annotations, cfg.texts, cfg.annotators, *cfg.predictions.values()]:
            if p is not None and Path(p).is_file():
                inputs[str(p)] = sha256_file(p)
        doc = {
            "tool": "perspectives",
            "version": __version__,
            "status": status,
            "config": cfg.to_dict(),
            "seed": cfg.split.seed,
            "inputs": inputs,
            "artifacts": {name: sha256_file(p) for name, p in sorted(self.artifacts.items())},
            "started_at": started,
            "finished_at": _now(),
        }
        if error is not None:
            doc["failed_stage"] = self.stage
            doc["error"] = f"{type(error).__name__}: {error}"
        write_text(self.out / "manifest.json", dumps(doc))


def full_pipeline(config: RunConfig) -> PipelineResult:
    """Run every stage for ``config``; see the module docstring for the order."""
    run = _Run(config)
    started = _now()
    try:
        result = _execute(run)
    except Exception as exc:
        run.out.mkdir(parents=True, exist_ok=True)
        run.manifest(started, "FAILED", exc)
        raise PipelineError(run.stage, exc) from exc
    run.manifest(started, "OK")
    result.artifacts["manifest.json"] = run.out / "manifest.json"
    return result


def _execute(run: _Run) -> PipelineResult:
    cfg = run.config
    cfg.validate_values()
    scheme = cfg.scheme

    run.stage = "ingest"
    cfg.check_files()
    annotators = load_annotators(cfg.annotators) if cfg.annotators else None
    matrix = load_annotations(cfg.annotations, cfg.format, scheme, annotators)
    corpus = load_texts(cfg.texts) if cfg.texts else None
    if corpus is None and matrix.texts:
        corpus = [CorpusItem(i, t) for i, t in matrix.texts.items()]
    run.emit("annotations.csv", matrix.to_long_csv())

    run.stage = "clean"
    if corpus is not None and (cfg.dedup or cfg.keywords):
        in_matrix = set(matrix.items)
        kept = [it for it in corpus if it.item_id in in_matrix]
        if cfg.dedup:
            kept = deduplicate(kept)
        if cfg.keywords:
            kept = keyword_filter(kept, cfg.keywords)
        matrix = matrix.restrict_items(it.item_id for it in kept)
        run.emit("kept_items.txt", "".join(i + "\n" for i in matrix.items))
    texts = {it.item_id: it.text for it in corpus} if corpus is not None else {}

    run.stage = "partition"
    summary: dict = {"n_items": len(matrix.items), "n_annotators": len(matrix.annotators)}
    search = None
    try:
        search = search_max_polarization(matrix, cfg.k, cfg.min_size)
    except ValueError:
        if cfg.partition_mode == "search":
            raise
    if cfg.partition_mode == "natural":
        partition = natural_partition(matrix)
    else:
        partition = search.best
    part_doc = {
        "mode": cfg.partition_mode,
        "partition": partition.to_dict(),
        "avg_p": average_p_index(matrix, partition).value,
        "searched_best": None if search is None else search.best.to_dict(),
        "searched_best_avg_p": None if search is None else search.best_score,
    }
    if search is not None:
        run.emit("partition_scores.tsv", scores_tsv(search))
        if matrix.groups() and len(matrix.groups()) >= 2:
            natural = natural_partition(matrix)
            part_doc["natural_comparison"] = compare_natural(search, natural, matrix)
            part_doc["natural_partition"] = natural.to_dict()
    run.emit("partition.json", dumps(part_doc))
    summary["partition"] = part_doc

    run.stage = "polarize"
    ranked = rank_by_polarization(matrix, partition)
    run.emit("polarization.tsv", ranking_tsv(ranked, texts or None))
    census = polarization_census(matrix, partition)
    run.emit("census.json", dumps(census))
    agreement = agreement_report(matrix, partition)
    run.emit("agreement.json", dumps(agreement))
    run.emit("agreement.txt", render_report(agreement))
    summary["census"] = {k: v for k, v in census.items() if not k.endswith("items")}
    summary["agreement"] = agreement

    run.stage = "gold"
    overall = majority_gold(matrix, None, cfg.overall_tie_policy or cfg.tie_policy, "overall")
    golds = {"overall": overall}
    for label, group in zip(partition.labels, partition.groups):
        golds[label] = majority_gold(matrix, group, cfg.tie_policy, label)
    for name, g in golds.items():
        run.emit(f"gold_{_slug(name)}.csv", g.to_csv())
    union = union_gold([golds[lbl] for lbl in partition.labels])

    run.stage = "split"
    manifest = make_split(overall, cfg.split)
    run.emit("split.json", manifest.to_json())
    trains = {name: apply_split(g, manifest)[0] for name, g in golds.items()}
    tests = {name: apply_split(g, manifest)[1] for name, g in golds.items()}
    union_test = apply_split(union, manifest)[1]

    run.stage = "augment"
    train_sets = dict(trains)
    if cfg.augment is not None:
        p_scores = {it: (s.p if s else None) for it, s in zip(matrix.items, score_items(matrix, partition))}
        for name, tr in trains.items():
            aug = replicate_by_polarization(tr, p_scores, cfg.augment)
            run.emit(f"train_{_slug(name)}_augmented.csv", aug.to_csv())
            train_sets[name] = aug

    run.stage = "train"
    classifier_names = {"overall": "baseline", **{lbl: lbl for lbl in partition.labels}}
    test_ids = manifest.test_ids
    preds: dict[str, PredictionSet] = {}
    if cfg.classifier == "reference":
        missing = [i for i in matrix.items if i not in texts]
        if missing:
            raise ValueError(f"reference classifier needs texts; none for {missing[:5]}")
        test_texts = {i: texts[i] for i in test_ids}
        for gold_name, name in classifier_names.items():
            model = train_linear(train_sets[gold_name], texts, cfg.hyperparams, cfg.split.seed, scheme)
            run.emit(f"model_{_slug(name)}.json", model.to_json())
            preds[name] = predict(model, test_texts, source=name)
    else:
        for gold_name, name in classifier_names.items():
            if name not in cfg.predictions:
                raise KeyError(f"import mode needs a predictions file for {name!r}")
            p = import_predictions(cfg.predictions[name], scheme, overall)
            missing = set(test_ids) - set(p.predictions)
            if missing:
                raise ValueError(f"{name}: predictions missing for test items {sorted(missing)[:5]}")
            preds[name] = PredictionSet(p.restrict(test_ids).predictions, p.restrict(test_ids).scores, name)
    for name, p in preds.items():
        run.emit(f"predictions_{_slug(name)}.csv", p.to_csv())

    run.stage = "ensemble"
    group_preds = [preds[lbl] for lbl in partition.labels]
    preds["inclusive"] = inclusive_ensemble(group_preds, scheme.positive, scheme.negative)
    run.emit("predictions_inclusive.csv", preds["inclusive"].to_csv())

    run.stage = "evaluate"
    metrics = {name: evaluate(p, tests["overall"]) for name, p in preds.items()}
    union_metrics = {name: evaluate(p, union_test) for name, p in preds.items()}
    own = {lbl: evaluate(preds[lbl], tests[lbl]) for lbl in partition.labels}
    run.emit(
        "metrics.json",
        dumps(
            {
                "overall_gold": {n: r.to_dict() for n, r in metrics.items()},
                "union_gold": {n: r.to_dict() for n, r in union_metrics.items()},
                "own_group_gold": {n: r.to_dict() for n, r in own.items()},
            }
        ),
    )
    comparison = (
        "Test set scored against the overall gold standard\n"
        + render_comparison(metrics)
        + "\nTest set scored against the union-positive gold standard\n"
        + render_comparison(union_metrics)
        + "\nGroup classifiers scored against their own group's gold standard\n"
        + render_comparison(own)
    )
    run.emit("comparison.txt", comparison)

    run.stage = "diverge"
    diverge = {}
    labels = list(partition.labels)
    for i, a in enumerate(labels):
        for b in labels[i + 1 :]:
            diverge[f"{a}|{b}"] = classifier_disagreement(preds[a], preds[b], scheme.positive).to_dict()
    run.emit("disagreement.json", dumps(diverge))

    run.stage = "report"
    run.emit("report.txt", _render_report(summary, comparison, diverge, manifest))
    run.stage = "manifest"
    return PipelineResult(run.out, partition, metrics, own, union_metrics, dict(run.artifacts), summary)


def _render_report(summary: dict, comparison: str, diverge: dict, split) -> str:
    part = summary["partition"]
    census = summary["census"]
    agreement = summary["agreement"]
    lines = [
        "Perspective-aware classification report",
        "=======================================",
        "",
        f"Items: {summary['n_items']}    Annotators: {summary['n_annotators']}",
        f"Partition ({part['mode']}): "
        + " | ".join(
            f"{lbl}: {','.join(g)}" for lbl, g in zip(part["partition"]["labels"], part["partition"]["groups"])
        ),
        f"Average P-index: {part['avg_p']:.3f}",
    ]
    nat = part.get("natural_comparison")
    if nat:
        def fmt(v):
            return "n/a" if v is None else f"{v:.3f}"

        lines += [
            "",
            "Average P-index by split",
            f"  Natural  {fmt(nat['natural'])}    Max.(other splits)  {fmt(nat['max_other'])}"
            f"    Min.(other splits)  {fmt(nat['min_other'])}",
        ]
    lines += [
        "",
        f"Maximal polarization (P = 1): {census['max_polarization']} ({census['max_polarization_pct']}%)",
        f"No polarization (P = 0): {census['zero_polarization']} ({census['zero_polarization_pct']}%)",
    ]
    for key, n in (census.get("directions") or {}).items():
        lines.append(f"  {key}: {n}")
    lines += ["", render_report(agreement).rstrip("\n"), ""]
    lines.append(f"Split: {len(split.train_ids)} train / {len(split.test_ids)} test (seed {split.seed})")
    lines += ["", comparison.rstrip("\n"), "", "Classifier disagreements"]
    for pair, d in diverge.items():
        dirs = ", ".join(f"{k}={v}" for k, v in d["directions"].items())
        lines.append(f"  {pair}: {d['diverging']}/{d['total']} ({d['percentage']}%)  [{dirs}]")
    return "\n".join(lines) + "\n"
