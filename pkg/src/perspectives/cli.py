"""``perspectives`` command line.

Every subcommand reads files, writes one primary output (``--out`` or stdout)
and a JSON manifest of inputs, outputs and arguments.  Failures print one JSON
line to stderr and exit 1; usage errors exit 2.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import json
import sys
from pathlib import Path

from . import __version__
from ._util import dumps, sha256_file, write_text
from .agreement import agreement_report, render_report
from .augment import AugmentedSet, AugmentPolicy, replicate_by_polarization
from .classify import Hyperparams, LinearModel, import_predictions, predict, train_linear
from .corpus import (
    LabelScheme,
    deduplicate,
    keyword_filter,
    keyword_frequencies,
    label_distribution,
    load_annotations,
    load_annotators,
    load_texts,
    write_texts,
)
from .evalens import classifier_disagreement, evaluate, inclusive_ensemble, render_comparison
from .goldstd import GoldStandard, SplitManifest, SplitSpec, majority_gold, make_split, read_gold_csv
from .partition import Partition, compare_natural, natural_partition, scores_tsv, search_max_polarization
from .pipeline import RunConfig, full_pipeline
from .polarization import polarization_census, rank_by_polarization, ranking_tsv, score_items

SUBCOMMANDS = (
    "ingest", "dedup", "filter", "stats", "agreement", "polarize", "rank", "partition", "gold",
    "split", "augment", "train", "predict", "import", "ensemble", "evaluate", "diverge", "report",
)  # fmt: skip


class _Ctx:
    """Collects input/output paths for the manifest."""

    def __init__(self, args):
        self.args = args
        self.inputs: list[str] = []
        self.outputs: list[str] = []

    def inp(self, path):
        if path is not None:
            self.inputs.append(str(path))
        return path

    def emit(self, text: str, path=None):
        path = path if path is not None else self.args.out
        if path is None:
            sys.stdout.write(text)
        else:
            write_text(path, text)
            self.outputs.append(str(path))


# -- shared loaders ---------------------------------------------------------


def _scheme(args) -> LabelScheme:
    return LabelScheme(tuple(c.strip() for c in args.categories.split(",")), args.positive)


def _matrix(ctx, args):
    annotators = load_annotators(ctx.inp(args.annotators)) if getattr(args, "annotators", None) else None
    matrix = load_annotations(ctx.inp(args.annotations), args.format, _scheme(args), annotators)
    if getattr(args, "texts", None):
        matrix = matrix.with_texts({it.item_id: it.text for it in load_texts(ctx.inp(args.texts))})
    return matrix


def _partition(ctx, args, matrix) -> Partition:
    spec = args.partition
    if spec == "natural":
        return natural_partition(matrix)
    if spec == "search":
        return search_max_polarization(matrix, args.k, args.min_size).best
    doc = json.loads(Path(ctx.inp(spec)).read_text(encoding="utf-8"))
    return Partition.from_dict(doc.get("partition", doc))


def _gold(ctx, path, args) -> GoldStandard:
    return read_gold_csv(ctx.inp(path), _scheme(args))


def _read_copies(path) -> dict[str, int] | None:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if "copies" not in (reader.fieldnames or ()):
            return None
        return {row["item_id"]: int(row["copies"]) for row in reader}


def _split(ctx, args) -> SplitManifest | None:
    return SplitManifest.load(ctx.inp(args.split)) if getattr(args, "split", None) else None


# -- subcommands ------------------------------------------------------------


def cmd_ingest(ctx, args):
    ctx.emit(_matrix(ctx, args).to_long_csv())


def cmd_dedup(ctx, args):
    ctx.emit(write_texts(deduplicate(load_texts(ctx.inp(args.texts)))))


def _keywords(ctx, args):
    kws = [k for k in (args.keywords or "").split(",") if k.strip()]
    if args.keywords_file:
        kws += [ln.strip() for ln in Path(ctx.inp(args.keywords_file)).read_text().splitlines() if ln.strip()]
    if not kws:
        raise ValueError("no keywords given")
    return kws


def cmd_filter(ctx, args):
    ctx.emit(write_texts(keyword_filter(load_texts(ctx.inp(args.texts)), _keywords(ctx, args))))


def cmd_stats(ctx, args):
    out = {}
    if args.texts:
        items = load_texts(ctx.inp(args.texts))
        out["n_texts"] = len(items)
        if args.keywords or args.keywords_file:
            out["keyword_frequencies"] = keyword_frequencies(items, _keywords(ctx, args))
    if args.annotations:
        matrix = load_annotations(ctx.inp(args.annotations), args.format, _scheme(args))
        gold = _gold(ctx, args.gold, args) if args.gold else None
        out["label_distribution"] = label_distribution(matrix, gold)
    if not out:
        raise ValueError("stats needs --texts and/or --annotations")
    ctx.emit(json.dumps(out, indent=2) + "\n")


def cmd_agreement(ctx, args):
    matrix = _matrix(ctx, args)
    partition = _partition(ctx, args, matrix) if args.partition else None
    report = agreement_report(matrix, partition)
    ctx.emit(render_report(report) if args.text else dumps(report))


def cmd_polarize(ctx, args):
    matrix = _matrix(ctx, args)
    partition = _partition(ctx, args, matrix)
    lines = ["item_id\tp"]
    for item, s in zip(matrix.items, score_items(matrix, partition)):
        lines.append(f"{item}\t{'NA' if s is None else f'{s.p:.6f}'}")
    ctx.emit("\n".join(lines) + "\n")


def cmd_rank(ctx, args):
    matrix = _matrix(ctx, args)
    partition = _partition(ctx, args, matrix)
    ranked = rank_by_polarization(matrix, partition, descending=not args.ascending)
    ctx.emit(ranking_tsv(ranked, matrix.texts if args.with_text else None))
    if args.census:
        ctx.emit(dumps(polarization_census(matrix, partition)), args.census)


def cmd_partition(ctx, args):
    matrix = _matrix(ctx, args)
    result = search_max_polarization(matrix, args.k, args.min_size, allow_large=args.allow_large)
    doc = {"partition": result.best.to_dict(), "avg_p": result.best_score, "n_candidates": len(result.scored)}
    if len(matrix.groups()) >= 2:
        natural = natural_partition(matrix)
        doc["natural_partition"] = natural.to_dict()
        doc["natural_comparison"] = compare_natural(result, natural, matrix)
    ctx.emit(dumps(doc))
    if args.scores:
        ctx.emit(scores_tsv(result), args.scores)


def cmd_gold(ctx, args):
    matrix = _matrix(ctx, args)
    if args.group:
        partition = _partition(ctx, args, matrix)
        if args.group not in partition.labels:
            raise ValueError(f"group {args.group!r} not in partition labels {partition.labels}")
        members = partition.groups[partition.labels.index(args.group)]
        gold = majority_gold(matrix, members, args.tie_policy, args.group)
    else:
        gold = majority_gold(matrix, None, args.tie_policy, "overall")
    if gold.excluded_items:
        print(f"excluded {len(gold.excluded_items)} items with no labels", file=sys.stderr)
    ctx.emit(gold.to_csv())


def cmd_split(ctx, args):
    gold = _gold(ctx, args.gold, args)
    spec = SplitSpec(args.train_fraction, args.seed, not args.no_stratify)
    ctx.emit(make_split(gold, spec).to_json())


def cmd_augment(ctx, args):
    matrix = _matrix(ctx, args)
    partition = _partition(ctx, args, matrix)
    gold = _gold(ctx, args.gold, args)
    split = _split(ctx, args)
    if split is not None:
        gold = gold.restrict(split.train_ids)
    p = {it: (s.p if s else None) for it, s in zip(matrix.items, score_items(matrix, partition))}
    aug = replicate_by_polarization(gold, p, AugmentPolicy(args.factor, args.delete_threshold))
    ctx.emit(aug.to_csv())


def cmd_train(ctx, args):
    gold = _gold(ctx, args.gold, args)
    split = _split(ctx, args)
    if split is not None:
        gold = gold.restrict(split.train_ids)
    copies = _read_copies(args.gold)
    train = gold
    if copies is not None:
        seq = tuple(i for i in gold.labels for _ in range(copies[i]))
        train = AugmentedSet(seq, gold.labels, copies, gold=gold)
    texts = {it.item_id: it.text for it in load_texts(ctx.inp(args.texts))}
    hp = Hyperparams(args.learning_rate, args.epochs, args.l2)
    ctx.emit(train_linear(train, texts, hp, args.seed, _scheme(args)).to_json())


def cmd_predict(ctx, args):
    model = LinearModel.load(ctx.inp(args.model))
    texts = {it.item_id: it.text for it in load_texts(ctx.inp(args.texts))}
    split = _split(ctx, args)
    if split is not None:
        texts = {i: texts[i] for i in split.test_ids}
    ctx.emit(predict(model, texts, source=args.name or Path(args.model).stem).to_csv())


def cmd_import(ctx, args):
    gold = _gold(ctx, args.gold, args) if args.gold else None
    preds = import_predictions(ctx.inp(args.predictions), _scheme(args), gold)
    for w in preds.warnings:
        print(f"warning: {w}", file=sys.stderr)
    ctx.emit(preds.to_csv())


def cmd_ensemble(ctx, args):
    scheme = _scheme(args)
    members = [import_predictions(ctx.inp(p), scheme) for p in args.predictions]
    ctx.emit(inclusive_ensemble(members, scheme.positive, scheme.negative).to_csv())


def cmd_evaluate(ctx, args):
    gold = _gold(ctx, args.gold, args)
    split = _split(ctx, args)
    if split is not None:
        gold = gold.restrict(split.test_ids)
    reports = {}
    for path in args.predictions:
        pred = import_predictions(ctx.inp(path), gold.scheme)
        reports[pred.source] = evaluate(pred, gold)
    if args.text:
        ctx.emit(render_comparison(reports))
    elif len(reports) == 1:
        ctx.emit(dumps(next(iter(reports.values())).to_dict()))
    else:
        ctx.emit(dumps({k: r.to_dict() for k, r in reports.items()}))


def cmd_diverge(ctx, args):
    scheme = _scheme(args)
    a = import_predictions(ctx.inp(args.a), scheme)
    b = import_predictions(ctx.inp(args.b), scheme)
    ctx.emit(dumps(classifier_disagreement(a, b, scheme.positive).to_dict()))


def cmd_report(ctx, args):
    cfg = RunConfig.load(ctx.inp(args.config))
    if args.out_dir:
        cfg.output_dir = args.out_dir
    result = full_pipeline(cfg)
    report = (result.output_dir / "report.txt").read_text(encoding="utf-8")
    ctx.outputs += [str(p) for p in result.artifacts.values()]
    ctx.emit(report)


# -- parser -----------------------------------------------------------------


def _add_scheme(p):
    p.add_argument("--categories", default="0,1", help="comma-separated category names (default: 0,1)")
    p.add_argument("--positive", default="1", help="positive (detection) class (default: 1)")


def _add_matrix(p, texts=False):
    p.add_argument("--annotations", required=True, help="annotation file")
    p.add_argument("--format", choices=("long-csv", "wide-tsv"), default="long-csv")
    p.add_argument("--annotators", help="CSV annotator_id,group[,expert]")
    if texts:
        p.add_argument("--texts", help="JSON-lines texts")


def _add_partition(p, required=True):
    p.add_argument(
        "--partition",
        required=required,
        help="'natural' (annotator group tags), 'search' (max average P) or a partition JSON file",
    )
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--min-size", type=int, default=2)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="perspectives", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="output file (default: stdout)")
    common.add_argument("--manifest", help="manifest path (default: <out>.manifest.json)")
    _add_scheme(common)
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def add(name, help):
        return sub.add_parser(name, help=help, parents=[common])

    p = add("ingest", "validate annotations and write canonical long CSV")
    _add_matrix(p)

    p = add("dedup", "drop duplicate texts and retweets")
    p.add_argument("--texts", required=True)

    for name, help in (("filter", "keep texts containing a keyword"), ("stats", "keyword and label counts")):
        p = add(name, help)
        p.add_argument("--texts", required=name == "filter")
        p.add_argument("--keywords", help="comma-separated keywords")
        p.add_argument("--keywords-file", help="one keyword per line")
        if name == "stats":
            p.add_argument("--annotations")
            p.add_argument("--format", choices=("long-csv", "wide-tsv"), default="long-csv")
            p.add_argument("--gold", help="gold CSV; counts gold labels instead of raw majorities")

    p = add("agreement", "Fleiss' kappa overall/per group and pairwise Cohen's kappa")
    _add_matrix(p)
    _add_partition(p, required=False)
    p.add_argument("--text", action="store_true", help="aligned text instead of JSON")

    p = add("polarize", "per-item P-index as TSV")
    _add_matrix(p)
    _add_partition(p)

    p = add("rank", "items ranked by P-index")
    _add_matrix(p, texts=True)
    _add_partition(p)
    p.add_argument("--ascending", action="store_true")
    p.add_argument("--with-text", action="store_true")
    p.add_argument("--census", help="also write the P=0 / P=1 census JSON here")

    p = add("partition", "exhaustive search for the max average P-index split")
    _add_matrix(p)
    p.add_argument("--search", action="store_true", default=True, help="exhaustive search (the only mode)")
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--min-size", type=int, default=2)
    p.add_argument("--allow-large", action="store_true")
    p.add_argument("--scores", help="write every scored partition as TSV here")

    p = add("gold", "majority-vote gold standard")
    _add_matrix(p)
    _add_partition(p, required=False)
    p.add_argument("--group", help="group label within --partition (default: all annotators)")
    p.add_argument(
        "--tie-policy",
        choices=("prefer-positive", "prefer-negative", "prefer-expert", "error"),
        default="prefer-positive",
    )

    p = add("split", "seeded train/test split manifest")
    p.add_argument("--gold", required=True)
    p.add_argument("--train-fraction", type=float, default=0.85)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-stratify", action="store_true")

    p = add("augment", "replicate/delete training items by P-index")
    _add_matrix(p)
    _add_partition(p)
    p.add_argument("--gold", required=True, help="training gold CSV")
    p.add_argument("--split", help="split manifest; restricts to its train ids")
    p.add_argument("--factor", type=int, default=3)
    p.add_argument("--delete-threshold", type=float, default=1.0)

    p = add("train", "fit the reference TF-IDF logistic model")
    p.add_argument("--gold", required=True, help="gold CSV (a 'copies' column is honoured)")
    p.add_argument("--texts", required=True)
    p.add_argument("--split", help="split manifest; restricts to its train ids")
    p.add_argument("--learning-rate", type=float, default=Hyperparams.learning_rate)
    p.add_argument("--epochs", type=int, default=Hyperparams.epochs)
    p.add_argument("--l2", type=float, default=Hyperparams.l2)
    p.add_argument("--seed", type=int, default=0)

    p = add("predict", "apply a saved reference model")
    p.add_argument("--model", required=True)
    p.add_argument("--texts", required=True)
    p.add_argument("--split", help="split manifest; predicts its test ids only")
    p.add_argument("--name", help="source name (default: model file stem)")

    p = add("import", "validate an external predictions CSV")
    p.add_argument("--predictions", required=True)
    p.add_argument("--gold", help="warn about ids not in this gold CSV")

    p = add("ensemble", "inclusive OR-ensemble of prediction files")
    p.add_argument("--predictions", nargs="+", required=True)

    p = add("evaluate", "accuracy, precision, recall, F1")
    p.add_argument("--predictions", nargs="+", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--split", help="split manifest; evaluates on its test ids")
    p.add_argument("--text", action="store_true", help="comparison table instead of JSON")

    p = add("diverge", "where two classifiers disagree")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)

    p = add("report", "run the full pipeline from a JSON config and print its report")
    p.add_argument("--config", required=True)
    p.add_argument("--out-dir", help="override the config's output_dir")
    return parser


def _write_manifest(ctx, args, argv, status, error=None):
    if args.manifest:
        path = Path(args.manifest)
    elif args.out:
        path = Path(f"{args.out}.manifest.json")
    else:
        path = Path(f"perspectives-{args.command}.manifest.json")
    doc = {
        "tool": "perspectives",
        "version": __version__,
        "command": args.command,
        "argv": list(argv),
        "arguments": {k: v for k, v in sorted(vars(args).items())},
        "seed": getattr(args, "seed", None),
        "inputs": {p: sha256_file(p) for p in sorted(set(ctx.inputs)) if Path(p).is_file()},
        "outputs": {p: sha256_file(p) for p in sorted(set(ctx.outputs)) if Path(p).is_file()},
        "status": status,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
    }
    if error is not None:
        doc["error"] = error
    write_text(path, dumps(doc))


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    ctx = _Ctx(args)
    handler = globals()[f"cmd_{args.command}"]
    try:
        handler(ctx, args)
    except Exception as exc:  # noqa: BLE001 - every failure becomes one machine-readable line
        err = {"command": args.command, "error": type(exc).__name__, "message": str(exc)}
        stage = getattr(exc, "stage", None)
        if stage:
            err["stage"] = stage
        print(json.dumps(err), file=sys.stderr)
        try:
            _write_manifest(ctx, args, argv, "FAILED", err)
        except OSError:
            pass
        return 1
    _write_manifest(ctx, args, argv, "OK")
    return 0


if __name__ == "__main__":
    sys.exit(main())
