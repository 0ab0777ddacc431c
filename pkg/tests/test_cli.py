import json
import subprocess
import sys

import pytest

from perspectives.cli import SUBCOMMANDS, build_parser, main
from perspectives.synthetic import write_planted_fixture


@pytest.fixture()
def fx(tmp_path, monkeypatch):
    write_planted_fixture(tmp_path, n_items=120, seed=2)
    monkeypatch.chdir(tmp_path)
    return tmp_path


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_all_subcommands_registered():
    sub = next(a for a in build_parser()._actions if a.dest == "command")
    assert tuple(sub.choices) == SUBCOMMANDS
    assert len(SUBCOMMANDS) == 18


def test_polarize_natural(fx, capsys):
    code, out, _ = run(["polarize", "--partition", "natural", "--annotations", "annotations.csv", "--annotators", "annotators.csv"], capsys)
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "item_id\tp"
    assert len(lines) == 121
    assert (fx / "perspectives-polarize.manifest.json").exists()


def test_partition_search(fx, capsys):
    code, _, _ = run(["partition", "--search", "--min-size", "2", "--annotations", "annotations.csv", "--out", "best.json", "--scores", "scores.tsv"], capsys)
    assert code == 0
    best = json.loads((fx / "best.json").read_text())
    assert sorted(map(tuple, best["partition"]["groups"])) == [("ann01", "ann03", "ann05"), ("ann02", "ann04", "ann06")]
    rows = (fx / "scores.tsv").read_text().splitlines()[1:]
    assert len(rows) == 25 >= 10
    man = json.loads((fx / "best.json.manifest.json").read_text())
    assert man["status"] == "OK" and man["command"] == "partition"
    assert set(man["outputs"]) == {"best.json", "scores.tsv"}
    assert "annotations.csv" in man["inputs"]
    assert {"version", "arguments", "seed"} <= set(man)


def test_unknown_flag_exit_2(capsys):
    with pytest.raises(SystemExit) as e:
        main(["polarize", "--bogus"])
    assert e.value.code == 2
    assert "usage" in capsys.readouterr().err


def test_error_exit_1_single_json_line(fx, capsys):
    code, _, err = run(["gold", "--annotations", "missing.csv", "--out", "g.csv"], capsys)
    assert code == 1
    lines = err.strip().splitlines()
    assert len(lines) == 1
    doc = json.loads(lines[0])
    assert doc["command"] == "gold" and doc["error"] == "FileNotFoundError"
    man = json.loads((fx / "g.csv.manifest.json").read_text())
    assert man["status"] == "FAILED"


def test_bad_label_error(fx, capsys):
    (fx / "bad.csv").write_text("item_id,annotator_id,label\ni1,a,7\n")
    code, _, err = run(["ingest", "--annotations", "bad.csv"], capsys)
    assert code == 1 and "'7'" in json.loads(err)["message"]


def test_step_by_step_chain(fx, capsys):
    A = ["--annotations", "annotations.csv", "--annotators", "annotators.csv"]
    steps = [
        ["ingest", *A, "--out", "ing.csv"],
        ["dedup", "--texts", "texts.jsonl", "--out", "dedup.jsonl"],
        ["filter", "--texts", "dedup.jsonl", "--keywords", "xylo,yarrow", "--out", "filtered.jsonl"],
        ["stats", "--texts", "texts.jsonl", "--keywords", "xylo", "--annotations", "annotations.csv", "--out", "stats.json"],
        ["agreement", *A, "--partition", "natural", "--out", "agreement.json"],
        ["rank", *A, "--texts", "texts.jsonl", "--partition", "natural", "--with-text", "--census", "census.json", "--out", "rank.tsv"],
        ["gold", *A, "--out", "gold.csv"],
        ["gold", *A, "--partition", "natural", "--group", "A", "--out", "gA.csv"],
        ["gold", *A, "--partition", "natural", "--group", "B", "--out", "gB.csv"],
        ["split", "--gold", "gold.csv", "--seed", "2", "--out", "split.json"],
        ["augment", *A, "--partition", "natural", "--gold", "gA.csv", "--split", "split.json", "--out", "augA.csv"],
        ["train", "--gold", "augA.csv", "--texts", "texts.jsonl", "--out", "mA.json"],
        ["train", "--gold", "gB.csv", "--split", "split.json", "--texts", "texts.jsonl", "--out", "mB.json"],
        ["predict", "--model", "mA.json", "--texts", "texts.jsonl", "--split", "split.json", "--name", "A", "--out", "pA.csv"],
        ["predict", "--model", "mB.json", "--texts", "texts.jsonl", "--split", "split.json", "--name", "B", "--out", "pB.csv"],
        ["import", "--predictions", "pA.csv", "--gold", "gold.csv", "--out", "pA_checked.csv"],
        ["ensemble", "--predictions", "pA.csv", "pB.csv", "--out", "inclusive.csv"],
        ["evaluate", "--predictions", "pA.csv", "pB.csv", "inclusive.csv", "--gold", "gold.csv", "--split", "split.json", "--out", "metrics.json"],
        ["evaluate", "--predictions", "pA.csv", "--gold", "gA.csv", "--split", "split.json", "--text", "--out", "table.txt"],
        ["diverge", "--a", "pA.csv", "--b", "pB.csv", "--out", "diverge.json"],
    ]
    for argv in steps:
        code, _, err = run(argv, capsys)
        assert code == 0, (argv, err)
    assert (fx / "ing.csv").read_text() == (fx / "annotations.csv").read_text()
    assert json.loads((fx / "stats.json").read_text())["label_distribution"]["total"] == 120
    assert json.loads((fx / "agreement.json").read_text())["group_kappas"].keys() == {"A", "B"}
    assert "copies" in (fx / "augA.csv").read_text().splitlines()[0]
    metrics = json.loads((fx / "metrics.json").read_text())
    assert set(metrics) == {"pA", "pB", "inclusive"}
    assert metrics["inclusive"]["recall_pos"] >= max(metrics["pA"]["recall_pos"], metrics["pB"]["recall_pos"])
    assert json.loads((fx / "diverge.json").read_text())["total"] == len(json.loads((fx / "split.json").read_text())["test_ids"])
    assert (fx / "pA_checked.csv").read_text() == (fx / "pA.csv").read_text()


def test_gold_unknown_group(fx, capsys):
    code, _, err = run(["gold", "--annotations", "annotations.csv", "--annotators", "annotators.csv", "--partition", "natural", "--group", "Z"], capsys)
    assert code == 1 and "'Z'" in err


def test_report(fx, capsys):
    code, out, _ = run(["report", "--config", "config.json", "--out-dir", "rep"], capsys)
    assert code == 0
    assert "inclusive" in out
    assert (fx / "rep" / "manifest.json").exists()


def test_report_failure_names_stage(fx, capsys):
    cfg = json.loads((fx / "config.json").read_text())
    cfg["annotations"] = "gone.csv"
    (fx / "bad.json").write_text(json.dumps(cfg))
    code, _, err = run(["report", "--config", "bad.json"], capsys)
    assert code == 1 and json.loads(err)["stage"] == "ingest"


def test_console_script_usage_error():
    proc = subprocess.run([sys.executable, "-m", "perspectives.cli", "nosuch"], capture_output=True, text=True)
    assert proc.returncode == 2
    assert "usage" in proc.stderr
