import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from perspectives.corpus import (
    MISSING,
    AnnotationError,
    AnnotationMatrix,
    Annotator,
    CorpusItem,
    LabelScheme,
    deduplicate,
    keyword_filter,
    keyword_frequencies,
    label_distribution,
    load_annotations,
    load_annotators,
    load_texts,
    parse_annotations,
    write_texts,
)
from perspectives.goldstd import GoldStandard

from _oracles import matrix as mk


def items(*texts):
    return [CorpusItem(f"t{n}", t) for n, t in enumerate(texts)]


# -- loading ----------------------------------------------------------------


def test_long_csv_missing_cell():
    m = parse_annotations("item_id,annotator_id,label\ni1,a1,1\ni1,a2,0\ni2,a1,1\n")
    assert m.items == ("i1", "i2")
    assert m.annotator_ids == ("a1", "a2")
    assert m.codes[m.item_row("i2"), m.annotator_column("a2")] == MISSING
    assert (m.codes == MISSING).sum() == 1
    assert m.label("i1", "a2") == "0"


def test_header_only_file(tmp_path):
    p = tmp_path / "a.csv"
    p.write_text("item_id,annotator_id,label\n")
    with pytest.raises(AnnotationError, match="no annotations"):
        load_annotations(p)


def test_bad_label_names_label_and_line():
    with pytest.raises(AnnotationError, match=r"line 3.*'2'"):
        parse_annotations("item_id,annotator_id,label\ni1,a1,1\ni1,a2,2\n")


def test_duplicate_pair_rejected():
    with pytest.raises(AnnotationError, match="duplicate"):
        parse_annotations("item_id,annotator_id,label\ni1,a1,1\ni1,a1,0\n")


def test_malformed_row_line_number():
    with pytest.raises(AnnotationError, match="line 3"):
        parse_annotations("item_id,annotator_id,label\ni1,a1,1\ni2,a1\n")


def test_wide_tsv_with_texts():
    text = "item_id\ttext\ta1\ta2\ni1\thello there\t1\t\ni2\tbye\t0\t0\n"
    m = parse_annotations(text, "wide-tsv")
    assert m.label("i1", "a2") is None
    assert m.texts == {"i1": "hello there", "i2": "bye"}
    assert m.counts().tolist() == [[0, 1], [2, 0]]


def test_canonical_csv_roundtrip_sorted():
    text = "item_id,annotator_id,label\ni2,b,0\ni1,a,1\ni2,a,1\n"
    m = parse_annotations(text)
    out = m.to_long_csv()
    assert out.splitlines()[1:] == ["i1,a,1", "i2,a,1", "i2,b,0"]
    assert parse_annotations(out) == m


@settings(max_examples=100, deadline=None)
@given(
    st.lists(st.lists(st.sampled_from([None, "0", "1"]), min_size=3, max_size=3), min_size=1, max_size=8)
)
def test_roundtrip_property(rows):
    rows = [r for r in rows if any(v is not None for v in r)]
    if not rows:
        return
    m = mk(rows)
    again = parse_annotations(m.to_long_csv())
    # Annotators with no labels at all cannot survive a long-format round trip.
    seen = [a for j, a in enumerate(m.annotator_ids) if (m.codes[:, j] != MISSING).any()]
    assert again.annotator_ids == tuple(seen)
    assert again.records() == m.records()


def test_annotator_metadata(tmp_path):
    p = tmp_path / "ann.csv"
    p.write_text("annotator_id,group,expert\na1,Target,1\na2,Control,no\na3,,0\n")
    anns = load_annotators(p)
    assert anns == [Annotator("a1", "Target", True), Annotator("a2", "Control", False), Annotator("a3", None, False)]
    m = parse_annotations("item_id,annotator_id,label\ni1,a1,1\ni1,a2,0\ni1,a3,0\n", annotators=anns)
    assert m.groups() == {"Control": ["a2"], "Target": ["a1"]}


def test_item_without_labels_rejected():
    with pytest.raises(AnnotationError):
        AnnotationMatrix(("i1",), (Annotator("a"),), np.array([[MISSING]]), LabelScheme())


def test_scheme_validation():
    with pytest.raises(ValueError):
        LabelScheme(("0", "1"), "2")
    with pytest.raises(ValueError):
        LabelScheme(("0", "0"), "0")
    assert LabelScheme(("none", "hate", "offensive"), "hate").negative == "none"


def test_texts_roundtrip(tmp_path):
    its = [CorpusItem("x", "héllo", {"src": "tw"}), CorpusItem("y", "b")]
    p = tmp_path / "t.jsonl"
    p.write_text(write_texts(its), encoding="utf-8")
    assert load_texts(p) == its


# -- cleaning ---------------------------------------------------------------


@pytest.mark.parametrize(
    "texts",
    [
        ("Hello world", "hello   world"),
        ("RT @x: go home", "go home"),
        ("abc https://t.co/q1", "abc https://t.co/q2"),
    ],
)
def test_dedup_collisions(texts):
    kept = deduplicate(items(*texts))
    assert [it.item_id for it in kept] == ["t0"]


def test_dedup_keeps_distinct_in_order():
    kept = deduplicate(items("b", "a", "B", "c"))
    assert [it.text for it in kept] == ["b", "a", "c"]


@given(st.lists(st.sampled_from(["a b", "A  b", "RT @u: a b", "c", "c http://x", "d"]), max_size=12))
def test_dedup_idempotent(texts):
    once = deduplicate(items(*texts))
    assert deduplicate(once) == once


def test_keyword_filter_whole_token():
    kept = keyword_filter(items("deport them", "support them"), ["deport"])
    assert [it.text for it in kept] == ["deport them"]


def test_keyword_filter_hashtag():
    assert len(keyword_filter(items("#Muslim ban"), ["muslim"])) == 1


def test_keyword_filter_fixture():
    corpus = items(
        "Stop the #invasion now",
        "lovely day at the beach",
        "invasions are a board game thing",
        "RT @bob: Deport them all",
        "deportation numbers are out",
        "the migrants arrived https://t.co/deport",
        "Migrants, welcome!",
        "nothing to see",
    )
    kept = keyword_filter(corpus, ["invasion", "deport", "migrants"])
    # Hand selection: whole tokens only, URL contents and suffixed forms excluded.
    assert [it.item_id for it in kept] == ["t0", "t3", "t5", "t6"]


@given(st.lists(st.sampled_from(["a b", "b c", "#a", "c", "x-a"]), max_size=10), st.sampled_from(["a", "b", "c"]))
def test_keyword_filter_subset_ordered(texts, kw):
    corpus = items(*texts)
    kept = keyword_filter(corpus, [kw])
    ids = [it.item_id for it in corpus]
    assert [ids.index(it.item_id) for it in kept] == sorted(ids.index(it.item_id) for it in kept)


def test_keyword_frequencies():
    corpus = items("deport deport now", "#Deport!", "invasion")
    assert keyword_frequencies(corpus, ["invasion", "deport", "absent"]) == {
        "invasion": 1,
        "deport": 3,
        "absent": 0,
    }


def test_keyword_frequencies_token_oracle():
    rng = np.random.default_rng(3)
    vocab = ["alpha", "beta", "gamma", "#alpha", "Beta,", "delta"]
    texts = [" ".join(rng.choice(vocab, size=6)) for _ in range(20)]
    corpus = items(*texts)
    oracle = {k: 0 for k in ("alpha", "beta", "gamma")}
    for t in texts:
        for tok in t.split():
            tok = tok.lower().strip(",").lstrip("#")
            if tok in oracle:
                oracle[tok] += 1
    assert keyword_frequencies(corpus, list(oracle)) == oracle


def test_keywords_required():
    with pytest.raises(ValueError):
        keyword_filter(items("a"), [])


# -- label distribution -----------------------------------------------------


def test_label_distribution_gold():
    m = mk([["1"], ["0"], ["0"]])
    gold = GoldStandard({"i000": "1", "i001": "0", "i002": "0"})
    assert label_distribution(m, gold) == {"counts": {"0": 2, "1": 1}, "total": 3}


def test_label_distribution_empty_gold():
    m = mk([["1"]])
    assert label_distribution(m, GoldStandard({})) == {"counts": {"0": 0, "1": 0}, "total": 0}


def test_label_distribution_raw_majority():
    m = mk([["1", "1", "0"], ["0", "0", "1"], ["1", "0", None]])
    # The third item is a tie and goes to the positive class.
    assert label_distribution(m)["counts"] == {"0": 1, "1": 2}


def test_label_distribution_table_shape():
    # Table-style totals: 106 positive plus 1014 negative is 1120 items.
    rows = [["1"]] * 106 + [["0"]] * 1014
    dist = label_distribution(mk(rows))
    assert dist == {"counts": {"0": 1014, "1": 106}, "total": 1120}
