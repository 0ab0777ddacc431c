import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from perspectives.goldstd import (
    GoldStandard,
    SplitManifest,
    SplitSpec,
    TieError,
    majority_gold,
    make_split,
    read_gold_csv,
    train_test_split,
    union_gold,
)

from _oracles import matrix as mk


def gold_of(labels):
    return GoldStandard({f"i{n:04d}": v for n, v in enumerate(labels)})


# -- majority ---------------------------------------------------------------


def test_strict_majority():
    g = majority_gold(mk([[1, 1, 0]]))
    assert g.labels == {"i000": "1"} and g.tie_count == 0


@pytest.mark.parametrize("policy,expected", [("prefer-positive", "1"), ("prefer-negative", "0")])
def test_policies(policy, expected):
    g = majority_gold(mk([[1, 0]]), tie_policy=policy)
    assert g.labels["i000"] == expected
    assert g.tie_count == 1 and g.tied_items == ("i000",)


def test_prefer_expert():
    m = mk([[1, 0], [0, 1]], experts=("a0",))
    g = majority_gold(m, tie_policy="prefer-expert")
    assert g.labels == {"i000": "1", "i001": "0"}


def test_prefer_expert_tied_experts_error():
    m = mk([[1, 0, 1, 0]], experts=("a0", "a1"))
    with pytest.raises(TieError, match="i000"):
        majority_gold(m, tie_policy="prefer-expert")


def test_prefer_expert_needs_expert():
    with pytest.raises(ValueError):
        majority_gold(mk([[1, 0]]), tie_policy="prefer-expert")


def test_error_policy_names_item():
    with pytest.raises(TieError, match="i001"):
        majority_gold(mk([[1, 1], [1, 0]]), tie_policy="error")


def test_subset_and_excluded():
    m = mk([[1, 1, 0], [None, None, 1]])
    g = majority_gold(m, ["a0", "a1"], source="A")
    assert g.labels == {"i000": "1"}
    assert g.excluded_items == ("i001",)
    assert g.source == "A"


def test_multiclass_tie_fallback():
    m = mk([["x", "y", "z", "z", "y"]], categories=("x", "y", "z"))
    # y and z tie; z is the positive class (last category in the helper's scheme).
    assert majority_gold(m).labels["i000"] == "z"
    assert majority_gold(m, tie_policy="prefer-negative").labels["i000"] == "y"


@settings(max_examples=100, deadline=None)
@given(st.lists(st.sampled_from([0, 1]), min_size=1, max_size=10), st.integers(1, 4))
def test_clones_equal_single_annotator(col, n_clones):
    m = mk([[v] * n_clones for v in col])
    assert majority_gold(m).labels == {f"i{i:03d}": str(v) for i, v in enumerate(col)}


@settings(max_examples=100, deadline=None)
@given(st.lists(st.lists(st.sampled_from([0, 1]), min_size=3, max_size=3), min_size=1, max_size=10))
def test_odd_binary_no_ties(rows):
    for policy in ("prefer-positive", "prefer-negative", "error"):
        assert majority_gold(mk(rows), tie_policy=policy).tie_count == 0


def test_group_golds_agree_on_unanimous_items():
    rows = [[1, 1, 1, 1], [0, 0, 1, 1], [0, 0, 0, 0]]
    m = mk(rows)
    ga = majority_gold(m, ["a0", "a1"])
    gb = majority_gold(m, ["a2", "a3"])
    assert ga.labels["i000"] == gb.labels["i000"]
    assert ga.labels["i002"] == gb.labels["i002"]
    assert ga.labels["i001"] != gb.labels["i001"]


def test_union_gold():
    a = GoldStandard({"x": "1", "y": "0", "z": "0"})
    b = GoldStandard({"x": "0", "y": "1", "z": "0", "w": "1"})
    assert union_gold([a, b]).labels == {"x": "1", "y": "1", "z": "0"}


def test_csv_roundtrip(tmp_path):
    g = GoldStandard({"b": "0", "a": "1"})
    p = tmp_path / "g.csv"
    p.write_text(g.to_csv())
    assert p.read_text() == "item_id,label\na,1\nb,0\n"
    assert read_gold_csv(p).labels == g.labels


# -- splits -----------------------------------------------------------------


def test_split_sizes_and_determinism():
    g = gold_of(["1", "0"] * 5)
    spec = SplitSpec(0.8, seed=7, stratified=False)
    tr, te = train_test_split(g, spec)
    assert (len(tr), len(te)) == (8, 2)
    assert train_test_split(g, spec) == (tr, te)


def test_split_1120():
    g = gold_of(["1"] * 106 + ["0"] * 1014)
    s = make_split(g, SplitSpec(0.85, seed=0))
    assert (len(s.train_ids), len(s.test_ids)) == (952, 168)


def test_stratified_100_items():
    g = gold_of(["1"] * 10 + ["0"] * 90)
    for seed in range(5):
        _, te = train_test_split(g, SplitSpec(0.8, seed=seed, stratified=True))
        assert len(te) == 20
        assert len(te.positives()) == 2


def test_stratified_absent_class():
    with pytest.raises(ValueError):
        make_split(gold_of(["0"] * 10), SplitSpec(0.8))


@settings(max_examples=150, deadline=None)
@given(
    st.lists(st.sampled_from(["0", "1"]), min_size=2, max_size=60),
    st.floats(0.05, 0.95),
    st.integers(0, 10**6),
    st.booleans(),
)
def test_split_invariants(labels, fraction, seed, stratified):
    g = gold_of(labels)
    if stratified and len(set(labels)) < 2:
        return
    s = make_split(g, SplitSpec(fraction, seed, stratified))
    train, test = set(s.train_ids), set(s.test_ids)
    assert not train & test
    assert train | test == set(g.labels)
    n = len(labels)
    assert len(train) == min(max(int(np.floor(n * fraction + 1e-9)), 1), n - 1)
    if stratified:
        for c in ("0", "1"):
            n_c = labels.count(c)
            got = sum(1 for i in train if g.labels[i] == c)
            assert abs(got - n_c * len(train) / n) < 1 + 1e-9


def test_fixed_test_contract():
    m = mk([[1, 1, 0, 0], [0, 0, 1, 1], [1, 0, 1, 0], [0, 0, 0, 0], [1, 1, 1, 1]] * 4)
    overall = majority_gold(m)
    s = make_split(overall, SplitSpec(0.75, seed=3))
    tests = [g.restrict(s.test_ids).items for g in (overall, majority_gold(m, ["a0", "a1"]), majority_gold(m, ["a2", "a3"]))]
    assert tests[0] == tests[1] == tests[2]


def test_manifest_roundtrip(tmp_path):
    s = make_split(gold_of(["0", "1"] * 6), SplitSpec(0.5, seed=1))
    p = tmp_path / "s.json"
    p.write_text(s.to_json())
    assert SplitManifest.load(p) == s
    assert {"seed", "train_ids", "test_ids", "stratified"} <= set(s.to_dict())
