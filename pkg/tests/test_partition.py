from math import comb

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from perspectives.agreement import UndefinedAgreement
from perspectives.partition import (
    Partition,
    PartitionError,
    compare_natural,
    count_partitions,
    enumerate_partitions,
    natural_partition,
    scores_tsv,
    search_max_polarization,
)

from _oracles import brute_force_argmax, matrix as mk, two_partitions


def names(m):
    return [f"a{j}" for j in range(m)]


# -- Partition type ---------------------------------------------------------


def test_partition_validation():
    with pytest.raises(PartitionError):
        Partition((("a", "b"), ("b", "c")))
    with pytest.raises(PartitionError):
        Partition((("a",), ()))
    p = Partition((("c", "a"), ("b",)), ("X", "Y"))
    assert p.groups == (("a", "c"), ("b",))
    assert p.same_split(Partition((("b",), ("a", "c"))))
    assert Partition.from_dict(p.to_dict()) == p


# -- enumeration ------------------------------------------------------------


def test_count_m5_min2():
    # Sizes 2+3: each 2-subset fixes the split, so C(5,2) = 10.
    parts = enumerate_partitions(names(5), 2, 2)
    assert len(parts) == 10 == comb(5, 2)
    assert len(two_partitions(names(5), 2)) == 10


def test_count_m6_min3():
    assert len(enumerate_partitions(names(6), 2, 3)) == 10 == comb(6, 3) // 2


def test_infeasible():
    with pytest.raises(PartitionError):
        enumerate_partitions(names(4), 2, 3)


@pytest.mark.parametrize("m", range(2, 10))
@pytest.mark.parametrize("min_size", [1, 2, 3])
def test_matches_bitmask_oracle(m, min_size):
    if m < 2 * min_size:
        return
    got = [p.key() for p in enumerate_partitions(names(m), 2, min_size)]
    assert got == two_partitions(names(m), min_size)
    assert len(set(got)) == len(got) == count_partitions(m, 2, min_size)


def stirling2(n, k):
    if n == k or k == 1:
        return 1
    if k == 0 or k > n:
        return 0
    return k * stirling2(n - 1, k) + stirling2(n - 1, k - 1)


@pytest.mark.parametrize("m,k", [(5, 3), (6, 3), (7, 3), (6, 4)])
def test_k_groups_count(m, k):
    parts = enumerate_partitions(names(m), k, 1)
    assert len(parts) == stirling2(m, k) == count_partitions(m, k, 1)
    assert len({p.key() for p in parts}) == len(parts)


def test_order_independent():
    a = enumerate_partitions(["d", "b", "a", "c", "e"], 2, 2)
    b = enumerate_partitions(list("abcde"), 2, 2)
    assert a == b
    assert [p.key() for p in a] == sorted(p.key() for p in a)


def test_large_guard():
    with pytest.raises(PartitionError, match="allow_large"):
        enumerate_partitions(names(30), 2, 1)


def test_k_gt_3_warns():
    with pytest.warns(RuntimeWarning):
        enumerate_partitions(names(10), 4, 1)


# -- search -----------------------------------------------------------------


def test_planted_clones():
    base = [1, 0, 1, 1, 0, 0, 1, 0]
    rows = [[v, 1 - v, v, 1 - v, v, 1 - v] for v in base]
    m = mk(rows)
    res = search_max_polarization(m, 2, 2)
    assert res.best.same_split(Partition((("a0", "a2", "a4"), ("a1", "a3", "a5"))))
    assert res.best_score == 1.0


def test_unanimous_tie_break():
    m = mk([[1] * 5, [0] * 5])
    res = search_max_polarization(m, 2, 2)
    assert all(s.avg_p == 0 for s in res.scored)
    assert res.best.key() == enumerate_partitions(names(5), 2, 2)[0].key()
    assert res.best.key() == (("a0", "a1"), ("a2", "a3", "a4"))


def test_random_matches_oracle():
    rng = np.random.default_rng(42)
    rows = rng.integers(0, 2, size=(10, 6)).tolist()
    res = search_max_polarization(mk(rows), 2, 2)
    key, score = brute_force_argmax(rows, names(6))
    assert res.best.key() == key
    assert res.scored[0].exact == score


@settings(max_examples=40, deadline=None)
@given(st.integers(4, 6), st.integers(0, 2**31 - 1))
def test_ragged_matches_oracle(m, seed):
    rng = np.random.default_rng(seed)
    rows = rng.choice([0, 1, None], size=(8, m), p=[0.4, 0.4, 0.2]).tolist()
    rows = [r for r in rows if any(v is not None for v in r)]
    if not rows:
        return
    key, score = brute_force_argmax(rows, names(m))
    ids = names(m)
    mat = mk(rows, ids)
    if key is None:
        with pytest.raises(UndefinedAgreement):
            search_max_polarization(mat, 2, 2)
        return
    res = search_max_polarization(mat, 2, 2)
    assert (res.best.key(), res.scored[0].exact) == (key, score)


def test_best_dominates_and_scored_complete():
    rng = np.random.default_rng(1)
    res = search_max_polarization(mk(rng.integers(0, 2, size=(15, 7)).tolist()), 2, 2)
    assert len(res.scored) == count_partitions(7, 2, 2)
    assert all(res.scored[0].exact >= s.exact for s in res.scored if s.exact is not None)


def test_search_independent_of_annotator_order():
    rng = np.random.default_rng(9)
    rows = rng.integers(0, 2, size=(12, 6)).tolist()
    ids = names(6)
    perm = [3, 0, 5, 1, 4, 2]
    a = search_max_polarization(mk(rows, ids), 2, 2)
    b = search_max_polarization(mk([[r[j] for j in perm] for r in rows], [ids[j] for j in perm]), 2, 2)
    assert a.best.key() == b.best.key() and a.best_score == b.best_score


def test_natural_comparison_and_tsv():
    groups = {"a0": "Control", "a2": "Control", "a4": "Control", "a1": "Target", "a3": "Target", "a5": "Target"}
    base = [1, 0, 1, 0, 0, 1]
    rows = [[v, 1 - v, v, 1 - v, v, 1 - v] for v in base]
    m = mk(rows, groups=groups)
    nat = natural_partition(m)
    assert nat.labels == ("Control", "Target")
    res = search_max_polarization(m, 2, 2)
    cmp = compare_natural(res, nat)
    assert cmp["natural"] == 1.0 and cmp["natural_is_max"]
    assert cmp["n_other"] == len(res.scored) - 1
    lines = scores_tsv(res).splitlines()
    assert lines[0] == "rank\tavg_p\tgroup1\tgroup2"
    assert len(lines) - 1 == 25
    assert lines[1].split("\t")[2:] == ["a0,a2,a4", "a1,a3,a5"]


def test_natural_needs_two_tags():
    with pytest.raises(PartitionError):
        natural_partition(mk([[1, 0]]))
