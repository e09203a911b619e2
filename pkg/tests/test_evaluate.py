from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, strategies as st

from eventcast.errors import DataError
from eventcast.evaluate import confusion, metrics, split_indices, stratified_split
from conftest import make_ds
from oracles import confusion_oracle, metrics_oracle

labels_st = st.lists(st.integers(0, 4), min_size=1, max_size=200)


def test_split_example():
    y = np.array([0] * 80 + [1] * 20)
    ds = make_ds(np.arange(100) % 7, y, class_names=["A", "B"])
    tr, te = stratified_split(ds, 0.25, seed=4)
    assert te.class_counts().tolist() == [20, 5]
    assert tr.class_counts().tolist() == [60, 15]


def test_split_two_per_class():
    y = np.array([0, 0, 1, 1, 2, 2])
    tr, te = split_indices(y, 3, 0.5, seed=1)
    assert np.bincount(y[tr]).tolist() == [1, 1, 1]
    assert np.bincount(y[te]).tolist() == [1, 1, 1]


def test_split_deterministic_disjoint_exhaustive(rng):
    y = rng.integers(0, 5, 500)
    a = split_indices(y, 5, 0.3, seed=9)
    b = split_indices(y, 5, 0.3, seed=9)
    assert all(np.array_equal(x, z) for x, z in zip(a, b))
    tr, te = a
    assert not set(tr) & set(te)
    assert sorted(np.concatenate([tr, te]).tolist()) == list(range(500))
    other = split_indices(y, 5, 0.3, seed=10)
    assert not np.array_equal(other[1], te)


@given(st.lists(st.integers(2, 60), min_size=1, max_size=6), st.floats(0.05, 0.95), st.integers(0, 99))
def test_split_proportions(sizes, frac, seed):
    y = np.concatenate([np.full(n, c) for c, n in enumerate(sizes)])
    tr, te = split_indices(y, len(sizes), frac, seed)
    for c, n in enumerate(sizes):
        got = np.count_nonzero(y[te] == c)
        assert abs(got - frac * n) <= 1 or got in (1, n - 1)
        assert 1 <= got <= n - 1


def test_split_errors():
    with pytest.raises(DataError):
        split_indices(np.array([0, 0, 1]), 2, 0.3)
    with pytest.raises(ValueError):
        split_indices(np.array([0, 0, 1, 1]), 2, 1.0)


def test_confusion_examples():
    assert confusion([0, 1, 2], [0, 1, 2], 3).counts.tolist() == [[1, 0, 0], [0, 1, 0], [0, 0, 1]]
    assert confusion([0, 1], [1, 0], 2).counts.tolist() == [[0, 1], [1, 0]]
    with pytest.raises(ValueError):
        confusion([0, 1], [0], 2)
    with pytest.raises(ValueError):
        confusion([0, 3], [0, 1], 2)


def test_confusion_matches_oracle(rng):
    t, p = rng.integers(0, 7, 1000), rng.integers(0, 7, 1000)
    cm = confusion(t, p, 7)
    assert cm.counts.tolist() == confusion_oracle(t.tolist(), p.tolist(), 7)
    assert cm.total == 1000
    assert cm.counts.sum(axis=1).tolist() == np.bincount(t, minlength=7).tolist()


def test_metrics_two_class():
    from eventcast.evaluate import ConfusionMatrix
    r = metrics(ConfusionMatrix(np.array([[50, 10], [5, 35]]), ("a", "b")))
    assert r.accuracy == pytest.approx(0.85)
    assert r.per_class["a"].precision == pytest.approx(50 / 55)
    assert r.per_class["a"].recall == pytest.approx(50 / 60)
    assert r.per_class["a"].support == 60


def test_metrics_zero_denominators():
    from eventcast.evaluate import ConfusionMatrix
    # class b is present in the truth but never predicted: precision 0/0 -> 0, f1 0
    r = metrics(ConfusionMatrix(np.array([[3, 0], [2, 0]]), ("a", "b")))
    assert r.per_class["b"].precision == 0 and r.per_class["b"].f1 == 0
    assert r.macro_f1 == pytest.approx((2 * 0.6 * 1 / 1.6) / 2)
    with pytest.raises(ValueError):
        metrics(ConfusionMatrix(np.zeros((2, 2), int), ("a", "b")))


@given(labels_st, st.data())
def test_metrics_match_oracle(t, data):
    p = data.draw(st.lists(st.integers(0, 4), min_size=len(t), max_size=len(t)))
    cm = confusion(t, p, 5)
    r = metrics(cm)
    acc, prec, rec, f1 = metrics_oracle(cm.counts.tolist())
    assert (r.accuracy, r.macro_precision, r.macro_recall, r.macro_f1) == pytest.approx((acc, prec, rec, f1))
    for v in (r.accuracy, r.macro_precision, r.macro_recall, r.macro_f1):
        assert 0 <= v <= 1


@given(labels_st)
def test_perfect_prediction(t):
    r = metrics(confusion(t, t, 5))
    assert r.accuracy == 1 and r.macro_f1 == 1


@given(labels_st, st.data(), st.permutations(range(5)))
def test_class_permutation_invariance(t, data, perm):
    p = data.draw(st.lists(st.integers(0, 4), min_size=len(t), max_size=len(t)))
    perm = np.array(perm)
    a = metrics(confusion(t, p, 5))
    b = metrics(confusion(perm[t], perm[p], 5))
    assert (a.accuracy, a.macro_precision, a.macro_recall, a.macro_f1) == \
        pytest.approx((b.accuracy, b.macro_precision, b.macro_recall, b.macro_f1))
    for c in range(5):
        assert a.per_class[str(c)].f1 == pytest.approx(b.per_class[str(perm[c])].f1)


@given(labels_st, st.data(), st.integers(2, 5))
def test_duplication_invariance(t, data, times):
    p = data.draw(st.lists(st.integers(0, 4), min_size=len(t), max_size=len(t)))
    a = metrics(confusion(t, p, 5))
    b = metrics(confusion(t * times, p * times, 5))
    assert a.macro_f1 == pytest.approx(b.macro_f1)
    assert a.accuracy == pytest.approx(b.accuracy)


def test_report_serializations():
    cm = confusion([0, 1, 1], [0, 1, 0], 2, ["x", "y"])
    r = metrics(cm)
    assert cm.to_csv().splitlines()[0] == "true\\predicted,x,y"
    lines = r.to_csv().splitlines()
    assert lines[0] == "class,precision,recall,f1,support"
    assert lines[-1].startswith("macro,")
    assert '"accuracy"' in r.to_json()
