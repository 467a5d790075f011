import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from safepool.errors import UnknownLabelError
from safepool.metrics import (
    ConfusionMatrix,
    confusion,
    gain,
    macro_f1,
    precision_recall_f1,
    score_predictions,
)


def test_identity_diagonal():
    cm = confusion(["a", "b"], ["a", "b"], ["a", "b"])
    assert cm.counts.tolist() == [[1, 0], [0, 1]]


def test_direct_tally_fixture():
    truth = ["a"] * 10 + ["b"] * 10
    pred = ["a"] * 5 + ["b"] * 5 + ["b"] * 10
    cm = confusion(truth, pred, ["a", "b"])
    assert cm.counts.tolist() == [[5, 5], [0, 10]]


def test_unknown_label_rejected():
    with pytest.raises(UnknownLabelError):
        confusion(["a"], ["z"], ["a", "b"])


def test_pair_permutation_invariance():
    truth = ["a", "b", "a", "b", "b"]
    pred = ["a", "a", "b", "b", "b"]
    cm = confusion(truth, pred, ["a", "b"])
    order = [3, 1, 4, 0, 2]
    cm2 = confusion([truth[i] for i in order], [pred[i] for i in order], ["a", "b"])
    assert (cm.counts == cm2.counts).all()


def test_worked_example_scores():
    cm = ConfusionMatrix(("a", "b"), np.array([[5, 5], [0, 10]]))
    table = precision_recall_f1(cm)
    assert table.precision[0] == 1.0
    assert table.precision[1] == pytest.approx(10 / 15)
    assert table.recall[0] == 0.5
    assert table.recall[1] == 1.0
    assert table.f1[0] == pytest.approx(2 / 3)
    assert table.f1[1] == pytest.approx(0.8)
    assert table.macro_f1 == pytest.approx((2 / 3 + 0.8) / 2)


def test_perfect_diagonal_scores_one():
    cm = confusion(["a", "b", "c"], ["a", "b", "c"], ["a", "b", "c"])
    table = precision_recall_f1(cm)
    assert table.precision.tolist() == [1, 1, 1]
    assert table.recall.tolist() == [1, 1, 1]
    assert table.macro_f1 == 1.0


def test_single_column_predictions_on_balanced_pairs():
    truth = ["a"] * 10 + ["b"] * 10
    pred = ["a"] * 20
    assert macro_f1(truth, pred, ["a", "b"]) == pytest.approx(1 / 3)


def _oracle_scores(truth, pred, categories, zero_division=0.0):
    """Naive per-record counting, independent of the matrix implementation."""
    scores = {}
    for c in categories:
        hits = sum(1 for t, p in zip(truth, pred) if t == c and p == c)
        predicted = sum(1 for p in pred if p == c)
        actual = sum(1 for t in truth if t == c)
        precision = hits / predicted if predicted else zero_division
        recall = hits / actual if actual else zero_division
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        scores[c] = (precision, recall, f1, actual)
    return scores


@settings(max_examples=100)
@given(st.data())
def test_scores_match_naive_oracle(data):
    n_categories = data.draw(st.integers(min_value=2, max_value=6))
    categories = [f"c{i}" for i in range(n_categories)]
    n = data.draw(st.integers(min_value=1, max_value=50))
    truth = data.draw(st.lists(st.sampled_from(categories), min_size=n, max_size=n))
    pred = data.draw(st.lists(st.sampled_from(categories), min_size=n, max_size=n))
    table = score_predictions(truth, pred, categories)
    oracle = _oracle_scores(truth, pred, categories)
    for i, c in enumerate(categories):
        precision, recall, f1, support = oracle[c]
        assert table.precision[i] == pytest.approx(precision)
        assert table.recall[i] == pytest.approx(recall)
        assert table.f1[i] == pytest.approx(f1)
        assert table.support[i] == support
    scored = [oracle[c][2] for c in categories if oracle[c][3] > 0]
    assert table.macro_f1 == pytest.approx(sum(scored) / len(scored))


@given(st.permutations(list(range(3))))
def test_macro_f1_category_order_invariant(order):
    truth = ["a", "b", "c", "a", "b", "c", "c"]
    pred = ["a", "c", "c", "b", "b", "a", "c"]
    categories = ["a", "b", "c"]
    reordered = [categories[i] for i in order]
    assert macro_f1(truth, pred, categories) == pytest.approx(
        macro_f1(truth, pred, reordered)
    )


def test_zero_support_category_excluded():
    truth = ["a", "b", "a", "b"]
    pred = ["a", "b", "b", "a"]
    with_extra = macro_f1(truth, pred, ["a", "b", "ghost"])
    without = macro_f1(truth, pred, ["a", "b"])
    assert with_extra == pytest.approx(without)


def test_zero_support_included_when_configured():
    truth = ["a", "b", "a", "b"]
    pred = ["a", "b", "a", "b"]
    table = score_predictions(truth, pred, ["a", "b", "ghost"], include_zero_support=True)
    assert table.macro_f1 == pytest.approx(2 / 3)


def test_gain_is_in_points():
    t1 = score_predictions(["a", "b"], ["a", "b"], ["a", "b"])
    assert gain(t1, t1) == 0.0
    base = score_predictions(["a"] * 10 + ["b"] * 10, ["a"] * 20, ["a", "b"])
    assert gain(t1, base) == pytest.approx(100 * (1.0 - 1 / 3))


def test_gain_fifteen_points():
    class Table:
        pass

    candidate = Table()
    candidate.macro_f1 = 0.50
    baseline = Table()
    baseline.macro_f1 = 0.35
    assert gain(candidate, baseline) == pytest.approx(15.0)
