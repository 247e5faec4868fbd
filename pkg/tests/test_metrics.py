import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from graphmixup.errors import DomainError
from graphmixup.metrics import (accuracy, auc_roc_macro, binary_auc, block_correlation_contrast,
                                evaluate, feature_correlation, macro_f1, per_class_f1)


def pairwise_auc(scores, pos):
    """Exhaustive positive/negative pair comparison."""
    P, N = scores[pos], scores[~pos]
    return np.mean([1.0 if p > n else 0.5 if p == n else 0.0 for p in P for n in N])


class TestAccuracy:
    def test_perfect(self):
        assert accuracy([0, 1, 2], [0, 1, 2]) == 1.0

    def test_three_of_four(self):
        assert accuracy([0, 1, 1, 0], [0, 1, 1, 1]) == 0.75

    def test_counting_oracle(self, rng):
        t = rng.integers(0, 4, 100)
        p = rng.permutation(t)
        assert accuracy(p, t) == sum(int(a == b) for a, b in zip(p, t)) / 100

    def test_empty(self):
        with pytest.raises(DomainError):
            accuracy([], [])


class TestMacroF1:
    def test_perfect(self):
        assert macro_f1([0, 1, 2], [0, 1, 2], 3) == 1.0

    def test_hand_computed(self):
        # class 0: TP=2 FP=1 FN=0; class 1: TP=1 FP=0 FN=1
        truth = [0, 0, 1, 1]
        pred = [0, 0, 0, 1]
        assert macro_f1(pred, truth, 2) == pytest.approx((0.8 + 2 / 3) / 2, abs=1e-12)

    def test_absent_class_counts_zero(self):
        assert per_class_f1([0, 1], [0, 1], 3)[2] == 0.0
        assert macro_f1([0, 1], [0, 1], 3) == pytest.approx(2 / 3)

    def test_perfect_agrees_with_accuracy(self, rng):
        t = rng.integers(0, 3, 30)
        assert macro_f1(t, t, 3) == accuracy(t, t) == 1.0


class TestAuc:
    def test_perfect(self):
        assert auc_roc_macro(np.array([0.9, 0.8, 0.4, 0.3]), np.array([1, 1, 0, 0])) == 1.0

    def test_three_quarters(self):
        assert auc_roc_macro(np.array([0.9, 0.8, 0.7, 0.6]), np.array([1, 0, 1, 0])) == 0.75

    def test_all_ties(self):
        assert auc_roc_macro(np.full(6, 0.3), np.array([0, 1, 0, 1, 1, 0])) == 0.5

    def test_single_class(self):
        with pytest.raises(DomainError):
            auc_roc_macro(np.ones((3, 2)) / 2, np.array([1, 1, 1]))

    def test_missing_class_skipped(self, caplog):
        probs = np.array([[0.7, 0.2, 0.1], [0.1, 0.8, 0.1], [0.6, 0.3, 0.1]])
        assert auc_roc_macro(probs, np.array([0, 1, 0])) == 1.0
        assert "class 2" in caplog.text

    @given(st.lists(st.integers(0, 5), min_size=4, max_size=30), st.integers(0, 1000))
    @settings(max_examples=50, deadline=None)
    def test_matches_pairwise_oracle_and_monotone_invariance(self, raw, seed):
        scores = np.array(raw, dtype=float)
        pos = np.random.default_rng(seed).random(len(scores)) < 0.5
        if pos.all() or not pos.any():
            return
        a = binary_auc(scores, pos)
        assert a == pytest.approx(pairwise_auc(scores, pos), abs=1e-12)
        assert binary_auc(np.exp(scores) * 3 - 1, pos) == pytest.approx(a, abs=1e-12)


def test_evaluate_report(rng):
    probs = rng.dirichlet(np.ones(3), size=40)
    truth = rng.integers(0, 3, 40)
    r = evaluate(probs, truth, 3)
    assert r.macro_f1 == pytest.approx(np.mean(r.per_class_f1))
    assert r.n_eval == 40
    assert all(0 <= v <= 1 for v in (r.accuracy, r.macro_f1, r.auc_roc))


class TestCorrelation:
    def test_duplicate_column(self, rng):
        x = rng.normal(size=50)
        C = feature_correlation(np.column_stack([x, x, rng.normal(size=50)]))
        assert C[0, 1] == pytest.approx(1.0)

    def test_independent_columns(self, rng):
        C = feature_correlation(rng.normal(size=(10_000, 4)))
        assert np.all(C[~np.eye(4, dtype=bool)] < 0.05)

    def test_symmetric_unit_diagonal(self, rng):
        C = feature_correlation(rng.normal(size=(30, 6)))
        assert np.array_equal(C, C.T) and np.all(np.diag(C) == 1.0)

    def test_zero_variance(self, rng):
        C = feature_correlation(np.column_stack([np.ones(10), rng.normal(size=10)]))
        assert C[0, 1] == 0.0

    def test_block_contrast(self):
        C = np.array([[1, .9, .1, .1], [.9, 1, .1, .1], [.1, .1, 1, .7], [.1, .1, .7, 1]])
        assert block_correlation_contrast(C, 2) == pytest.approx((0.8, 0.1))
