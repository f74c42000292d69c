from __future__ import annotations

import numpy as np
import pytest

from claudette.features import SparseVector
from claudette.modelio import canonical_json_bytes, linear_payload
from claudette.svm import (
    DimensionMismatch,
    EmptyData,
    KernelModel,
    LengthMismatch,
    NotSquare,
    SingleClass,
    TrainConfig,
    box_constraints,
    kkt_violation,
    linear_objective,
    predict_kernel,
    predict_linear,
    train_linear,
    train_smo,
)
from claudette.treekernel import KernelGram


def sv(pairs, dim):
    return SparseVector.from_pairs(pairs, dim)


TWO_POINTS = [sv([(0, 1.0)], 1), sv([(0, -1.0)], 1)]
TWO_LABELS = [1, -1]


def separable_blobs(n=200, dim=20, margin=0.5, seed=3):
    """Points with |first coordinate| >= margin deciding the label; noise in
    the remaining coordinates is too small to interfere."""
    rng = np.random.default_rng(seed)
    X, y = [], []
    for i in range(n):
        label = 1 if i % 2 == 0 else -1
        first = label * (margin + rng.uniform(0.0, 1.0))
        pairs = [(0, first)]
        for j in rng.choice(np.arange(1, dim), size=4, replace=False):
            pairs.append((int(j), rng.uniform(-0.3, 0.3)))
        X.append(sv(pairs, dim))
        y.append(label)
    return X, y


class TestTrainLinear:
    def test_two_point_separable(self):
        cfg = TrainConfig(C=10.0, tol=1e-6)
        model = train_linear(TWO_POINTS, TWO_LABELS, cfg)
        assert model.w[0] > 0
        assert predict_linear(model, TWO_POINTS[0]) > 0
        assert predict_linear(model, TWO_POINTS[1]) < 0

    def test_two_point_objective_matches_analytic_optimum(self):
        # Minimizing 0.5*w^2 + 10*[hinge(w+b) + hinge(w-b)] over (w, b) gives
        # w = 1, b = 0 and objective 0.5 (margins exactly 1, no hinge loss).
        cfg = TrainConfig(C=10.0, tol=1e-8)
        model = train_linear(TWO_POINTS, TWO_LABELS, cfg)
        assert linear_objective(model, TWO_POINTS, TWO_LABELS, cfg) == pytest.approx(
            0.5, abs=1e-4
        )

    def test_separable_blobs_zero_training_error(self):
        X, y = separable_blobs()
        model = train_linear(X, y, TrainConfig(C=10.0, tol=1e-4))
        errors = sum(
            1 for xi, yi in zip(X, y) if (predict_linear(model, xi) >= 0) != (yi > 0)
        )
        assert errors == 0

    def test_empty_data(self):
        with pytest.raises(EmptyData):
            train_linear([], [], TrainConfig())

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            train_linear(TWO_POINTS, [1], TrainConfig())

    def test_single_class_allowed_with_warning(self):
        model = train_linear(TWO_POINTS, [1, 1], TrainConfig())
        assert model.warning is not None and "single-class" in model.warning
        assert predict_linear(model, TWO_POINTS[0]) >= 0

    def test_balanced_weighting_sums_match_exactly(self):
        y = np.array([1.0, 1.0, -1.0, -1.0, -1.0, -1.0])
        C_arr = box_constraints(TrainConfig(C=2.0), y)
        assert C_arr[y > 0].sum() == C_arr[y < 0].sum()

    def test_explicit_positive_weight(self):
        y = np.array([1.0, -1.0])
        C_arr = box_constraints(TrainConfig(C=2.0, positive_weight=3.0), y)
        assert C_arr.tolist() == [6.0, 2.0]

    def test_seeded_determinism_bytes(self):
        X, y = separable_blobs(n=60)
        cfg = TrainConfig(C=1.0, seed=11)
        m1 = train_linear(X, y, cfg)
        m2 = train_linear(X, y, cfg)
        assert canonical_json_bytes(linear_payload(m1)) == canonical_json_bytes(
            linear_payload(m2)
        )


class TestPredictLinear:
    def test_zero_model_returns_bias(self):
        from claudette.svm import LinearModel

        model = LinearModel(w=np.zeros(4), b=0.25)
        assert predict_linear(model, sv([(1, 5.0)], 4)) == 0.25

    def test_unit_self_dot(self):
        from claudette.svm import LinearModel

        x = sv([(0, 0.6), (1, 0.8)], 2)
        model = LinearModel(w=np.array([0.6, 0.8]), b=0.0)
        assert predict_linear(model, x) == pytest.approx(1.0)

    def test_dimension_mismatch(self):
        from claudette.svm import LinearModel

        model = LinearModel(w=np.zeros(4), b=0.0)
        with pytest.raises(DimensionMismatch):
            predict_linear(model, sv([(0, 1.0)], 3))


def identity_gram(n=2):
    return KernelGram(matrix=np.eye(n), lam=1.0, normalized=True)


def random_psd_gram(n, seed):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(n, max(2, n // 2)))
    K = A @ A.T
    d = np.sqrt(np.diag(K))
    K = K / np.outer(d, d)  # normalize like a kernel
    return KernelGram(matrix=K, lam=0.4, normalized=True)


class TestTrainSmo:
    def test_two_point_identity_gram(self):
        cfg = TrainConfig(C=1.0, tol=1e-6)
        model = train_smo(identity_gram(), [1, -1], cfg)
        alphas = np.abs(model.coef)
        assert alphas == pytest.approx([1.0, 1.0], abs=1e-6)
        assert model.b == pytest.approx(0.0, abs=1e-6)
        assert model.support_idx.tolist() == [0, 1]

    def test_equality_constraint(self):
        model = train_smo(identity_gram(), [1, -1], TrainConfig(tol=1e-6))
        assert abs(model.coef.sum()) <= 1e-6

    def test_on_margin_prediction(self):
        model = train_smo(identity_gram(), [1, -1], TrainConfig(tol=1e-8))
        # kernel row of training point 0 against the two supports
        score = predict_kernel(model, [1.0, 0.0])
        assert 1 * score >= 1 - 1e-6

    def test_random_psd_grams_reach_kkt(self):
        for seed in range(5):
            n = 20 + seed * 5
            gram = random_psd_gram(n, seed)
            rng = np.random.default_rng(100 + seed)
            y = np.where(rng.random(n) < 0.4, 1, -1)
            if np.all(y == y[0]):
                y[0] = -y[0]
            cfg = TrainConfig(C=1.0, tol=1e-3)
            model = train_smo(gram, list(y), cfg)
            assert model.warning is None
            assert model.kkt_violation < cfg.tol
            assert abs(model.coef.sum()) <= cfg.tol
            # box feasibility
            C_arr = box_constraints(cfg, y.astype(float))
            alphas = np.abs(model.coef)
            assert np.all(alphas >= -1e-12)
            assert np.all(alphas <= C_arr[model.support_idx] + 1e-9)
            # recomputing the violation from scratch agrees
            alpha_full = np.zeros(n)
            alpha_full[model.support_idx] = alphas
            assert kkt_violation(gram, list(y), alpha_full, cfg) == pytest.approx(
                model.kkt_violation, abs=1e-9
            )

    def test_dual_objective_trace_nondecreasing(self):
        gram = random_psd_gram(30, 7)
        rng = np.random.default_rng(7)
        y = np.where(rng.random(30) < 0.5, 1, -1)
        if np.all(y == y[0]):
            y[0] = -y[0]
        model = train_smo(gram, list(y), TrainConfig(tol=1e-5))
        trace = model.objective_trace
        assert len(trace) > 1
        for a, b in zip(trace, trace[1:]):
            assert b >= a - 1e-9

    def test_not_square(self):
        gram = KernelGram(matrix=np.zeros((2, 3)), lam=1.0, normalized=False)
        with pytest.raises(NotSquare):
            train_smo(gram, [1, -1], TrainConfig())

    def test_single_class_rejected(self):
        with pytest.raises(SingleClass):
            train_smo(identity_gram(), [1, 1], TrainConfig())

    def test_label_count_mismatch(self):
        with pytest.raises(LengthMismatch):
            train_smo(identity_gram(), [1, -1, 1], TrainConfig())

    def test_iteration_cap_is_soft(self):
        gram = random_psd_gram(30, 3)
        rng = np.random.default_rng(3)
        y = np.where(rng.random(30) < 0.5, 1, -1)
        if np.all(y == y[0]):
            y[0] = -y[0]
        model = train_smo(gram, list(y), TrainConfig(tol=1e-9, max_iter=2))
        assert model.warning is not None and "no-convergence" in model.warning
        assert np.all(np.isfinite(model.coef))


class TestPredictKernel:
    def make_model(self, coef, b=0.0):
        coef = np.asarray(coef, dtype=float)
        return KernelModel(
            support_idx=np.arange(len(coef)),
            coef=coef,
            b=b,
            lam=0.4,
            normalized=True,
            n_train=len(coef),
            kkt_violation=0.0,
        )

    def test_no_supports_returns_bias(self):
        model = self.make_model([], b=0.75)
        assert predict_kernel(model, []) == 0.75

    def test_linearity_in_kernel_row(self):
        model = self.make_model([0.5, -0.25], b=0.1)
        row = [0.8, 0.4]
        base = predict_kernel(model, row) - model.b
        doubled = predict_kernel(model, [2 * v for v in row]) - model.b
        assert doubled == pytest.approx(2 * base)

    def test_length_mismatch(self):
        model = self.make_model([0.5, -0.25])
        with pytest.raises(LengthMismatch):
            predict_kernel(model, [1.0])
