"""Binary max-margin classifiers.

Two solvers, matched to the two sentence representations:

* ``train_linear`` — dual coordinate descent on sparse feature vectors with an
  augmented (regularized) bias feature; O(nnz) per update.
* ``train_smo`` — two-variable SMO with maximal-violating-pair selection on a
  precomputed kernel matrix.

Class imbalance is handled by an asymmetric box: C_i = C * positive_weight
for positive examples and C otherwise.  The default positive_weight is
n_neg / n_pos, which balances the total box mass of the two classes exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .features import SparseVector
from .treekernel import KernelGram


class EmptyData(ValueError):
    pass


class SingleClass(ValueError):
    pass


class NotSquare(ValueError):
    pass


class DimensionMismatch(ValueError):
    pass


class LengthMismatch(ValueError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    C: float = 1.0
    positive_weight: float | None = None  # None -> balanced (n_neg / n_pos)
    tol: float = 1e-3
    max_iter: int = 10_000
    seed: int = 0
    epochs: int = 20  # used by the structured chain trainer

    def __post_init__(self) -> None:
        if self.C <= 0:
            raise ValueError("C must be positive")
        if self.positive_weight is not None and self.positive_weight <= 0:
            raise ValueError("positive_weight must be positive")
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1 or self.epochs < 1:
            raise ValueError("iteration counts must be >= 1")


def resolve_positive_weight(cfg: TrainConfig, y: np.ndarray) -> float:
    if cfg.positive_weight is not None:
        return cfg.positive_weight
    n_pos = int(np.sum(y > 0))
    n_neg = int(np.sum(y < 0))
    if n_pos == 0 or n_neg == 0:
        return 1.0
    return n_neg / n_pos


def box_constraints(cfg: TrainConfig, y: np.ndarray) -> np.ndarray:
    pw = resolve_positive_weight(cfg, y)
    return np.where(y > 0, cfg.C * pw, cfg.C)


@dataclass
class LinearModel:
    w: np.ndarray
    b: float
    warning: str | None = None

    @property
    def dim(self) -> int:
        return int(self.w.shape[0])


@dataclass
class KernelModel:
    support_idx: np.ndarray  # indices into the training set
    coef: np.ndarray  # alpha_i * y_i per support
    b: float
    lam: float
    normalized: bool
    n_train: int
    kkt_violation: float
    objective_trace: list[float] = field(default_factory=list, repr=False)
    warning: str | None = None

    @property
    def n_support(self) -> int:
        return int(self.support_idx.shape[0])


def _validate_labels(y: Sequence[int]) -> np.ndarray:
    arr = np.asarray(y, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError("labels must be one-dimensional")
    if not np.all(np.isin(arr, (-1.0, 1.0))):
        raise ValueError("labels must be +1 or -1")
    return arr


def train_linear(X: Sequence[SparseVector], y: Sequence[int], cfg: TrainConfig) -> LinearModel:
    """L1-hinge linear SVM by dual coordinate descent.

    Minimizes 0.5*||w||^2 + sum_i C_i * max(0, 1 - y_i (w.x_i + b)) with the
    bias folded in as an augmented constant feature.  Updates sweep a seeded
    random permutation each epoch and stop once the largest projected-gradient
    violation in an epoch drops below ``cfg.tol``.
    """
    if len(X) == 0:
        raise EmptyData("no training examples")
    if len(X) != len(y):
        raise LengthMismatch(f"{len(X)} vectors but {len(y)} labels")
    y_arr = _validate_labels(y)
    dim = X[0].dim
    if any(x.dim != dim for x in X):
        raise DimensionMismatch("training vectors disagree on dimension")

    warning = None
    if np.all(y_arr > 0) or np.all(y_arr < 0):
        warning = f"single-class training set (all {int(y_arr[0]):+d})"

    C_arr = box_constraints(cfg, y_arr)
    n = len(X)
    idx_list = [x.indices for x in X]
    val_list = [x.values for x in X]
    # Q_ii with the augmented bias feature (constant 1)
    q_diag = np.array([float(np.dot(v, v)) + 1.0 for v in val_list])

    w = np.zeros(dim, dtype=np.float64)
    w_b = 0.0
    alpha = np.zeros(n, dtype=np.float64)
    rng = np.random.default_rng(cfg.seed)

    for _ in range(cfg.max_iter):
        max_violation = 0.0
        for i in rng.permutation(n):
            idx, vals, yi, ci = idx_list[i], val_list[i], y_arr[i], C_arr[i]
            score = (float(np.dot(w[idx], vals)) if idx.size else 0.0) + w_b
            g = yi * score - 1.0
            a = alpha[i]
            if a <= 0.0:
                pg = min(g, 0.0)
            elif a >= ci:
                pg = max(g, 0.0)
            else:
                pg = g
            if pg != 0.0:
                max_violation = max(max_violation, abs(pg))
                new_a = min(max(a - g / q_diag[i], 0.0), ci)
                d = (new_a - a) * yi
                if d != 0.0:
                    alpha[i] = new_a
                    w[idx] += d * vals
                    w_b += d
        if max_violation < cfg.tol:
            break

    return LinearModel(w=w, b=float(w_b), warning=warning)


def predict_linear(model: LinearModel, x: SparseVector) -> float:
    """Decision score w.x + b; the predicted label is +1 iff score >= 0."""
    if x.dim != model.dim:
        raise DimensionMismatch(f"input dim {x.dim} != model dim {model.dim}")
    return x.dot_dense(model.w) + model.b


def linear_objective(model: LinearModel, X: Sequence[SparseVector], y: Sequence[int], cfg: TrainConfig) -> float:
    """Primal objective 0.5*||w||^2 + sum_i C_i * hinge_i of a fitted model."""
    y_arr = _validate_labels(y)
    C_arr = box_constraints(cfg, y_arr)
    total = 0.5 * float(np.dot(model.w, model.w))
    for x, yi, ci in zip(X, y_arr, C_arr):
        total += ci * max(0.0, 1.0 - yi * predict_linear(model, x))
    return total


def train_smo(gram: KernelGram, y: Sequence[int], cfg: TrainConfig) -> KernelModel:
    """Kernel SVM dual solved by SMO with maximal-violating-pair selection.

    Terminates when the KKT violation m(alpha) - M(alpha) drops below
    ``cfg.tol``; the bias is the midpoint of the two bounds.  Hitting the
    iteration cap is a soft failure: the best iterate is returned with a
    diagnostic warning instead of raising.
    """
    K = gram.matrix
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise NotSquare(f"gram matrix has shape {K.shape}")
    n = K.shape[0]
    if len(y) != n:
        raise LengthMismatch(f"gram is {n}x{n} but {len(y)} labels")
    if n < 2:
        raise EmptyData("need at least two training examples")
    y_arr = _validate_labels(y)
    if np.all(y_arr > 0) or np.all(y_arr < 0):
        raise SingleClass("kernel training requires both classes")

    C_arr = box_constraints(cfg, y_arr)
    alpha = np.zeros(n, dtype=np.float64)
    grad = -np.ones(n, dtype=np.float64)  # gradient of 0.5 a'Qa - e'a
    trace: list[float] = []
    warning = None

    def dual_objective() -> float:
        # max-form objective: e'a - 0.5 a'Qa = 0.5*(e'a) - 0.5*(a'grad)
        return 0.5 * float(np.sum(alpha)) - 0.5 * float(np.dot(alpha, grad))

    violation = np.inf
    b = 0.0
    it = 0
    while True:
        neg_yg = -y_arr * grad
        up_mask = np.where(y_arr > 0, alpha < C_arr, alpha > 0)
        low_mask = np.where(y_arr > 0, alpha > 0, alpha < C_arr)
        if not up_mask.any() or not low_mask.any():
            violation = 0.0
            break
        up_vals = np.where(up_mask, neg_yg, -np.inf)
        low_vals = np.where(low_mask, neg_yg, np.inf)
        i = int(np.argmax(up_vals))
        j = int(np.argmin(low_vals))
        m_up = up_vals[i]
        m_low = low_vals[j]
        violation = m_up - m_low
        b = 0.5 * (m_up + m_low)
        if violation < cfg.tol:
            break
        if it >= cfg.max_iter:
            warning = f"no-convergence: KKT violation {violation:.3e} after {it} iterations"
            break

        quad = K[i, i] + K[j, j] - 2.0 * K[i, j]
        if quad <= 0.0:
            quad = 1e-12
        step = violation / quad
        # alpha_i moves by +y_i*step, alpha_j by -y_j*step; clip to the box
        if y_arr[i] > 0:
            step = min(step, C_arr[i] - alpha[i])
        else:
            step = min(step, alpha[i])
        if y_arr[j] > 0:
            step = min(step, alpha[j])
        else:
            step = min(step, C_arr[j] - alpha[j])
        alpha[i] += y_arr[i] * step
        alpha[j] -= y_arr[j] * step
        grad += step * y_arr * (K[:, i] - K[:, j])
        trace.append(dual_objective())
        it += 1

    support = np.flatnonzero(alpha > 0.0)
    return KernelModel(
        support_idx=support,
        coef=alpha[support] * y_arr[support],
        b=float(b),
        lam=gram.lam,
        normalized=gram.normalized,
        n_train=n,
        kkt_violation=float(violation),
        objective_trace=trace,
        warning=warning,
    )


def predict_kernel(model: KernelModel, kernel_row: Sequence[float]) -> float:
    """Score sum_i coef_i * K(x, support_i) + b.

    ``kernel_row`` must align with the model's support list.
    """
    row = np.asarray(kernel_row, dtype=np.float64)
    if row.shape[0] != model.n_support:
        raise LengthMismatch(
            f"kernel row has {row.shape[0]} entries but model has {model.n_support} supports"
        )
    return float(np.dot(model.coef, row)) + model.b


def kkt_violation(gram: KernelGram, y: Sequence[int], alpha: np.ndarray, cfg: TrainConfig) -> float:
    """Recompute m(alpha) - M(alpha) from scratch (diagnostic)."""
    y_arr = _validate_labels(y)
    C_arr = box_constraints(cfg, y_arr)
    grad = gram.matrix @ (alpha * y_arr) * y_arr - 1.0
    neg_yg = -y_arr * grad
    up_mask = np.where(y_arr > 0, alpha < C_arr, alpha > 0)
    low_mask = np.where(y_arr > 0, alpha > 0, alpha < C_arr)
    if not up_mask.any() or not low_mask.any():
        return 0.0
    return float(np.max(neg_yg[up_mask]) - np.min(neg_yg[low_mask]))
