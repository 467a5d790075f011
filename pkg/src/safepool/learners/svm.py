"""One-vs-rest linear SVM with weighted squared-hinge loss.

Per class c the objective is

    0.5 ||w||^2 + C * sum_i s_i * max(0, 1 - y_i w.x_i)^2

with y_i in {-1, +1}, per-sample weights s_i, and a bias handled as an
augmented all-ones column (regularized like the other coordinates). C scales
the data term, so doubling every s_i while halving C leaves the objective,
and hence the fitted model, exactly unchanged.

Minimization is deterministic cyclic coordinate descent with per-coordinate
Newton steps and backtracking; a sweep whose largest coordinate update falls
below 1e-6 terminates. Sweeps are capped at 500, which matters only for
extreme C values where the near-hard-margin problem conditions badly.
"""
from __future__ import annotations

import numpy as np

from .base import KIND_LABEL_ONLY, LinearSvmSpec, TrainedModel
from ..errors import LabelOnlyModelError

TOLERANCE = 1e-6
MAX_SWEEPS = 500


def _squared_hinge(z: np.ndarray, y: np.ndarray, s: np.ndarray, C: float) -> float:
    margin = 1.0 - y * z
    active = margin > 0
    return C * float((s[active] * margin[active] ** 2).sum())


def _cd_fit(Xa: np.ndarray, y: np.ndarray, s: np.ndarray, C: float) -> np.ndarray:
    n, d = Xa.shape
    w = np.zeros(d)
    z = np.zeros(n)
    for _ in range(MAX_SWEEPS):
        max_step = 0.0
        for j in range(d):
            xj = Xa[:, j]
            margin = 1.0 - y * z
            active = margin > 0
            grad = w[j] - 2.0 * C * float((s * margin * y * xj)[active].sum())
            if grad == 0.0:
                continue
            hess = 1.0 + 2.0 * C * float((s * xj * xj)[active].sum())
            step = -grad / hess
            obj = 0.5 * float(w @ w) + _squared_hinge(z, y, s, C)
            for _halving in range(40):
                w_j = w[j] + step
                z_new = z + step * xj
                obj_new = 0.5 * float(w @ w - w[j] ** 2 + w_j**2) + _squared_hinge(z_new, y, s, C)
                if obj_new <= obj:
                    break
                step *= 0.5
            else:
                continue
            w[j] = w_j
            z = z_new
            max_step = max(max_step, abs(step))
        if max_step < TOLERANCE:
            break
    return w


class SvmModel(TrainedModel):
    kind = KIND_LABEL_ONLY

    def __init__(self, spec, categories, seed, weight_matrix):
        super().__init__(spec, categories, seed)
        self.weight_matrix = weight_matrix  # (K, d+1), bias last

    def decision_scores(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        Xa = np.hstack([X, np.ones((X.shape[0], 1))])
        return Xa @ self.weight_matrix.T

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        raise LabelOnlyModelError("linear SVM returns discrete labels only")

    def predict_labels(self, X: np.ndarray) -> list[str]:
        idx = self.decision_scores(X).argmax(axis=1)
        return [self.categories[i] for i in idx]


def fit_svm(
    spec: LinearSvmSpec,
    X: np.ndarray,
    y: np.ndarray,
    categories: tuple[str, ...],
    weights: np.ndarray,
    seed: int,
) -> SvmModel:
    n = X.shape[0]
    Xa = np.hstack([X, np.ones((n, 1))])
    W = np.zeros((len(categories), Xa.shape[1]))
    for c in range(len(categories)):
        y_signed = np.where(y == c, 1.0, -1.0)
        W[c] = _cd_fit(Xa, y_signed, weights, spec.C)
    return SvmModel(spec, categories, seed, W)
