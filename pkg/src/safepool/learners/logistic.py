"""Multinomial logistic regression (softmax) with weighted data term.

Objective: C * sum_i s_i * NLL_i + 0.5 ||W||^2 over the non-bias weights,
mirroring the convention where C multiplies the data term. Solved with
L-BFGS from a zero start, which is deterministic for fixed inputs. The
objective/gradient pair is exposed for independent finite-difference checks.

The category list may include classes absent from the training labels (the
stacking meta-model needs this); regularization keeps their weights finite.
"""
from __future__ import annotations

import numpy as np
from scipy.optimize import minimize

from .base import KIND_PROBABILISTIC, LogisticSpec, TrainedModel, softmax


def loss_and_gradient(
    w_flat: np.ndarray,
    Xa: np.ndarray,
    y: np.ndarray,
    sample_weight: np.ndarray,
    n_classes: int,
    C: float,
) -> tuple[float, np.ndarray]:
    """Weighted softmax NLL plus L2 on non-bias weights, with exact gradient."""
    n, d_aug = Xa.shape
    W = w_flat.reshape(n_classes, d_aug)
    Z = Xa @ W.T
    Z -= Z.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(Z).sum(axis=1))
    log_p = Z - log_norm[:, None]
    cw = C * sample_weight
    loss = float(-(cw * log_p[np.arange(n), y]).sum())
    loss += 0.5 * float((W[:, :-1] ** 2).sum())

    P = np.exp(log_p)
    R = P.copy()
    R[np.arange(n), y] -= 1.0
    R *= cw[:, None]
    grad = R.T @ Xa
    grad[:, :-1] += W[:, :-1]
    return loss, grad.ravel()


class LogisticModel(TrainedModel):
    kind = KIND_PROBABILISTIC

    def __init__(self, spec, categories, seed, weight_matrix):
        super().__init__(spec, categories, seed)
        self.weight_matrix = weight_matrix  # (K, d+1), bias last

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        Xa = np.hstack([X, np.ones((X.shape[0], 1))])
        return softmax(Xa @ self.weight_matrix.T)


def fit_logistic(
    spec: LogisticSpec,
    X: np.ndarray,
    y: np.ndarray,
    categories: tuple[str, ...],
    weights: np.ndarray,
    seed: int,
) -> LogisticModel:
    n = X.shape[0]
    Xa = np.hstack([X, np.ones((n, 1))])
    K = len(categories)
    result = minimize(
        loss_and_gradient,
        np.zeros(K * Xa.shape[1]),
        args=(Xa, y, weights, K, spec.C),
        jac=True,
        method="L-BFGS-B",
        options={"maxiter": 1000, "ftol": 1e-14, "gtol": 1e-9},
    )
    W = result.x.reshape(K, Xa.shape[1])
    return LogisticModel(spec, categories, seed, W)
