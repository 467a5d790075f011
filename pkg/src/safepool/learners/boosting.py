"""Gradient-boosted trees minimizing the weighted multinomial softmax loss.

Second-order exact-greedy formulation: per round and per category, a
regression tree is grown on the gradient/hessian pairs of the softmax loss,
with leaf value -G/(H + lambda), lambda = 1. Split gain is the standard
second-order improvement and a split is valid only when each child's hessian
sum reaches ``min_child_weight``. Raw scores start at the log of the weighted
base rates, so a learning rate of 0 forecasts the weighted base rate
everywhere. Sample weights are normalized to mean 1 at fit time, making the
fit invariant to a global weight rescaling.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import ceil, floor

import numpy as np

from .base import KIND_PROBABILISTIC, BoostingSpec, TrainedModel, softmax

LAMBDA = 1.0


@dataclass
class ScoreTree:
    feature: np.ndarray  # -1 at leaves
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray  # leaf scores

    def apply(self, X: np.ndarray) -> np.ndarray:
        out = np.empty(X.shape[0])
        stack = [(0, np.arange(X.shape[0]))]
        while stack:
            node, rows = stack.pop()
            if rows.size == 0:
                continue
            f = self.feature[node]
            if f < 0:
                out[rows] = self.value[node]
                continue
            goes_right = X[rows, f] > 0.5
            stack.append((self.right[node], rows[goes_right]))
            stack.append((self.left[node], rows[~goes_right]))
        return out


def _grow_score_tree(
    X: np.ndarray,
    g: np.ndarray,
    h: np.ndarray,
    rows: np.ndarray,
    max_depth: int,
    min_child_weight: float,
    columns_by_level: list[np.ndarray],
) -> ScoreTree:
    feature: list[int] = []
    left: list[int] = []
    right: list[int] = []
    value: list[float] = []

    stack: list[tuple[np.ndarray, int, int, bool]] = [(rows, 0, -1, False)]
    while stack:
        node_rows, depth, parent, is_left = stack.pop()
        node_id = len(feature)
        if parent >= 0:
            (left if is_left else right)[parent] = node_id
        feature.append(-1)
        left.append(-1)
        right.append(-1)

        G = g[node_rows].sum()
        H = h[node_rows].sum()
        value.append(-G / (H + LAMBDA))
        if depth >= max_depth or H < 2.0 * min_child_weight or node_rows.size < 2:
            continue

        cols = columns_by_level[depth]
        Xs = X[np.ix_(node_rows, cols)]
        G_right = Xs.T @ g[node_rows]
        H_right = Xs.T @ h[node_rows]
        G_left = G - G_right
        H_left = H - H_right
        valid = (H_left >= min_child_weight) & (H_right >= min_child_weight)
        if not valid.any():
            continue
        gain = (
            G_left**2 / (H_left + LAMBDA)
            + G_right**2 / (H_right + LAMBDA)
            - G**2 / (H + LAMBDA)
        )
        gain = np.where(valid, gain, -np.inf)
        best = int(np.argmax(gain))
        if gain[best] <= 1e-12:
            continue

        split_col = int(cols[best])
        feature[node_id] = split_col
        goes_right = X[node_rows, split_col] > 0.5
        stack.append((node_rows[goes_right], depth + 1, node_id, False))
        stack.append((node_rows[~goes_right], depth + 1, node_id, True))

    return ScoreTree(
        np.array(feature, dtype=np.int64),
        np.array(left, dtype=np.int64),
        np.array(right, dtype=np.int64),
        np.array(value),
    )


class BoostingModel(TrainedModel):
    kind = KIND_PROBABILISTIC

    def __init__(self, spec, categories, seed, base_score, rounds, training_loss):
        super().__init__(spec, categories, seed)
        self.base_score = base_score  # (K,) initial raw scores
        self.rounds = rounds  # list of per-category ScoreTree lists
        self.training_loss = training_loss  # weighted NLL before each round + final

    def raw_scores(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        F = np.tile(self.base_score, (X.shape[0], 1))
        lr = self.spec.learning_rate
        for trees in self.rounds:
            for c, tree in enumerate(trees):
                F[:, c] += lr * tree.apply(X)
        return F

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return softmax(self.raw_scores(X))


def _weighted_nll(P: np.ndarray, y: np.ndarray, w: np.ndarray) -> float:
    eps = 1e-300
    return float(-(w * np.log(np.maximum(P[np.arange(len(y)), y], eps))).sum() / w.sum())


def fit_boosting(
    spec: BoostingSpec,
    X: np.ndarray,
    y: np.ndarray,
    categories: tuple[str, ...],
    weights: np.ndarray,
    seed: int,
) -> BoostingModel:
    n, n_features = X.shape
    K = len(categories)
    w = weights / weights.mean()

    class_mass = np.array([w[y == c].sum() for c in range(K)])
    base_score = np.log(np.maximum(class_mass / class_mass.sum(), 1e-12))
    F = np.tile(base_score, (n, 1))
    onehot = np.eye(K)[y]

    n_sub = max(1, floor(spec.subsample * n)) if spec.subsample < 1.0 else n
    n_cols = max(1, ceil(spec.colsample_bylevel * n_features))

    rounds = []
    losses = []
    for t in range(spec.ntrees):
        P = softmax(F)
        losses.append(_weighted_nll(P, y, w))
        round_rng = np.random.default_rng([seed, t])
        rows = (
            np.sort(round_rng.choice(n, size=n_sub, replace=False))
            if n_sub < n
            else np.arange(n)
        )
        trees = []
        for c in range(K):
            g = w * (P[:, c] - onehot[:, c])
            h = w * P[:, c] * (1.0 - P[:, c])
            tree_rng = np.random.default_rng([seed, t, c])
            columns_by_level = [
                np.sort(tree_rng.choice(n_features, size=n_cols, replace=False))
                if n_cols < n_features
                else np.arange(n_features)
                for _ in range(spec.max_depth)
            ]
            tree = _grow_score_tree(
                X, g, h, rows, spec.max_depth, spec.min_child_weight, columns_by_level
            )
            if spec.learning_rate != 0.0:
                F[:, c] += spec.learning_rate * tree.apply(X)
            trees.append(tree)
        rounds.append(trees)
    losses.append(_weighted_nll(softmax(F), y, w))

    return BoostingModel(spec, categories, seed, base_score, rounds, losses)
