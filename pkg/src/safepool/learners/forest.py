"""Random forest on binary attributes.

Class weights enter through the bootstrap: each tree draws n samples with
replacement with probability proportional to sample weight, so rescaling all
weights by a constant changes nothing. Splits minimize Gini impurity over the
drawn sample; binary attributes make the candidate threshold always 0.5. A
split is valid only if both children hold at least ``nodesize`` drawn samples.
The forest's probability forecast is the mean of the per-tree leaf class
frequencies.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .base import KIND_PROBABILISTIC, RandomForestSpec, TrainedModel


@dataclass
class Tree:
    feature: np.ndarray  # -1 at leaves
    left: np.ndarray
    right: np.ndarray
    dist: np.ndarray  # (n_nodes, K) class frequencies; meaningful at leaves

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf class-frequency row for every input row."""
        out = np.empty((X.shape[0], self.dist.shape[1]))
        stack = [(0, np.arange(X.shape[0]))]
        while stack:
            node, rows = stack.pop()
            if rows.size == 0:
                continue
            f = self.feature[node]
            if f < 0:
                out[rows] = self.dist[node]
                continue
            goes_right = X[rows, f] > 0.5
            stack.append((self.right[node], rows[goes_right]))
            stack.append((self.left[node], rows[~goes_right]))
        return out


class ForestModel(TrainedModel):
    kind = KIND_PROBABILISTIC

    def __init__(self, spec, categories, seed, trees: list[Tree]):
        super().__init__(spec, categories, seed)
        self.trees = trees

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        total = np.zeros((X.shape[0], len(self.categories)))
        for tree in self.trees:
            total += tree.apply(X)
        return total / len(self.trees)


def _grow_tree(
    X: np.ndarray,
    y: np.ndarray,
    n_categories: int,
    rows: np.ndarray,
    mtry: int,
    nodesize: int,
    rng: np.random.Generator,
) -> Tree:
    n_features = X.shape[1]
    mtry = min(mtry, n_features)
    feature: list[int] = []
    left: list[int] = []
    right: list[int] = []
    dist: list[np.ndarray] = []
    onehot = np.eye(n_categories)[y]

    # (rows, parent, is_left); explicit stack keeps the visit order, and
    # therefore the per-node rng draws, deterministic.
    stack: list[tuple[np.ndarray, int, bool]] = [(rows, -1, False)]
    while stack:
        node_rows, parent, is_left = stack.pop()
        node_id = len(feature)
        if parent >= 0:
            (left if is_left else right)[parent] = node_id
        feature.append(-1)
        left.append(-1)
        right.append(-1)

        m = node_rows.size
        counts = onehot[node_rows].sum(axis=0)
        dist.append(counts / m)
        if m < 2 * nodesize or counts.max() == m:
            continue

        cols = np.sort(rng.choice(n_features, size=mtry, replace=False))
        Xs = X[np.ix_(node_rows, cols)]
        counts_right = Xs.T @ onehot[node_rows]  # (mtry, K)
        counts_left = counts[None, :] - counts_right
        n_right = counts_right.sum(axis=1)
        n_left = m - n_right
        valid = (n_left >= nodesize) & (n_right >= nodesize)
        if not valid.any():
            continue

        with np.errstate(divide="ignore", invalid="ignore"):
            gini_left = 1.0 - (counts_left**2).sum(axis=1) / np.maximum(n_left, 1) ** 2
            gini_right = 1.0 - (counts_right**2).sum(axis=1) / np.maximum(n_right, 1) ** 2
        child_impurity = (n_left * gini_left + n_right * gini_right) / m
        parent_gini = 1.0 - ((counts / m) ** 2).sum()
        improvement = np.where(valid, parent_gini - child_impurity, -np.inf)
        best = int(np.argmax(improvement))
        if improvement[best] <= 1e-12:
            continue

        split_col = int(cols[best])
        feature[node_id] = split_col
        goes_right = X[node_rows, split_col] > 0.5
        # push right first so the left child is grown (and numbered) first
        stack.append((node_rows[goes_right], node_id, False))
        stack.append((node_rows[~goes_right], node_id, True))

    return Tree(
        np.array(feature, dtype=np.int64),
        np.array(left, dtype=np.int64),
        np.array(right, dtype=np.int64),
        np.array(dist),
    )


def fit_forest(
    spec: RandomForestSpec,
    X: np.ndarray,
    y: np.ndarray,
    categories: tuple[str, ...],
    weights: np.ndarray,
    seed: int,
) -> ForestModel:
    n = X.shape[0]
    p = weights / weights.sum()
    trees = []
    for t in range(spec.ntree):
        rng = np.random.default_rng([seed, t])
        bootstrap = rng.choice(n, size=n, replace=True, p=p)
        trees.append(
            _grow_tree(X[bootstrap], y[bootstrap], len(categories), np.arange(n), spec.mtry, spec.nodesize, rng)
        )
    return ForestModel(spec, categories, seed, trees)
