"""Confusion matrices, per-category precision/recall/F1, and gains.

Conventions (documented because they change baseline scores materially):
zero-denominator precision or recall scores ``zero_division`` (default 0), and
macro-F1 averages only categories with nonzero support unless
``include_zero_support`` is set.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import UnknownLabelError


@dataclass(frozen=True)
class ConfusionMatrix:
    """counts[i][j] = observations of category i predicted as category j."""

    categories: tuple[str, ...]
    counts: np.ndarray

    @property
    def total(self) -> int:
        return int(self.counts.sum())


@dataclass(frozen=True)
class ScoreTable:
    categories: tuple[str, ...]
    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    support: np.ndarray
    macro_f1: float
    weighted_f1: float


def confusion(truth: Sequence, pred: Sequence, categories: Sequence[str]) -> ConfusionMatrix:
    if len(truth) != len(pred):
        raise ValueError(f"truth has {len(truth)} labels, pred has {len(pred)}")
    categories = tuple(categories)
    index = {c: i for i, c in enumerate(categories)}
    counts = np.zeros((len(categories), len(categories)), dtype=np.int64)
    for t, p in zip(truth, pred):
        try:
            counts[index[t], index[p]] += 1
        except KeyError as exc:
            raise UnknownLabelError(exc.args[0]) from None
    return ConfusionMatrix(categories, counts)


def precision_recall_f1(
    cm: ConfusionMatrix,
    zero_division: float = 0.0,
    include_zero_support: bool = False,
) -> ScoreTable:
    counts = cm.counts.astype(float)
    diag = np.diag(counts)
    pred_totals = counts.sum(axis=0)
    support = counts.sum(axis=1)

    precision = np.where(pred_totals > 0, diag / np.maximum(pred_totals, 1.0), zero_division)
    recall = np.where(support > 0, diag / np.maximum(support, 1.0), zero_division)
    denom = precision + recall
    f1 = np.where(denom > 0, 2.0 * precision * recall / np.maximum(denom, 1e-300), 0.0)

    scored = np.ones(len(cm.categories), dtype=bool) if include_zero_support else support > 0
    macro = float(f1[scored].mean()) if scored.any() else 0.0
    total_support = support[scored].sum()
    weighted = float((f1[scored] * support[scored]).sum() / total_support) if total_support > 0 else 0.0
    return ScoreTable(
        cm.categories,
        precision,
        recall,
        f1,
        support.astype(np.int64),
        macro,
        weighted,
    )


def macro_f1(
    truth: Sequence,
    pred: Sequence,
    categories: Sequence[str] | None = None,
    zero_division: float = 0.0,
    include_zero_support: bool = False,
) -> float:
    """Convenience wrapper: confusion + scores in one call."""
    if categories is None:
        categories = sorted(set(truth) | set(pred))
    cm = confusion(truth, pred, categories)
    return precision_recall_f1(cm, zero_division, include_zero_support).macro_f1


def score_predictions(
    truth: Sequence,
    pred: Sequence,
    categories: Sequence[str],
    zero_division: float = 0.0,
    include_zero_support: bool = False,
) -> ScoreTable:
    cm = confusion(truth, pred, categories)
    return precision_recall_f1(cm, zero_division, include_zero_support)


def gain(candidate: ScoreTable, baseline: ScoreTable) -> float:
    """Candidate minus baseline macro-F1, in points on the 0-100 scale."""
    return 100.0 * (candidate.macro_f1 - baseline.macro_f1)
