"""Inverse-frequency class weights: max(counts) / counts.

The majority category always gets weight 1.0; every other category gets the
exact unrounded ratio. Reporting rounds to one decimal, half away from zero.
"""
from __future__ import annotations

import math
from typing import Mapping

from .errors import EmptyInputError, ZeroCountError

ClassWeights = dict[str, float]


def compute_class_weights(counts: Mapping[str, int]) -> ClassWeights:
    """Exact per-category weights from training-set counts."""
    if not counts:
        raise EmptyInputError("no category counts")
    for category, count in counts.items():
        if count <= 0:
            raise ZeroCountError(category)
    top = max(counts.values())
    return {category: top / count for category, count in counts.items()}


def round_weight(weight: float, decimals: int = 1) -> float:
    """Round half away from zero, matching printed report tables."""
    factor = 10**decimals
    return math.floor(weight * factor + 0.5) / factor
