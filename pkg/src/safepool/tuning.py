"""Hyperparameter grids, validation-set grid search, and the final refit.

Grid enumeration is the deterministic cross product in declared axis order.
The search objective is validation macro-F1; ties go to the earliest spec in
enumeration order. A stride option subsamples the enumeration uniformly for
desk-scale runs; the full grids stay the documented contract.
"""
from __future__ import annotations

import csv
import time
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Sequence

import numpy as np

from . import learners
from .learners import (
    FAMILY_BOOSTING,
    FAMILY_FOREST,
    FAMILY_LOGISTIC,
    FAMILY_SVM,
    LearnerSpec,
    BoostingSpec,
    LinearSvmSpec,
    LogisticSpec,
    RandomForestSpec,
    TrainedModel,
)
from .metrics import macro_f1
from .records import Outcome
from .seeding import derived_seed
from .splitting import SplitSet
from .weighting import ClassWeights, compute_class_weights
from .records import category_counts

RF_NTREE = tuple(range(100, 1601, 100))
RF_MTRY = tuple(range(5, 46, 5))
RF_NODESIZE = (1, 2, 5, 10, 25, 50)

BOOST_MAX_DEPTH = (3, 4, 5, 6)
BOOST_LEARNING_RATE = (0.01, 0.05, 0.1)
BOOST_MIN_CHILD_WEIGHT = (1, 3, 5, 10)
BOOST_SUBSAMPLE = (0.3, 0.5, 0.7, 1)
BOOST_COLSAMPLE = (0.3, 0.5, 0.7, 1)

SVM_GRID_SIZE = 3000
SVM_LOG10_RANGE = (-9.0, 9.0)


def enumerate_grid(family: str) -> list[LearnerSpec]:
    """Exhaustive, duplicate-free spec list in deterministic order."""
    if family == FAMILY_FOREST:
        return [
            RandomForestSpec(ntree, mtry, nodesize)
            for ntree in RF_NTREE
            for mtry in RF_MTRY
            for nodesize in RF_NODESIZE
        ]
    if family == FAMILY_BOOSTING:
        return [
            BoostingSpec(depth, lr, mcw, sub, col)
            for depth in BOOST_MAX_DEPTH
            for lr in BOOST_LEARNING_RATE
            for mcw in BOOST_MIN_CHILD_WEIGHT
            for sub in BOOST_SUBSAMPLE
            for col in BOOST_COLSAMPLE
        ]
    if family == FAMILY_SVM:
        lo, hi = SVM_LOG10_RANGE
        return [LinearSvmSpec(float(10.0**x)) for x in np.linspace(lo, hi, SVM_GRID_SIZE)]
    if family == FAMILY_LOGISTIC:
        return [LogisticSpec()]
    raise ValueError(f"unknown learner family {family!r}")


def stride_grid(specs: Sequence[LearnerSpec], stride: int) -> list[LearnerSpec]:
    """Uniform stride over enumeration order, always keeping the first spec."""
    if stride < 1:
        raise ValueError("stride must be >= 1")
    return list(specs[::stride])


def is_on_grid(spec: LearnerSpec) -> bool:
    """True when every parameter lies on its declared grid axis."""
    if isinstance(spec, RandomForestSpec):
        return spec.ntree in RF_NTREE and spec.mtry in RF_MTRY and spec.nodesize in RF_NODESIZE
    if isinstance(spec, BoostingSpec):
        return (
            spec.max_depth in BOOST_MAX_DEPTH
            and spec.learning_rate in BOOST_LEARNING_RATE
            and spec.min_child_weight in BOOST_MIN_CHILD_WEIGHT
            and spec.subsample in BOOST_SUBSAMPLE
            and spec.colsample_bylevel in BOOST_COLSAMPLE
            and spec.ntrees == 2000
        )
    if isinstance(spec, LinearSvmSpec):
        lo, hi = SVM_LOG10_RANGE
        axis = 10.0 ** np.linspace(lo, hi, SVM_GRID_SIZE)
        return bool(np.isclose(axis, spec.C, rtol=1e-12).any())
    if isinstance(spec, LogisticSpec):
        return spec.C == 0.2
    return False


@dataclass(frozen=True)
class TraceEntry:
    index: int
    spec: LearnerSpec
    score: float
    wall_time: float


@dataclass(frozen=True)
class GridSearchResult:
    family: str
    best_spec: LearnerSpec
    best_score: float
    best_index: int
    trace: tuple[TraceEntry, ...]


def _validation_score(model: TrainedModel, split: SplitSet, outcome: Outcome) -> float:
    truth = [r.outcomes[outcome] for r in split.validation]
    pred = learners.predict_labels(model, split.validation)
    categories = sorted(set(truth) | set(model.categories))
    return macro_f1(truth, pred, categories)


def grid_search(
    family: str,
    split: SplitSet,
    outcome: Outcome,
    weights: ClassWeights,
    seed: int,
    stride: int = 1,
    specs: Sequence[LearnerSpec] | None = None,
) -> GridSearchResult:
    """Fit every candidate on the training part; keep the best validation macro-F1.

    ``specs`` overrides the family grid (used by tests and reduced runs);
    enumeration indices refer to the evaluated sequence either way.
    """
    if not split.train or not split.validation:
        raise ValueError("grid search needs nonempty train and validation parts")
    candidates = list(specs) if specs is not None else stride_grid(enumerate_grid(family), stride)
    trace = []
    best_index = -1
    best_score = -np.inf
    for index, spec in enumerate(candidates):
        started = time.perf_counter()
        model = learners.fit(spec, split.train, outcome, weights, derived_seed(seed, index))
        score = _validation_score(model, split, outcome)
        trace.append(TraceEntry(index, spec, score, time.perf_counter() - started))
        if score > best_score:
            best_score = score
            best_index = index
    return GridSearchResult(family, candidates[best_index], float(best_score), best_index, tuple(trace))


def refit_final(
    best: LearnerSpec,
    split: SplitSet,
    outcome: Outcome,
    seed: int,
) -> TrainedModel:
    """Refit on train + validation with class weights recomputed on the union."""
    union = list(split.train) + list(split.validation)
    weights = compute_class_weights(category_counts(union, outcome))
    return learners.fit(best, union, outcome, weights, seed)


def write_trace_csv(result: GridSearchResult, path: str | Path) -> None:
    spec_fields = [f.name for f in fields(result.best_spec)]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", *spec_fields, "validation_macro_f1", "wall_time_s"])
        for entry in result.trace:
            spec = asdict(entry.spec)
            writer.writerow(
                [entry.index, *[spec[f] for f in spec_fields], repr(entry.score), f"{entry.wall_time:.6f}"]
            )
