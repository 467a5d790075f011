"""Shared learner machinery: specs, the fitted-model base class, encodings."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from ..errors import (
    EmptyTrainingSetError,
    LabelOnlyModelError,
    SingleCategoryError,
)
from ..records import AccidentRecord, Outcome

FAMILY_BOOSTING = "boosting"
FAMILY_FOREST = "forest"
FAMILY_LOGISTIC = "logistic"
FAMILY_SVM = "svm"

# Canonical ordering, used wherever families are iterated or tie-broken.
FAMILIES = (FAMILY_BOOSTING, FAMILY_FOREST, FAMILY_LOGISTIC, FAMILY_SVM)

KIND_PROBABILISTIC = "probabilistic"
KIND_LABEL_ONLY = "label_only"


@dataclass(frozen=True)
class RandomForestSpec:
    ntree: int
    mtry: int
    nodesize: int


@dataclass(frozen=True)
class BoostingSpec:
    max_depth: int
    learning_rate: float
    min_child_weight: float
    subsample: float
    colsample_bylevel: float
    ntrees: int = 2000


@dataclass(frozen=True)
class LinearSvmSpec:
    C: float


@dataclass(frozen=True)
class LogisticSpec:
    C: float = 0.2


LearnerSpec = RandomForestSpec | BoostingSpec | LinearSvmSpec | LogisticSpec

_SPEC_FAMILY = {
    BoostingSpec: FAMILY_BOOSTING,
    RandomForestSpec: FAMILY_FOREST,
    LogisticSpec: FAMILY_LOGISTIC,
    LinearSvmSpec: FAMILY_SVM,
}


def family_of(spec: LearnerSpec) -> str:
    return _SPEC_FAMILY[type(spec)]


@dataclass(frozen=True)
class ProbabilisticForecast:
    """A probability distribution over an ordered category list."""

    categories: tuple[str, ...]
    probabilities: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probabilities, dtype=float)
        if len(p) != len(self.categories):
            raise ValueError("probability vector length does not match categories")
        if (p < -1e-12).any() or abs(p.sum() - 1.0) > 1e-9:
            raise ValueError("probabilities must be nonnegative and sum to 1")
        object.__setattr__(self, "probabilities", p)


class TrainedModel:
    """Base class for fitted learners.

    Probabilistic models implement ``predict_proba``; label-only models (the
    linear SVM) implement ``decision_scores`` and raise on probability
    requests. Category order is the canonical lexicographic order of the
    training labels, and all argmax tie-breaking follows it.
    """

    kind = KIND_PROBABILISTIC

    def __init__(self, spec: LearnerSpec, categories: Sequence[str], seed: int):
        self.spec = spec
        self.categories = tuple(categories)
        self.seed = seed

    @property
    def family(self) -> str:
        return family_of(self.spec)

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def predict_labels(self, X: np.ndarray) -> list[str]:
        proba = self.predict_proba(np.asarray(X, dtype=float))
        idx = proba.argmax(axis=1)
        return [self.categories[i] for i in idx]


def canonical_categories(labels: Iterable[str]) -> tuple[str, ...]:
    return tuple(sorted(set(labels)))


def design_matrix(records: Sequence[AccidentRecord]) -> np.ndarray:
    return np.array([r.attributes for r in records], dtype=float)


def outcome_labels(records: Sequence[AccidentRecord], outcome: Outcome) -> list[str]:
    labels = []
    for r in records:
        label = r.outcomes.get(outcome)
        if label is None:
            raise ValueError(f"record {r.record_id} has no {outcome.value} label")
        labels.append(label)
    return labels


def encode_labels(labels: Sequence[str], categories: Sequence[str]) -> np.ndarray:
    index = {c: i for i, c in enumerate(categories)}
    return np.array([index[l] for l in labels], dtype=np.int64)


def sample_weights(labels: Sequence[str], class_weights: Mapping[str, float]) -> np.ndarray:
    try:
        return np.array([class_weights[l] for l in labels], dtype=float)
    except KeyError as exc:
        raise ValueError(f"no class weight for category {exc.args[0]!r}") from None


def check_training_inputs(records: Sequence[AccidentRecord], outcome: Outcome) -> tuple[str, ...]:
    if not records:
        raise EmptyTrainingSetError("empty training set")
    categories = canonical_categories(outcome_labels(records, outcome))
    if len(categories) < 2:
        raise SingleCategoryError(
            f"training set has a single {outcome.value} category: {categories[0]!r}"
        )
    return categories


def softmax(scores: np.ndarray) -> np.ndarray:
    z = scores - scores.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def require_probabilistic(model: TrainedModel) -> None:
    if model.kind != KIND_PROBABILISTIC:
        raise LabelOnlyModelError(
            f"{model.family} model only returns discrete labels, not distributions"
        )
