"""The four learner families and their shared fit/predict surface."""
from __future__ import annotations

from typing import Mapping, Sequence

import numpy as np

from ..records import AccidentRecord, Outcome
from .base import (
    FAMILIES,
    FAMILY_BOOSTING,
    FAMILY_FOREST,
    FAMILY_LOGISTIC,
    FAMILY_SVM,
    KIND_LABEL_ONLY,
    KIND_PROBABILISTIC,
    BoostingSpec,
    LearnerSpec,
    LinearSvmSpec,
    LogisticSpec,
    ProbabilisticForecast,
    RandomForestSpec,
    TrainedModel,
    check_training_inputs,
    design_matrix,
    encode_labels,
    family_of,
    outcome_labels,
    require_probabilistic,
    sample_weights,
    softmax,
)
from .boosting import BoostingModel, fit_boosting
from .forest import ForestModel, fit_forest
from .logistic import LogisticModel, fit_logistic, loss_and_gradient
from .persist import load_model, model_from_dict, model_to_dict, save_model
from .svm import SvmModel, fit_svm

__all__ = [
    "FAMILIES",
    "FAMILY_BOOSTING",
    "FAMILY_FOREST",
    "FAMILY_LOGISTIC",
    "FAMILY_SVM",
    "KIND_LABEL_ONLY",
    "KIND_PROBABILISTIC",
    "BoostingModel",
    "BoostingSpec",
    "ForestModel",
    "LearnerSpec",
    "LinearSvmSpec",
    "LogisticModel",
    "LogisticSpec",
    "ProbabilisticForecast",
    "RandomForestSpec",
    "SvmModel",
    "TrainedModel",
    "design_matrix",
    "family_of",
    "fit",
    "load_model",
    "loss_and_gradient",
    "model_from_dict",
    "model_to_dict",
    "predict_distribution",
    "predict_label",
    "predict_labels",
    "save_model",
    "softmax",
]

_FITTERS = {
    RandomForestSpec: fit_forest,
    BoostingSpec: fit_boosting,
    LinearSvmSpec: fit_svm,
    LogisticSpec: fit_logistic,
}


def fit(
    spec: LearnerSpec,
    train: Sequence[AccidentRecord],
    outcome: Outcome,
    class_weights: Mapping[str, float],
    seed: int,
) -> TrainedModel:
    """Fit one learner on the training records for the given outcome.

    Model categories are the categories present in the training labels, in
    canonical (lexicographic) order; each record's sample weight is the class
    weight of its label.
    """
    categories = check_training_inputs(train, outcome)
    labels = outcome_labels(train, outcome)
    X = design_matrix(train)
    y = encode_labels(labels, categories)
    w = sample_weights(labels, class_weights)
    return _FITTERS[type(spec)](spec, X, y, categories, w, seed)


def predict_distribution(model: TrainedModel, attributes: Sequence[int]) -> ProbabilisticForecast:
    """Probability distribution over the model's categories for one input."""
    require_probabilistic(model)
    proba = model.predict_proba(np.asarray([attributes], dtype=float))[0]
    return ProbabilisticForecast(model.categories, proba)


def predict_label(model: TrainedModel, attributes: Sequence[int]) -> str:
    """Single label for one input; argmax ties resolve to canonical order."""
    return model.predict_labels(np.asarray([attributes], dtype=float))[0]


def predict_labels(model: TrainedModel, records: Sequence[AccidentRecord]) -> list[str]:
    return model.predict_labels(design_matrix(records))
