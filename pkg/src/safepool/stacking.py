"""Stacking of a generic and a specific model behind a logistic meta-model.

The meta-model input is the weighted elementwise sum of the two base models'
probability vectors, the specific one zero-padded (never renormalized) onto
the generic model's category list. Nineteen coefficient pairs are searched:
(0.1,1) ... (1,1), then (1,0.1) ... (1,0.9). The meta-model is a logistic
regression with C fixed at 0.2, no class weights, trained on the validation
forecasts (the only data unseen by both base models before test); selection
maximizes validation macro-F1 with ties going to the earliest pair.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import learners
from .errors import (
    CategoryNotInTargetError,
    EmptyValidationError,
    LengthMismatchError,
    SvmNotStackableError,
)
from .learners import (
    KIND_PROBABILISTIC,
    LogisticModel,
    LogisticSpec,
    ProbabilisticForecast,
    TrainedModel,
    design_matrix,
    model_from_dict,
    model_to_dict,
)
from .learners.logistic import fit_logistic
from .metrics import macro_f1
from .records import AccidentRecord, Outcome
from .splitting import SplitSet

META_C = 0.2


@dataclass(frozen=True)
class BlendCoefficients:
    generic_weight: float
    specific_weight: float


BLEND_PAIRS: tuple[BlendCoefficients, ...] = tuple(
    [BlendCoefficients(round(a * 0.1, 1), 1.0) for a in range(1, 11)]
    + [BlendCoefficients(1.0, round(b * 0.1, 1)) for b in range(1, 10)]
)


def zero_pad(forecast: ProbabilisticForecast, target: Sequence[str]) -> np.ndarray:
    """Place the forecast onto ``target`` order, zeros elsewhere; no renormalizing."""
    target = tuple(target)
    index = {c: i for i, c in enumerate(target)}
    out = np.zeros(len(target))
    for category, p in zip(forecast.categories, forecast.probabilities):
        if category not in index:
            raise CategoryNotInTargetError(category)
        out[index[category]] = p
    return out


def blend(
    generic_weight: float,
    specific_weight: float,
    generic_probs: np.ndarray,
    specific_padded: np.ndarray,
) -> np.ndarray:
    """Elementwise a*generic + b*specific; a meta-model input, not a distribution."""
    generic_probs = np.asarray(generic_probs, dtype=float)
    specific_padded = np.asarray(specific_padded, dtype=float)
    if generic_probs.shape != specific_padded.shape:
        raise LengthMismatchError(
            f"blend inputs differ in shape: {generic_probs.shape} vs {specific_padded.shape}"
        )
    return generic_weight * generic_probs + specific_weight * specific_padded


@dataclass
class StackedModel:
    generic: TrainedModel
    specific: TrainedModel
    coefficients: BlendCoefficients
    meta: LogisticModel
    validation_score: float

    @property
    def categories(self) -> tuple[str, ...]:
        return self.generic.categories

    @property
    def kind(self) -> str:
        return KIND_PROBABILISTIC


def _padded_proba(model: TrainedModel, X: np.ndarray, target: tuple[str, ...]) -> np.ndarray:
    proba = model.predict_proba(X)
    if model.categories == target:
        return proba
    index = {c: i for i, c in enumerate(target)}
    out = np.zeros((proba.shape[0], len(target)))
    for j, category in enumerate(model.categories):
        if category not in index:
            raise CategoryNotInTargetError(category)
        out[:, index[category]] = proba[:, j]
    return out


def fit_stacker(
    generic: TrainedModel,
    specific: TrainedModel,
    split: SplitSet,
    outcome: Outcome,
    seed: int = 0,
) -> StackedModel:
    """Search the 19 coefficient pairs and return the best stacked model."""
    for base in (generic, specific):
        if base.kind != KIND_PROBABILISTIC:
            raise SvmNotStackableError(
                f"{base.family} base model returns labels only and cannot be stacked"
            )
    if not split.validation:
        raise EmptyValidationError("stacker needs a nonempty validation part")

    target = generic.categories
    X_val = design_matrix(split.validation)
    truth = [r.outcomes[outcome] for r in split.validation]
    generic_val = generic.predict_proba(X_val)
    specific_val = _padded_proba(specific, X_val, target)
    y_val = np.array(
        [target.index(t) if t in target else -1 for t in truth], dtype=np.int64
    )
    if (y_val < 0).any():
        missing = sorted({t for t in truth if t not in target})
        raise CategoryNotInTargetError(missing[0])
    score_categories = sorted(set(truth) | set(target))

    best: StackedModel | None = None
    for pair in BLEND_PAIRS:
        inputs = blend(pair.generic_weight, pair.specific_weight, generic_val, specific_val)
        meta = fit_logistic(
            LogisticSpec(META_C), inputs, y_val, target, np.ones(len(y_val)), seed
        )
        pred = [target[i] for i in meta.predict_proba(inputs).argmax(axis=1)]
        score = macro_f1(truth, pred, score_categories)
        if best is None or score > best.validation_score:
            best = StackedModel(generic, specific, pair, meta, float(score))
    return best


def stacked_predict_proba(model: StackedModel, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    generic_probs = model.generic.predict_proba(X)
    specific_probs = _padded_proba(model.specific, X, model.categories)
    inputs = blend(
        model.coefficients.generic_weight,
        model.coefficients.specific_weight,
        generic_probs,
        specific_probs,
    )
    return model.meta.predict_proba(inputs)


def predict_stacked(model: StackedModel, attributes: Sequence[int]) -> ProbabilisticForecast:
    proba = stacked_predict_proba(model, np.asarray([attributes], dtype=float))[0]
    return ProbabilisticForecast(model.categories, proba)


def stacked_predict_labels(model: StackedModel, records: Sequence[AccidentRecord]) -> list[str]:
    proba = stacked_predict_proba(model, design_matrix(records))
    return [model.categories[i] for i in proba.argmax(axis=1)]


def save_stacker(model: StackedModel, path: str | Path) -> None:
    payload = {
        "format": "safepool-stacker",
        "version": 1,
        "coefficients": [model.coefficients.generic_weight, model.coefficients.specific_weight],
        "validation_score": model.validation_score,
        "generic": model_to_dict(model.generic),
        "specific": model_to_dict(model.specific),
        "meta": model_to_dict(model.meta),
    }
    Path(path).write_text(json.dumps(payload), "utf-8")


def load_stacker(path: str | Path) -> StackedModel:
    payload = json.loads(Path(path).read_text("utf-8"))
    if payload.get("format") != "safepool-stacker":
        raise ValueError("not a stacker artifact")
    a, b = payload["coefficients"]
    return StackedModel(
        model_from_dict(payload["generic"]),
        model_from_dict(payload["specific"]),
        BlendCoefficients(a, b),
        model_from_dict(payload["meta"]),
        payload["validation_score"],
    )
