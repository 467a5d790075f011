"""Model artifacts as self-describing versioned JSON.

Floats are serialized with Python's shortest-repr rule, which round-trips
bit-exactly, so a reloaded model reproduces predictions exactly.
"""
from __future__ import annotations

import json
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .base import (
    BoostingSpec,
    LinearSvmSpec,
    LogisticSpec,
    RandomForestSpec,
    TrainedModel,
    family_of,
    FAMILY_BOOSTING,
    FAMILY_FOREST,
    FAMILY_LOGISTIC,
    FAMILY_SVM,
)
from .boosting import BoostingModel, ScoreTree
from .forest import ForestModel, Tree
from .logistic import LogisticModel
from .svm import SvmModel

FORMAT = "safepool-model"
VERSION = 1

_SPEC_TYPES = {
    FAMILY_BOOSTING: BoostingSpec,
    FAMILY_FOREST: RandomForestSpec,
    FAMILY_LOGISTIC: LogisticSpec,
    FAMILY_SVM: LinearSvmSpec,
}


def model_to_dict(model: TrainedModel) -> dict:
    family = family_of(model.spec)
    payload = {
        "format": FORMAT,
        "version": VERSION,
        "family": family,
        "kind": model.kind,
        "seed": model.seed,
        "categories": list(model.categories),
        "spec": asdict(model.spec),
    }
    if isinstance(model, ForestModel):
        payload["params"] = {
            "trees": [
                {
                    "feature": t.feature.tolist(),
                    "left": t.left.tolist(),
                    "right": t.right.tolist(),
                    "dist": t.dist.tolist(),
                }
                for t in model.trees
            ]
        }
    elif isinstance(model, BoostingModel):
        payload["params"] = {
            "base_score": model.base_score.tolist(),
            "rounds": [
                [
                    {
                        "feature": t.feature.tolist(),
                        "left": t.left.tolist(),
                        "right": t.right.tolist(),
                        "value": t.value.tolist(),
                    }
                    for t in trees
                ]
                for trees in model.rounds
            ],
            "training_loss": list(model.training_loss),
        }
    elif isinstance(model, (SvmModel, LogisticModel)):
        payload["params"] = {"weight_matrix": model.weight_matrix.tolist()}
    else:
        raise TypeError(f"cannot persist model of type {type(model).__name__}")
    return payload


def model_from_dict(payload: dict) -> TrainedModel:
    if payload.get("format") != FORMAT:
        raise ValueError(f"not a {FORMAT} artifact")
    if payload.get("version") != VERSION:
        raise ValueError(f"unsupported artifact version {payload.get('version')}")
    family = payload["family"]
    spec = _SPEC_TYPES[family](**payload["spec"])
    categories = tuple(payload["categories"])
    seed = payload["seed"]
    params = payload["params"]
    if family == FAMILY_FOREST:
        trees = [
            Tree(
                np.array(t["feature"], dtype=np.int64),
                np.array(t["left"], dtype=np.int64),
                np.array(t["right"], dtype=np.int64),
                np.array(t["dist"], dtype=float),
            )
            for t in params["trees"]
        ]
        return ForestModel(spec, categories, seed, trees)
    if family == FAMILY_BOOSTING:
        rounds = [
            [
                ScoreTree(
                    np.array(t["feature"], dtype=np.int64),
                    np.array(t["left"], dtype=np.int64),
                    np.array(t["right"], dtype=np.int64),
                    np.array(t["value"], dtype=float),
                )
                for t in trees
            ]
            for trees in params["rounds"]
        ]
        return BoostingModel(
            spec,
            categories,
            seed,
            np.array(params["base_score"], dtype=float),
            rounds,
            list(params["training_loss"]),
        )
    W = np.array(params["weight_matrix"], dtype=float)
    if family == FAMILY_SVM:
        return SvmModel(spec, categories, seed, W)
    return LogisticModel(spec, categories, seed, W)


def save_model(model: TrainedModel, path: str | Path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model)), "utf-8")


def load_model(path: str | Path) -> TrainedModel:
    return model_from_dict(json.loads(Path(path).read_text("utf-8")))
