"""Train/validation/test split construction and leakage-free pooling.

Splits are unstratified random partitions without replacement. Sizes follow a
floor/floor/remainder rule: with the default 64/16/20 ratios a combination of
``n`` records yields ``floor(0.64 n)`` train, ``floor(0.16 n)`` validation,
and the remainder test. Pooled splits are unions of their parts, so record
identity (and therefore test-set disjointness) is preserved exactly.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import EmptyInputError, MixedOutcomeError
from .records import (
    SCOPE_FULL,
    SCOPE_PER_DOMAIN,
    AccidentRecord,
    CombinationKey,
)

DEFAULT_RATIOS = (0.64, 0.16, 0.20)


@dataclass(frozen=True)
class SplitSet:
    key: CombinationKey
    train: tuple[AccidentRecord, ...]
    validation: tuple[AccidentRecord, ...]
    test: tuple[AccidentRecord, ...]
    seed: int | None = None

    @property
    def sizes(self) -> tuple[int, int, int]:
        return (len(self.train), len(self.validation), len(self.test))

    def part(self, name: str) -> tuple[AccidentRecord, ...]:
        return {"train": self.train, "validation": self.validation, "test": self.test}[name]


def part_sizes(n: int, ratios: Sequence[float] = DEFAULT_RATIOS) -> tuple[int, int, int]:
    """Floor the first two ratios; the remainder goes to test.

    The 1e-9 nudge keeps exact products (e.g. 0.64*25) from flooring one short
    due to binary rounding; default ratios are multiples of 0.04, so the nudge
    can never cross a real boundary.
    """
    n_train = math.floor(n * ratios[0] + 1e-9)
    n_val = math.floor(n * ratios[1] + 1e-9)
    return n_train, n_val, n - n_train - n_val


def split_combination(
    records: Sequence[AccidentRecord],
    key: CombinationKey,
    ratios: Sequence[float] = DEFAULT_RATIOS,
    seed: int = 0,
) -> SplitSet:
    """Randomly partition one combination's records, deterministically per seed."""
    if not records:
        raise EmptyInputError("cannot split an empty record list")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"ratios must sum to 1, got {ratios}")
    n = len(records)
    n_train, n_val, _ = part_sizes(n, ratios)
    order = np.random.default_rng(seed).permutation(n)
    train = tuple(records[i] for i in order[:n_train])
    validation = tuple(records[i] for i in order[n_train : n_train + n_val])
    test = tuple(records[i] for i in order[n_train + n_val :])
    return SplitSet(key, train, validation, test, seed=seed)


def pool_splits(
    parts: Sequence[SplitSet],
    scope: str,
    domain: str | None = None,
) -> SplitSet:
    """Union the parts of several splits into one generic split.

    All parts must share the outcome; per-domain pooling additionally requires
    a single domain. Records keep their identity, so any pooled train or
    validation set stays disjoint from every constituent test set.
    """
    if not parts:
        raise EmptyInputError("nothing to pool")
    outcomes = {p.key.outcome for p in parts}
    if len(outcomes) != 1:
        raise MixedOutcomeError(f"cannot pool splits across outcomes: {sorted(o.value for o in outcomes)}")
    outcome = outcomes.pop()
    if scope == SCOPE_PER_DOMAIN:
        domains = {p.key.domain for p in parts}
        if domain is None:
            if len(domains) != 1:
                raise ValueError(f"per-domain pooling across domains: {sorted(domains)}")
            domain = domains.pop()
        elif domains != {domain}:
            raise ValueError(f"parts do not all belong to domain {domain!r}")
        key = CombinationKey.per_domain(domain, outcome)
    elif scope == SCOPE_FULL:
        key = CombinationKey.full(outcome)
    else:
        raise ValueError(f"unknown pooling scope {scope!r}")

    train = tuple(r for p in parts for r in p.train)
    validation = tuple(r for p in parts for r in p.validation)
    test = tuple(r for p in parts for r in p.test)
    return SplitSet(key, train, validation, test, seed=None)


def write_manifest(split: SplitSet, path: str | Path) -> None:
    """Persist the split as (part, record_id) rows for audit and exact re-runs."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["part", "record_id"])
        for part in ("train", "validation", "test"):
            for record in split.part(part):
                writer.writerow([part, record.record_id])


def read_manifest(path: str | Path) -> dict[str, list[int]]:
    parts: dict[str, list[int]] = {"train": [], "validation": [], "test": []}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            parts[row["part"]].append(int(row["record_id"]))
    return parts


def split_from_manifest(
    path: str | Path,
    key: CombinationKey,
    records_by_id: Mapping[int, AccidentRecord],
    seed: int | None = None,
) -> SplitSet:
    parts = read_manifest(path)
    return SplitSet(
        key,
        tuple(records_by_id[i] for i in parts["train"]),
        tuple(records_by_id[i] for i in parts["validation"]),
        tuple(records_by_id[i] for i in parts["test"]),
        seed=seed,
    )
