"""Synthetic data: the imbalance/difficulty study and multi-company pools.

The difficulty study draws labels from lognormal-distributed category
probabilities and measures how badly two trivial baselines do as the category
count grows. The pool generator builds multi-company record sets from a shared
latent rule set (attribute patterns determine the outcome, plus label noise),
the regime where pooling data across companies should help; a disjoint-rule
flag produces the opposite regime for negative tests.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InconsistentRulesError
from .metrics import macro_f1
from .records import DOMAINS, AccidentRecord, Outcome
from .seeding import stable_rng

BASELINE_RANDOM = "random"
BASELINE_MOST_FREQUENT = "most_frequent"


@dataclass(frozen=True)
class ImbalanceSpec:
    n_categories: int
    n_samples: int = 100_000
    lognormal_sd: float = 2.0
    seed: int = 0

    def __post_init__(self):
        if self.n_categories < 2:
            raise ValueError("need at least 2 categories")


def category_probabilities(spec: ImbalanceSpec, pool_size: int | None = None) -> np.ndarray:
    """Normalized exp(Normal(0, sd)) category weights, deterministic per seed.

    ``pool_size`` draws that many weights and keeps the first ``n_categories``,
    coupling the draws across category counts so difficulty curves vary only
    through K, not through fresh probability draws.
    """
    m = spec.n_categories if pool_size is None else pool_size
    if m < spec.n_categories:
        raise ValueError("pool_size smaller than the category count")
    weights = np.exp(stable_rng(spec.seed).normal(0.0, spec.lognormal_sd, m))
    prefix = weights[: spec.n_categories]
    return prefix / prefix.sum()


def draw_imbalanced_labels(spec: ImbalanceSpec, pool_size: int | None = None) -> np.ndarray:
    """IID integer labels in [0, n_categories) with lognormal imbalance."""
    p = category_probabilities(spec, pool_size)
    rng = stable_rng(spec.seed, spec.n_categories)
    return rng.choice(spec.n_categories, size=spec.n_samples, p=p)


def baseline_difficulty(labels: Sequence, kind: str, seed: int = 0) -> float:
    """One minus the baseline's macro-F1 on the given labels.

    ``random`` predicts uniformly at random over the observed categories
    (seeded); ``most_frequent`` always predicts the modal category, ties going
    to canonical order.
    """
    labels = np.asarray(labels)
    observed, counts = np.unique(labels, return_counts=True)
    if kind == BASELINE_MOST_FREQUENT:
        pred = np.full(labels.shape[0], observed[int(np.argmax(counts))])
    elif kind == BASELINE_RANDOM:
        rng = stable_rng(seed, "baseline", kind)
        pred = observed[rng.integers(0, len(observed), size=labels.shape[0])]
    else:
        raise ValueError(f"unknown baseline kind {kind!r}")
    return 1.0 - macro_f1(labels.tolist(), pred.tolist(), observed.tolist())


@dataclass(frozen=True)
class CurvePoint:
    n_categories: int
    difficulty_random: float
    difficulty_most_frequent: float

    @property
    def difficulty_aggregate(self) -> float:
        """Difficulty of the task as a whole: one minus the best baseline's F1."""
        return min(self.difficulty_random, self.difficulty_most_frequent)


def difficulty_curve(
    template: ImbalanceSpec,
    k_min: int = 2,
    k_max: int = 12,
) -> list[CurvePoint]:
    """Per-K baseline difficulties; category weights are drawn once and shared."""
    points = []
    for k in range(k_min, k_max + 1):
        spec = ImbalanceSpec(k, template.n_samples, template.lognormal_sd, template.seed)
        labels = draw_imbalanced_labels(spec, pool_size=k_max)
        points.append(
            CurvePoint(
                k,
                baseline_difficulty(labels, BASELINE_RANDOM, seed=template.seed + k),
                baseline_difficulty(labels, BASELINE_MOST_FREQUENT),
            )
        )
    return points


@dataclass(frozen=True)
class CompanySpec:
    name: str
    domain: str
    n_records: int
    label_noise: float = 0.0

    def __post_init__(self):
        if self.domain not in DOMAINS:
            raise ValueError(f"unknown domain {self.domain!r}")
        if not 0.0 <= self.label_noise < 1.0:
            raise ValueError("label_noise must be in [0, 1)")


@dataclass(frozen=True)
class PoolSpec:
    """Multi-company pool driven by a shared pattern -> category rule set.

    The first ``signal_bits`` attributes form a pattern; ``rules[pattern]``
    is the category index every company agrees on (shared regime). With
    ``shared_rules`` off, each company rotates the mapping differently, so
    pooling mixes contradictory rules. Label noise replaces a label with a
    uniformly drawn different category.
    """

    companies: tuple[CompanySpec, ...]
    outcome: Outcome = Outcome.SEVERITY
    categories: tuple[str, ...] = ("minor", "moderate", "serious", "severe")
    n_attributes: int = 10
    signal_bits: int = 2
    signal_density: float = 0.5
    noise_density: float = 0.5
    rules: tuple[int, ...] | None = None
    shared_rules: bool = True
    seed: int = 0


def resolved_rules(spec: PoolSpec) -> tuple[int, ...]:
    """The pattern -> category table, validated to cover every pattern."""
    n_patterns = 2**spec.signal_bits
    rules = spec.rules if spec.rules is not None else tuple(
        p % len(spec.categories) for p in range(n_patterns)
    )
    if len(rules) != n_patterns:
        raise InconsistentRulesError(
            f"rule table covers {len(rules)} patterns, need {n_patterns}"
        )
    if any(not 0 <= r < len(spec.categories) for r in rules):
        raise InconsistentRulesError("rule table points outside the category list")
    return rules


def category_distribution(spec: PoolSpec) -> np.ndarray:
    """Noise-free category probabilities implied by the rules and bit densities."""
    rules = resolved_rules(spec)
    p = spec.signal_density
    dist = np.zeros(len(spec.categories))
    for pattern, category in enumerate(rules):
        bits = [(pattern >> b) & 1 for b in range(spec.signal_bits)]
        prob = np.prod([p if bit else 1.0 - p for bit in bits])
        dist[category] += prob
    return dist


def generate_pool(spec: PoolSpec) -> list[AccidentRecord]:
    """Deterministic record pool; every record carries the spec's outcome."""
    base_rules = resolved_rules(spec)
    n_cats = len(spec.categories)
    records: list[AccidentRecord] = []
    record_id = 0
    for idx, company in enumerate(spec.companies):
        rules = base_rules
        if not spec.shared_rules and idx > 0:
            rules = tuple((r + idx) % n_cats for r in base_rules)
        rng = stable_rng(spec.seed, company.name)
        n = company.n_records
        signal = rng.random((n, spec.signal_bits)) < spec.signal_density
        noise = rng.random((n, spec.n_attributes - spec.signal_bits)) < spec.noise_density
        bits = np.hstack([signal, noise]).astype(np.int64)
        patterns = signal @ (1 << np.arange(spec.signal_bits))
        labels = np.array([rules[p] for p in patterns], dtype=np.int64)
        if company.label_noise > 0.0:
            flip = rng.random(n) < company.label_noise
            shift = rng.integers(1, n_cats, size=n)
            labels = np.where(flip, (labels + shift) % n_cats, labels)
        for row, label in zip(bits, labels):
            records.append(
                AccidentRecord(
                    record_id,
                    company.name,
                    company.domain,
                    tuple(int(b) for b in row),
                    {spec.outcome: spec.categories[label]},
                )
            )
            record_id += 1
    return records


def pool_lexicon(spec: PoolSpec) -> tuple[str, ...]:
    width = max(2, len(str(spec.n_attributes - 1)))
    return tuple(f"attr_{i:0{width}d}" for i in range(spec.n_attributes))


def pool_taxonomy(spec: PoolSpec) -> dict[Outcome, tuple[str, ...]]:
    return {spec.outcome: tuple(spec.categories)}
