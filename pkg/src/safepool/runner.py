"""Experiment orchestration: task enumeration and the staged pipeline.

A run walks: ingest -> split -> tune -> train -> ensemble -> evaluate ->
report. Each stage persists its outputs under the experiment directory
(split manifests, tuning traces, model artifacts, score tables), so the CLI
can execute stages separately and re-runs with the same config and seed are
bit-for-bit reproducible.

Model selection never touches test data: the best spec per family comes from
the validation grid search, the best family per task from the same validation
scores, and every reported test score comes from a model whose training and
validation records are disjoint from that test set by record id.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

from . import learners
from .errors import ConfigError, SafepoolError
from .learners import (
    FAMILIES,
    FAMILY_SVM,
    KIND_LABEL_ONLY,
    TrainedModel,
    design_matrix,
)
from .metrics import ScoreTable, confusion, precision_recall_f1
from .records import (
    SCOPE_FULL,
    SCOPE_PER_DOMAIN,
    TASK_DOMAINS,
    AccidentRecord,
    CombinationKey,
    Outcome,
    default_lexicon,
    default_taxonomy,
    eligible_combinations,
    load_lexicon,
    load_pool_csv,
    load_taxonomy,
    records_for_key,
)
from .seeding import derived_seed
from .splitting import DEFAULT_RATIOS, SplitSet, pool_splits, split_combination, write_manifest
from .stacking import StackedModel, fit_stacker, save_stacker, stacked_predict_labels
from .synth import CompanySpec, PoolSpec, generate_pool
from .tuning import GridSearchResult, grid_search, refit_final, write_trace_csv
from .weighting import compute_class_weights
from .records import category_counts

MODEL_KIND_SPECIFIC = "spec"
MODEL_KIND_GEN_FULL = "gen_full"
MODEL_KIND_GEN_DOMAIN = "gen_domain"
MODEL_KIND_ENS_FULL = "ens_full"
MODEL_KIND_ENS_DOMAIN = "ens_domain"

STATUS_OK = "ok"
STATUS_NOT_STACKABLE = "not_stackable"
STATUS_FAILED = "failed"


@dataclass(frozen=True)
class FailedFit:
    """Failure marker persisted in place of a tuning/model result."""

    reason: str


@dataclass(frozen=True)
class ExperimentConfig:
    out_dir: str
    pool_csv: str | None = None
    pool_spec: PoolSpec | None = None
    lexicon_path: str | None = None
    taxonomy_path: str | None = None
    seed: int = 0
    grid_stride: int = 1
    families: tuple[str, ...] = FAMILIES
    outcomes: tuple[Outcome, ...] | None = None
    min_count: int = 100
    min_categories: int = 2
    ratios: tuple[float, float, float] = DEFAULT_RATIOS
    zero_division: float = 0.0
    include_zero_support: bool = False

    def __post_init__(self):
        if (self.pool_csv is None) == (self.pool_spec is None):
            raise ConfigError("config needs exactly one pool source (csv or synth)")
        if self.grid_stride < 1:
            raise ConfigError("grid stride must be >= 1")
        unknown = [f for f in self.families if f not in FAMILIES]
        if unknown:
            raise ConfigError(f"unknown learner families: {unknown}")
        if not self.families:
            raise ConfigError("at least one learner family is required")


_CONFIG_KEYS = {"pool", "lexicon", "taxonomy", "seed", "grid", "families", "outcomes", "out", "metrics"}
_POOLSPEC_KEYS = {
    "companies", "outcome", "categories", "n_attributes", "signal_bits",
    "signal_density", "noise_density", "rules", "shared_rules", "seed",
}


def parse_grid_mode(text: str) -> int:
    """'full' -> stride 1; 'strided:<k>' -> stride k."""
    if text == "full":
        return 1
    if text.startswith("strided:"):
        try:
            stride = int(text.split(":", 1)[1])
        except ValueError:
            raise ConfigError(f"bad grid mode {text!r}") from None
        if stride < 1:
            raise ConfigError("grid stride must be >= 1")
        return stride
    raise ConfigError(f"bad grid mode {text!r}; expected 'full' or 'strided:<k>'")


def pool_spec_from_dict(raw: Mapping) -> PoolSpec:
    unknown = set(raw) - _POOLSPEC_KEYS
    if unknown:
        raise ConfigError(f"unknown pool spec keys: {sorted(unknown)}")
    if "companies" not in raw or not raw["companies"]:
        raise ConfigError("synth pool spec needs a nonempty company list")
    try:
        companies = tuple(
            CompanySpec(
                c["name"],
                c["domain"],
                int(c["n_records"]),
                float(c.get("label_noise", 0.0)),
            )
            for c in raw["companies"]
        )
        kwargs = {}
        if "outcome" in raw:
            kwargs["outcome"] = Outcome(raw["outcome"])
        if "categories" in raw:
            kwargs["categories"] = tuple(raw["categories"])
        for key in ("n_attributes", "signal_bits", "seed"):
            if key in raw:
                kwargs[key] = int(raw[key])
        for key in ("signal_density", "noise_density"):
            if key in raw:
                kwargs[key] = float(raw[key])
        if raw.get("rules") is not None:
            kwargs["rules"] = tuple(int(r) for r in raw["rules"])
        if "shared_rules" in raw:
            kwargs["shared_rules"] = bool(raw["shared_rules"])
        return PoolSpec(companies=companies, **kwargs)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad synth pool spec: {exc}") from None


def config_from_dict(raw: Mapping, out_dir: str | None = None) -> ExperimentConfig:
    """Validate a parsed config mapping; raises ConfigError on any problem."""
    unknown = set(raw) - _CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    pool = raw.get("pool")
    if not isinstance(pool, Mapping) or len(pool) != 1:
        raise ConfigError("config 'pool' must be {'csv': path} or {'synth': spec}")
    pool_csv = pool_spec = None
    if "csv" in pool:
        pool_csv = str(pool["csv"])
    elif "synth" in pool:
        pool_spec = pool_spec_from_dict(pool["synth"])
    else:
        raise ConfigError("config 'pool' must be {'csv': path} or {'synth': spec}")

    try:
        outcomes = (
            tuple(Outcome(o) for o in raw["outcomes"]) if raw.get("outcomes") else None
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    metrics_cfg = raw.get("metrics", {})
    if not isinstance(metrics_cfg, Mapping):
        raise ConfigError("config 'metrics' must be a mapping")
    out = out_dir or raw.get("out")
    if not out:
        raise ConfigError("config needs an output directory ('out')")
    seed = raw.get("seed", 0)
    if not isinstance(seed, int):
        raise ConfigError("config 'seed' must be an integer")
    return ExperimentConfig(
        out_dir=str(out),
        pool_csv=pool_csv,
        pool_spec=pool_spec,
        lexicon_path=raw.get("lexicon"),
        taxonomy_path=raw.get("taxonomy"),
        seed=seed,
        grid_stride=parse_grid_mode(raw.get("grid", "full")),
        families=tuple(raw.get("families", FAMILIES)),
        outcomes=outcomes,
        zero_division=float(metrics_cfg.get("zero_division", 0.0)),
        include_zero_support=bool(metrics_cfg.get("include_zero_support", False)),
    )


def load_config(path: str | Path, out_dir: str | None = None) -> ExperimentConfig:
    try:
        raw = json.loads(Path(path).read_text("utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    return config_from_dict(raw, out_dir)


def load_pool(cfg: ExperimentConfig) -> list[AccidentRecord]:
    if cfg.pool_spec is not None:
        return generate_pool(cfg.pool_spec)
    lexicon = load_lexicon(cfg.lexicon_path) if cfg.lexicon_path else default_lexicon()
    taxonomy = load_taxonomy(cfg.taxonomy_path) if cfg.taxonomy_path else default_taxonomy()
    return load_pool_csv(cfg.pool_csv, lexicon, taxonomy)


@dataclass(frozen=True)
class TaskSet:
    """Modeling tasks derived from one pool."""

    eligible: tuple[CombinationKey, ...]  # every eligible key, corporate included
    specific: tuple[CombinationKey, ...]  # corporate excluded
    per_domain: tuple[CombinationKey, ...]
    full: tuple[CombinationKey, ...]

    def model_keys(self) -> tuple[CombinationKey, ...]:
        return self.specific + self.per_domain + self.full


def enumerate_tasks(
    records: Sequence[AccidentRecord],
    min_count: int = 100,
    min_categories: int = 2,
    outcomes: Sequence[Outcome] | None = None,
) -> TaskSet:
    eligible = eligible_combinations(records, min_count, min_categories)
    if outcomes is not None:
        wanted = set(outcomes)
        eligible = [k for k in eligible if k.outcome in wanted]
    specific = tuple(k for k in eligible if k.domain in TASK_DOMAINS)
    domain_pairs = sorted({(k.domain, k.outcome) for k in specific}, key=lambda p: (p[0], p[1].value))
    per_domain = tuple(CombinationKey.per_domain(d, o) for d, o in domain_pairs)
    outcomes_seen = sorted({k.outcome for k in specific}, key=lambda o: o.value)
    full = tuple(CombinationKey.full(o) for o in outcomes_seen)
    return TaskSet(tuple(eligible), specific, per_domain, full)


def build_splits(
    records: Sequence[AccidentRecord],
    tasks: TaskSet,
    seed: int,
    ratios: Sequence[float] = DEFAULT_RATIOS,
) -> dict[CombinationKey, SplitSet]:
    """Split every eligible combination, then pool into per-domain and full splits."""
    splits: dict[CombinationKey, SplitSet] = {}
    for key in tasks.eligible:
        combo_records = records_for_key(records, key)
        splits[key] = split_combination(
            combo_records, key, ratios, derived_seed(seed, "split", key.label())
        )
    for key in tasks.per_domain:
        parts = [
            splits[k]
            for k in tasks.eligible
            if k.domain == key.domain and k.outcome == key.outcome
        ]
        splits[key] = pool_splits(parts, SCOPE_PER_DOMAIN, domain=key.domain)
    for key in tasks.full:
        parts = [splits[k] for k in tasks.eligible if k.outcome == key.outcome]
        splits[key] = pool_splits(parts, SCOPE_FULL)
    return splits


@dataclass(frozen=True)
class ScoreRow:
    company: str
    domain: str
    outcome: str
    model_kind: str
    family: str
    status: str
    macro_f1: float | None = None
    weighted_f1: float | None = None
    n_categories: int | None = None
    generic_coef: float | None = None
    specific_coef: float | None = None
    validation_score: float | None = None
    is_best_specific: bool = False
    artifact: str = ""
    manifest: str = ""
    table: ScoreTable | None = None

    @property
    def key_id(self) -> tuple[str, str, str]:
        return (self.company, self.domain, self.outcome)


@dataclass
class EvaluationReport:
    rows: list[ScoreRow] = field(default_factory=list)

    def baseline(self, key_id: tuple[str, str, str]) -> ScoreRow | None:
        for row in self.rows:
            if row.key_id == key_id and row.is_best_specific:
                return row
        return None

    def candidate_rows(self, key_id: tuple[str, str, str]) -> list[ScoreRow]:
        return [
            r
            for r in self.rows
            if r.key_id == key_id
            and r.model_kind != MODEL_KIND_SPECIFIC
            and r.status == STATUS_OK
            and r.macro_f1 is not None
        ]

    def gain_of(self, row: ScoreRow) -> float | None:
        base = self.baseline(row.key_id)
        if base is None or base.macro_f1 is None or row.macro_f1 is None:
            return None
        return 100.0 * (row.macro_f1 - base.macro_f1)

    def key_ids(self) -> list[tuple[str, str, str]]:
        seen: list[tuple[str, str, str]] = []
        for row in self.rows:
            if row.key_id not in seen:
                seen.append(row.key_id)
        return seen

    def summary(self) -> dict[str, float | int]:
        """Per-key max gains versus the best specific model, plus win-rate stats."""
        max_gains: list[float] = []
        extra_categories: list[float] = []
        for key_id in self.key_ids():
            base = self.baseline(key_id)
            candidates = self.candidate_rows(key_id)
            if base is None or base.macro_f1 is None or not candidates:
                continue
            gains = [100.0 * (r.macro_f1 - base.macro_f1) for r in candidates]
            max_gains.append(max(gains))
            generic_counts = [
                r.n_categories
                for r in candidates
                if r.model_kind in (MODEL_KIND_GEN_FULL, MODEL_KIND_GEN_DOMAIN)
                and r.n_categories is not None
            ]
            if generic_counts and base.n_categories:
                extra_categories.append(max(generic_counts) - base.n_categories)
        wins = [g for g in max_gains if g > 0]
        out: dict[str, float | int] = {
            "n_keys": len(max_gains),
            "n_wins": len(wins),
            "win_rate": len(wins) / len(max_gains) if max_gains else 0.0,
            "mean_extra_categories": (
                sum(extra_categories) / len(extra_categories) if extra_categories else 0.0
            ),
        }
        if wins:
            out["min_gain"] = min(wins)
            out["max_gain"] = max(wins)
            out["mean_gain"] = sum(wins) / len(wins)
        return out


def _score_model_labels(
    truth: list[str],
    pred: list[str],
    categories: list[str],
    cfg: ExperimentConfig,
) -> ScoreTable:
    cm = confusion(truth, pred, categories)
    return precision_recall_f1(cm, cfg.zero_division, cfg.include_zero_support)


def _generic_key(kind: str, specific_key: CombinationKey) -> CombinationKey:
    if kind == MODEL_KIND_GEN_FULL:
        return CombinationKey.full(specific_key.outcome)
    return CombinationKey.per_domain(specific_key.domain, specific_key.outcome)


def run_experiment(cfg: ExperimentConfig) -> EvaluationReport:
    """Run the whole pipeline under cfg.out_dir and return the report."""
    from . import report as report_mod

    out = Path(cfg.out_dir)
    for sub in ("splits", "tuning", "models", "ensembles", "evaluation", "report"):
        (out / sub).mkdir(parents=True, exist_ok=True)

    records = load_pool(cfg)
    tasks = enumerate_tasks(records, cfg.min_count, cfg.min_categories, cfg.outcomes)
    if not tasks.specific:
        raise ConfigError("pool has no eligible company-domain-outcome combination")

    splits = build_splits(records, tasks, cfg.seed, cfg.ratios)
    for key, split in splits.items():
        write_manifest(split, out / "splits" / f"{key.label()}.csv")

    tune_results = tune_all(splits, tasks, cfg, out)
    models = train_all(splits, tasks, tune_results, cfg, out)
    stackers = ensemble_all(splits, tasks, tune_results, cfg, out)
    report = evaluate_all(splits, tasks, tune_results, models, stackers, cfg, out)
    report_mod.write_scores_csv(report, out / "evaluation")
    report_mod.emit_report(report, out / "report")
    return report


def tune_all(
    splits: Mapping[CombinationKey, SplitSet],
    tasks: TaskSet,
    cfg: ExperimentConfig,
    out: Path | None = None,
) -> dict[tuple[CombinationKey, str], GridSearchResult]:
    results: dict[tuple[CombinationKey, str], GridSearchResult | FailedFit] = {}
    for key in tasks.model_keys():
        split = splits[key]
        weights = compute_class_weights(category_counts(split.train, key.outcome))
        for family in cfg.families:
            try:
                result = grid_search(
                    family,
                    split,
                    key.outcome,
                    weights,
                    derived_seed(cfg.seed, "tune", key.label(), family),
                    stride=cfg.grid_stride,
                )
            except SafepoolError as exc:
                result = FailedFit(str(exc))
            results[(key, family)] = result
            if out is not None and isinstance(result, GridSearchResult):
                write_trace_csv(result, out / "tuning" / f"{key.label()}__{family}__trace.csv")
        if out is not None:
            best_payload = {}
            for family in cfg.families:
                result = results[(key, family)]
                if isinstance(result, FailedFit):
                    best_payload[family] = {"failed": result.reason}
                else:
                    best_payload[family] = {
                        "spec": asdict(result.best_spec),
                        "score": result.best_score,
                        "index": result.best_index,
                    }
            (out / "tuning" / f"{key.label()}__best.json").write_text(
                json.dumps(best_payload, indent=2), "utf-8"
            )
    return results


def best_family(
    key: CombinationKey,
    tune_results: Mapping[tuple[CombinationKey, str], "GridSearchResult | FailedFit"],
    families: Sequence[str],
) -> str:
    """Highest validation score wins; ties go to canonical family order."""
    usable = [f for f in families if not isinstance(tune_results[(key, f)], FailedFit)]
    if not usable:
        raise SafepoolError(f"every learner family failed for {key.label()}")
    return max(usable, key=lambda f: (tune_results[(key, f)].best_score, -usable.index(f)))


def train_all(
    splits: Mapping[CombinationKey, SplitSet],
    tasks: TaskSet,
    tune_results: Mapping[tuple[CombinationKey, str], GridSearchResult],
    cfg: ExperimentConfig,
    out: Path | None = None,
) -> dict[tuple[CombinationKey, str], TrainedModel]:
    models: dict[tuple[CombinationKey, str], TrainedModel] = {}
    for key in tasks.model_keys():
        for family in cfg.families:
            result = tune_results[(key, family)]
            if isinstance(result, FailedFit):
                continue
            model = refit_final(
                result.best_spec,
                splits[key],
                key.outcome,
                derived_seed(cfg.seed, "refit", key.label(), family),
            )
            models[(key, family)] = model
            if out is not None:
                learners.save_model(model, out / "models" / f"{key.label()}__{family}.json")
    return models


def _train_only_fit(
    key: CombinationKey,
    family: str,
    splits: Mapping[CombinationKey, SplitSet],
    tune_results: Mapping[tuple[CombinationKey, str], GridSearchResult],
    cfg: ExperimentConfig,
) -> TrainedModel:
    """Recreate the grid-search winner exactly (fit on train only)."""
    split = splits[key]
    result = tune_results[(key, family)]
    weights = compute_class_weights(category_counts(split.train, key.outcome))
    seed = derived_seed(
        derived_seed(cfg.seed, "tune", key.label(), family), result.best_index
    )
    return learners.fit(result.best_spec, split.train, key.outcome, weights, seed)


def ensemble_all(
    splits: Mapping[CombinationKey, SplitSet],
    tasks: TaskSet,
    tune_results: Mapping[tuple[CombinationKey, str], GridSearchResult],
    cfg: ExperimentConfig,
    out: Path | None = None,
) -> dict[tuple[CombinationKey, str, str], StackedModel | None]:
    """Per specific key and generic scope/family, the fitted stacker.

    The bases are the grid-search winners fit on train only, so the meta-model
    really is trained on forecasts of unseen records. None marks a pairing
    that cannot stack (either base label-only).
    """
    stackers: dict[tuple[CombinationKey, str, str], StackedModel | FailedFit | None] = {}
    for key in tasks.specific:
        spec_family = best_family(key, tune_results, cfg.families)
        specific_base = _train_only_fit(key, spec_family, splits, tune_results, cfg)
        for kind in (MODEL_KIND_ENS_FULL, MODEL_KIND_ENS_DOMAIN):
            gen_key = _generic_key(
                MODEL_KIND_GEN_FULL if kind == MODEL_KIND_ENS_FULL else MODEL_KIND_GEN_DOMAIN, key
            )
            for family in cfg.families:
                slot = (key, kind, family)
                if family == FAMILY_SVM or specific_base.kind == KIND_LABEL_ONLY:
                    stackers[slot] = None
                    continue
                gen_result = tune_results[(gen_key, family)]
                if isinstance(gen_result, FailedFit):
                    stackers[slot] = gen_result
                    continue
                generic_base = _train_only_fit(gen_key, family, splits, tune_results, cfg)
                stacker = fit_stacker(
                    generic_base,
                    specific_base,
                    splits[key],
                    key.outcome,
                    derived_seed(cfg.seed, "stack", key.label(), kind, family),
                )
                stackers[slot] = stacker
                if out is not None:
                    save_stacker(
                        stacker, out / "ensembles" / f"{key.label()}__{kind}__{family}.json"
                    )
    return stackers


def evaluate_all(
    splits: Mapping[CombinationKey, SplitSet],
    tasks: TaskSet,
    tune_results: Mapping[tuple[CombinationKey, str], GridSearchResult],
    models: Mapping[tuple[CombinationKey, str], TrainedModel],
    stackers: Mapping[tuple[CombinationKey, str, str], StackedModel | None],
    cfg: ExperimentConfig,
    out: Path | None = None,
) -> EvaluationReport:
    report = EvaluationReport()
    for key in tasks.specific:
        split = splits[key]
        test = list(split.test)
        truth = [r.outcomes[key.outcome] for r in test]
        manifest = f"splits/{key.label()}.csv"
        spec_family = best_family(key, tune_results, cfg.families)

        # one shared category list per test set, so every model is scored on
        # an identical confusion matrix
        categories = set(truth)
        involved: list[tuple[str, str, TrainedModel | StackedModel | FailedFit | None]] = []
        for family in cfg.families:
            involved.append(
                (MODEL_KIND_SPECIFIC, family,
                 models.get((key, family), tune_results[(key, family)]))
            )
        for kind in (MODEL_KIND_GEN_FULL, MODEL_KIND_GEN_DOMAIN):
            for family in cfg.families:
                gen_key = _generic_key(kind, key)
                involved.append(
                    (kind, family,
                     models.get((gen_key, family), tune_results[(gen_key, family)]))
                )
        for kind in (MODEL_KIND_ENS_FULL, MODEL_KIND_ENS_DOMAIN):
            for family in cfg.families:
                involved.append((kind, family, stackers[(key, kind, family)]))
        for _, _, model in involved:
            if model is not None and not isinstance(model, FailedFit):
                categories.update(model.categories)
        category_list = sorted(categories)

        X_test = design_matrix(test)
        for kind, family, model in involved:
            if model is None or isinstance(model, FailedFit):
                status = STATUS_NOT_STACKABLE if model is None else STATUS_FAILED
                report.rows.append(
                    ScoreRow(
                        key.company,
                        key.domain,
                        key.outcome.value,
                        kind,
                        family,
                        status,
                        manifest=manifest,
                    )
                )
                continue
            if isinstance(model, StackedModel):
                pred = stacked_predict_labels(model, test)
                coef = model.coefficients
                artifact = f"ensembles/{key.label()}__{kind}__{family}.json"
                validation_score = model.validation_score
            else:
                pred = model.predict_labels(X_test)
                coef = None
                model_key = key if kind == MODEL_KIND_SPECIFIC else _generic_key(kind, key)
                artifact = f"models/{model_key.label()}__{family}.json"
                validation_score = tune_results[(model_key, family)].best_score
            table = _score_model_labels(truth, pred, category_list, cfg)
            report.rows.append(
                ScoreRow(
                    key.company,
                    key.domain,
                    key.outcome.value,
                    kind,
                    family,
                    STATUS_OK,
                    macro_f1=table.macro_f1,
                    weighted_f1=table.weighted_f1,
                    n_categories=len(model.categories),
                    generic_coef=coef.generic_weight if coef else None,
                    specific_coef=coef.specific_weight if coef else None,
                    validation_score=validation_score,
                    is_best_specific=(kind == MODEL_KIND_SPECIFIC and family == spec_family),
                    artifact=artifact,
                    manifest=manifest,
                    table=table,
                )
            )
    return report
