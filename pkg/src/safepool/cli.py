"""Command-line front end.

Subcommands map to pipeline stages (ingest, split, tune, train, ensemble,
evaluate, report) plus the synthetic generators (synth, difficulty). Stages
read the artifacts earlier stages wrote under --out, so a full run is:

    safepool synth --spec pool_spec.json --out work/pool.csv
    safepool split --pool work/pool.csv ... --out work
    safepool tune ... && safepool train ... && safepool ensemble ...
    safepool evaluate ... && safepool report --out work

Exit codes: 0 success, 2 configuration/usage error, 1 runtime failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path

from . import learners, report as report_mod, runner
from .errors import ConfigError, SafepoolError
from .learners import LearnerSpec
from .records import (
    Outcome,
    default_lexicon,
    default_taxonomy,
    load_lexicon,
    load_pool_csv,
    load_taxonomy,
    write_lexicon,
    write_pool_csv,
    write_taxonomy,
)
from .runner import (
    EvaluationReport,
    ExperimentConfig,
    ScoreRow,
    TaskSet,
    build_splits,
    config_from_dict,
    enumerate_tasks,
    load_pool,
    pool_spec_from_dict,
)
from .splitting import write_manifest
from .stacking import load_stacker
from .synth import ImbalanceSpec, difficulty_curve, generate_pool, pool_lexicon, pool_taxonomy
from .tuning import (
    BoostingSpec,
    LinearSvmSpec,
    LogisticSpec,
    RandomForestSpec,
)

_SPEC_TYPES = {
    "boosting": BoostingSpec,
    "forest": RandomForestSpec,
    "logistic": LogisticSpec,
    "svm": LinearSvmSpec,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="safepool", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, pool=True):
        if pool:
            p.add_argument("--pool", help="pool CSV path (overrides --config)")
        p.add_argument("--config", help="experiment config JSON")
        p.add_argument("--out", help="experiment directory")
        p.add_argument("--seed", type=int, help="master seed")
        p.add_argument("--grid", help="grid mode: full or strided:<k>")
        p.add_argument("--families", help="comma-separated learner families")
        p.add_argument("--outcomes", help="comma-separated outcomes to model")
        p.add_argument("--lexicon", help="attribute lexicon file")
        p.add_argument("--taxonomy", help="outcome taxonomy JSON")

    p = sub.add_parser("synth", help="generate a synthetic pool CSV from a pool spec")
    p.add_argument("--spec", required=True, help="pool spec JSON")
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--seed", type=int, help="override the spec seed")

    p = sub.add_parser("ingest", help="validate a pool CSV")
    p.add_argument("pool", help="pool CSV path")
    p.add_argument("--lexicon")
    p.add_argument("--taxonomy")

    for name, help_text in (
        ("split", "build and persist split manifests"),
        ("tune", "grid-search every task and family"),
        ("train", "refit grid winners on train+validation"),
        ("ensemble", "fit generic+specific stackers"),
        ("evaluate", "score every model on the specific test sets"),
    ):
        add_common(sub.add_parser(name, help=help_text))

    p = sub.add_parser("report", help="emit report tables and figures from scores")
    p.add_argument("--out", required=True, help="experiment directory")

    p = sub.add_parser("difficulty", help="synthetic imbalance difficulty curve")
    p.add_argument("--k", default="2..12", help="category range, e.g. 2..12")
    p.add_argument("--n", type=int, default=100_000, help="samples per curve point")
    p.add_argument("--sd", type=float, default=2.0, help="lognormal sd")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    return parser


def _config_from_args(args) -> ExperimentConfig:
    if args.config:
        try:
            raw = json.loads(Path(args.config).read_text("utf-8"))
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {args.config}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
    else:
        raw = {}
    if getattr(args, "pool", None):
        raw["pool"] = {"csv": args.pool}
    if args.out:
        raw["out"] = args.out
    if args.seed is not None:
        raw["seed"] = args.seed
    if args.grid:
        raw["grid"] = args.grid
    if args.families:
        raw["families"] = [f.strip() for f in args.families.split(",") if f.strip()]
    if args.outcomes:
        raw["outcomes"] = [o.strip() for o in args.outcomes.split(",") if o.strip()]
    if args.lexicon:
        raw["lexicon"] = args.lexicon
    if args.taxonomy:
        raw["taxonomy"] = args.taxonomy
    return config_from_dict(raw)


@dataclass(frozen=True)
class _BestEntry:
    best_spec: LearnerSpec
    best_score: float
    best_index: int


def _load_best(out: Path, tasks: TaskSet, families) -> dict:
    entries = {}
    for key in tasks.model_keys():
        path = out / "tuning" / f"{key.label()}__best.json"
        if not path.exists():
            raise SafepoolError(f"missing tuning output {path}; run 'safepool tune' first")
        payload = json.loads(path.read_text("utf-8"))
        for family in families:
            if family not in payload:
                raise SafepoolError(f"{path} lacks family {family!r}; re-run tune")
            item = payload[family]
            if "failed" in item:
                entries[(key, family)] = runner.FailedFit(item["failed"])
            else:
                entries[(key, family)] = _BestEntry(
                    _SPEC_TYPES[family](**item["spec"]), item["score"], item["index"]
                )
    return entries


def _prepared(cfg: ExperimentConfig):
    records = load_pool(cfg)
    tasks = enumerate_tasks(records, cfg.min_count, cfg.min_categories, cfg.outcomes)
    if not tasks.specific:
        raise ConfigError("pool has no eligible company-domain-outcome combination")
    splits = build_splits(records, tasks, cfg.seed, cfg.ratios)
    return records, tasks, splits


def _cmd_synth(args) -> int:
    raw = json.loads(Path(args.spec).read_text("utf-8"))
    if not isinstance(raw, dict):
        raise ConfigError("pool spec must be a JSON object")
    if args.seed is not None:
        raw["seed"] = args.seed
    spec = pool_spec_from_dict(raw)
    records = generate_pool(spec)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    lexicon = pool_lexicon(spec)
    write_pool_csv(out, records, lexicon)
    write_lexicon(out.with_suffix(".attributes.txt"), lexicon)
    write_taxonomy(out.with_suffix(".taxonomy.json"), pool_taxonomy(spec))
    print(f"wrote {len(records)} records to {out}")
    return 0


def _cmd_ingest(args) -> int:
    lexicon = load_lexicon(args.lexicon) if args.lexicon else default_lexicon()
    taxonomy = load_taxonomy(args.taxonomy) if args.taxonomy else default_taxonomy()
    records = load_pool_csv(args.pool, lexicon, taxonomy)
    companies = sorted({r.company for r in records})
    outcomes = {o.value: sum(1 for r in records if o in r.outcomes) for o in Outcome}
    present = {k: v for k, v in outcomes.items() if v}
    print(f"{len(records)} records, {len(companies)} companies, outcomes: {present}")
    return 0


def _cmd_split(args) -> int:
    cfg = _config_from_args(args)
    _, tasks, splits = _prepared(cfg)
    out = Path(cfg.out_dir)
    (out / "splits").mkdir(parents=True, exist_ok=True)
    for key, split in splits.items():
        write_manifest(split, out / "splits" / f"{key.label()}.csv")
    print(f"{len(tasks.specific)} specific, {len(tasks.per_domain)} per-domain, "
          f"{len(tasks.full)} full tasks; manifests in {out / 'splits'}")
    return 0


def _cmd_tune(args) -> int:
    cfg = _config_from_args(args)
    _, tasks, splits = _prepared(cfg)
    out = Path(cfg.out_dir)
    (out / "tuning").mkdir(parents=True, exist_ok=True)
    runner.tune_all(splits, tasks, cfg, out)
    print(f"tuned {len(tasks.model_keys())} tasks x {len(cfg.families)} families")
    return 0


def _cmd_train(args) -> int:
    cfg = _config_from_args(args)
    _, tasks, splits = _prepared(cfg)
    out = Path(cfg.out_dir)
    (out / "models").mkdir(parents=True, exist_ok=True)
    best = _load_best(out, tasks, cfg.families)
    runner.train_all(splits, tasks, best, cfg, out)
    print(f"trained {len(tasks.model_keys()) * len(cfg.families)} final models")
    return 0


def _cmd_ensemble(args) -> int:
    cfg = _config_from_args(args)
    _, tasks, splits = _prepared(cfg)
    out = Path(cfg.out_dir)
    (out / "ensembles").mkdir(parents=True, exist_ok=True)
    best = _load_best(out, tasks, cfg.families)
    stackers = runner.ensemble_all(splits, tasks, best, cfg, out)
    fitted = sum(1 for s in stackers.values() if s is not None)
    print(f"fitted {fitted} stackers ({len(stackers) - fitted} not stackable)")
    return 0


def _cmd_evaluate(args) -> int:
    cfg = _config_from_args(args)
    _, tasks, splits = _prepared(cfg)
    out = Path(cfg.out_dir)
    best = _load_best(out, tasks, cfg.families)

    models: dict = {}
    for key in tasks.model_keys():
        for family in cfg.families:
            if isinstance(best[(key, family)], runner.FailedFit):
                continue
            path = out / "models" / f"{key.label()}__{family}.json"
            if not path.exists():
                raise SafepoolError(f"missing model artifact {path}; run 'safepool train' first")
            models[(key, family)] = learners.load_model(path)

    stackers: dict = {}
    for key in tasks.specific:
        spec_family = runner.best_family(key, best, cfg.families)
        for kind in (runner.MODEL_KIND_ENS_FULL, runner.MODEL_KIND_ENS_DOMAIN):
            for family in cfg.families:
                slot = (key, kind, family)
                if family == "svm" or spec_family == "svm":
                    stackers[slot] = None
                    continue
                gen_key = runner._generic_key(
                    runner.MODEL_KIND_GEN_FULL
                    if kind == runner.MODEL_KIND_ENS_FULL
                    else runner.MODEL_KIND_GEN_DOMAIN,
                    key,
                )
                if isinstance(best[(gen_key, family)], runner.FailedFit):
                    stackers[slot] = best[(gen_key, family)]
                    continue
                path = out / "ensembles" / f"{key.label()}__{kind}__{family}.json"
                if not path.exists():
                    raise SafepoolError(f"missing stacker {path}; run 'safepool ensemble' first")
                stackers[slot] = load_stacker(path)

    report = runner.evaluate_all(splits, tasks, best, models, stackers, cfg, out)
    path = report_mod.write_scores_csv(report, out / "evaluation")
    print(f"wrote {path} ({len(report.rows)} rows)")
    return 0


def _read_scores_csv(path: Path) -> EvaluationReport:
    import csv as _csv

    report = EvaluationReport()
    with open(path, newline="") as fh:
        for row in _csv.DictReader(fh):
            report.rows.append(
                ScoreRow(
                    company=row["company"],
                    domain=row["domain"],
                    outcome=row["outcome"],
                    model_kind=row["model_kind"],
                    family=row["family"],
                    status=row["status"],
                    macro_f1=float(row["macro_f1"]) if row["macro_f1"] else None,
                    weighted_f1=float(row["weighted_f1"]) if row["weighted_f1"] else None,
                    n_categories=int(row["n_categories"]) if row["n_categories"] else None,
                    generic_coef=float(row["generic_coef"]) if row["generic_coef"] else None,
                    specific_coef=float(row["specific_coef"]) if row["specific_coef"] else None,
                    validation_score=(
                        float(row["validation_score"]) if row["validation_score"] else None
                    ),
                    is_best_specific=row["is_best_specific"] == "1",
                    artifact=row["artifact"],
                    manifest=row["manifest"],
                )
            )
    return report


def _cmd_report(args) -> int:
    out = Path(args.out)
    scores = out / "evaluation" / "scores.csv"
    if not scores.exists():
        raise SafepoolError(f"missing {scores}; run 'safepool evaluate' first")
    report = _read_scores_csv(scores)
    written = report_mod.emit_report(report, out / "report")
    print(f"wrote {len(written)} report files under {out / 'report'}")
    return 0


def _cmd_difficulty(args) -> int:
    try:
        k_min, k_max = (int(v) for v in args.k.split("..", 1))
    except ValueError:
        raise ConfigError(f"bad --k range {args.k!r}; expected like 2..12") from None
    if not 2 <= k_min <= k_max:
        raise ConfigError("--k range must satisfy 2 <= min <= max")
    template = ImbalanceSpec(k_min, args.n, args.sd, args.seed)
    points = difficulty_curve(template, k_min, k_max)
    written = report_mod.write_difficulty_outputs(points, args.out)
    print(f"wrote {written[0]} ({len(points)} rows) and {written[1]}")
    return 0


_COMMANDS = {
    "synth": _cmd_synth,
    "ingest": _cmd_ingest,
    "split": _cmd_split,
    "tune": _cmd_tune,
    "train": _cmd_train,
    "ensemble": _cmd_ensemble,
    "evaluate": _cmd_evaluate,
    "report": _cmd_report,
    "difficulty": _cmd_difficulty,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (SafepoolError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
