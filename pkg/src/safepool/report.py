"""Report emission: delimited score tables, markdown mirrors, and figures.

Scores in the shaped tables are on the 0-100 scale rounded to two decimals;
full-precision values live in evaluation/scores.csv. CSV and markdown carry
identical content. Figures (gain distribution, blend coefficients) render to
PNG next to the tables.
"""
from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .errors import ReportIoError
from .runner import (
    MODEL_KIND_ENS_DOMAIN,
    MODEL_KIND_ENS_FULL,
    MODEL_KIND_GEN_DOMAIN,
    MODEL_KIND_GEN_FULL,
    MODEL_KIND_SPECIFIC,
    STATUS_OK,
    EvaluationReport,
    ScoreRow,
)
from .synth import CurvePoint

SCORE_COLUMNS = [
    "company",
    "domain",
    "outcome",
    "model_kind",
    "family",
    "status",
    "macro_f1",
    "weighted_f1",
    "n_categories",
    "generic_coef",
    "specific_coef",
    "validation_score",
    "is_best_specific",
    "artifact",
    "manifest",
]


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_scores_csv(report: EvaluationReport, out_dir: str | Path) -> Path:
    """Full-precision per-row scores plus a per-category detail file."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "scores.csv"
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(SCORE_COLUMNS)
            for row in report.rows:
                writer.writerow([_cell(getattr(row, c)) for c in SCORE_COLUMNS])
        with open(out_dir / "per_category.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["company", "domain", "outcome", "model_kind", "family", "category",
                 "precision", "recall", "f1", "support"]
            )
            for row in report.rows:
                if row.table is None:
                    continue
                for i, category in enumerate(row.table.categories):
                    writer.writerow(
                        [row.company, row.domain, row.outcome, row.model_kind, row.family,
                         category, repr(float(row.table.precision[i])),
                         repr(float(row.table.recall[i])), repr(float(row.table.f1[i])),
                         int(row.table.support[i])]
                    )
    except OSError as exc:
        raise ReportIoError(str(exc)) from exc
    return path


def _fmt_score(value: float | None) -> str:
    return "" if value is None else f"{100.0 * value:.2f}"


def _fmt_gain(value: float | None) -> str:
    return "" if value is None else f"{value:.2f}"


def _write_table(rows: list[list[str]], header: list[str], stem: Path, formats) -> None:
    try:
        if "csv" in formats:
            with open(stem.with_suffix(".csv"), "w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(header)
                writer.writerows(rows)
        if "markdown" in formats:
            with open(stem.with_suffix(".md"), "w") as fh:
                fh.write("| " + " | ".join(header) + " |\n")
                fh.write("|" + "|".join(["---"] * len(header)) + "|\n")
                for row in rows:
                    fh.write("| " + " | ".join(str(c) for c in row) + " |\n")
    except OSError as exc:
        raise ReportIoError(str(exc)) from exc


def _company_table(
    report: EvaluationReport,
    rows: list[ScoreRow],
    companies: list[str],
    gen_kind: str,
    ens_kind: str,
    families: list[str],
) -> tuple[list[str], list[list[str]]]:
    header = ["model", *companies, "avg"]
    by = {}
    for r in rows:
        by[(r.model_kind, r.family, r.company)] = r

    def _avg_cell(cells: list[str]) -> str:
        values = []
        for c in cells:
            try:
                values.append(float(c))
            except ValueError:
                continue
        return f"{sum(values) / len(values):.2f}" if values else ""

    def line(label: str, cells: list[str]) -> list[str]:
        return [label, *cells, _avg_cell(cells)]

    table: list[list[str]] = []
    spec_cells = []
    spec_categories = []
    for company in companies:
        best = next(
            (r for r in rows if r.company == company and r.is_best_specific), None
        )
        spec_cells.append(_fmt_score(best.macro_f1) if best else "")
        spec_categories.append(str(best.n_categories) if best and best.n_categories else "")
    table.append(line("spec", spec_cells))

    gen_categories: list[str] = ["" for _ in companies]
    for family in families:
        gen_cells, ens_cells, coef_cells = [], [], []
        for i, company in enumerate(companies):
            gen = by.get((gen_kind, family, company))
            ens = by.get((ens_kind, family, company))
            if gen is None:
                gen_cells.append("")
            elif gen.status != STATUS_OK:
                gen_cells.append(gen.status)
            else:
                gen_cells.append(_fmt_score(gen.macro_f1))
                if gen.n_categories:
                    gen_categories[i] = str(gen.n_categories)
            if ens is None or ens.status != STATUS_OK:
                ens_cells.append(ens.status if ens is not None else "")
                coef_cells.append("")
            else:
                ens_cells.append(_fmt_score(ens.macro_f1))
                coef_cells.append(f"({ens.generic_coef:g},{ens.specific_coef:g})")
        table.append([f"{family} gen", *gen_cells, _avg_cell(gen_cells)])
        table.append([f"{family} ens", *ens_cells, _avg_cell(ens_cells)])
        table.append([f"{family} coef", *coef_cells, ""])
    table.append(["categories spec", *spec_categories, ""])
    table.append(["categories gen", *gen_categories, ""])
    return header, table


def emit_report(
    report: EvaluationReport,
    out_dir: str | Path,
    formats: tuple[str, ...] = ("csv", "markdown"),
) -> list[Path]:
    """Write gains, summary, per-company shaped tables, and figures."""
    out_dir = Path(out_dir)
    tables_dir = out_dir / "tables"
    figures_dir = out_dir / "figures"
    out_dir.mkdir(parents=True, exist_ok=True)
    tables_dir.mkdir(exist_ok=True)
    figures_dir.mkdir(exist_ok=True)
    written: list[Path] = []

    gain_header = ["company", "domain", "outcome", "model_kind", "family",
                   "macro_f1", "gain", "n_categories", "coefficients"]
    gain_rows = []
    for row in report.rows:
        if row.model_kind == MODEL_KIND_SPECIFIC or row.status != STATUS_OK:
            continue
        coef = (
            f"({row.generic_coef:g},{row.specific_coef:g})"
            if row.generic_coef is not None
            else ""
        )
        gain_rows.append(
            [row.company, row.domain, row.outcome, row.model_kind, row.family,
             _fmt_score(row.macro_f1), _fmt_gain(report.gain_of(row)),
             row.n_categories if row.n_categories is not None else "", coef]
        )
    _write_table(gain_rows, gain_header, tables_dir.parent / "gains", formats)
    written.append(out_dir / "gains.csv")

    summary = report.summary()
    summary_rows = [[name, _fmt_gain(float(value)) if isinstance(value, float) else str(value)]
                    for name, value in summary.items()]
    _write_table(summary_rows, ["metric", "value"], tables_dir.parent / "summary", formats)
    written.append(out_dir / "summary.csv")

    families = sorted({r.family for r in report.rows})
    groups: dict[tuple[str, str], list[ScoreRow]] = {}
    for row in report.rows:
        groups.setdefault((row.domain, row.outcome), []).append(row)
    for (domain, outcome), rows in sorted(groups.items()):
        companies = sorted({r.company for r in rows})
        for scope, gen_kind, ens_kind in (
            ("full", MODEL_KIND_GEN_FULL, MODEL_KIND_ENS_FULL),
            ("domain", MODEL_KIND_GEN_DOMAIN, MODEL_KIND_ENS_DOMAIN),
        ):
            header, table = _company_table(report, rows, companies, gen_kind, ens_kind, families)
            stem = tables_dir / f"{domain}__{outcome}__{scope}"
            _write_table(table, header, stem, formats)
            written.append(stem.with_suffix(".csv"))

    written.extend(_emit_figures(report, figures_dir))
    return written


def _emit_figures(report: EvaluationReport, figures_dir: Path) -> list[Path]:
    written = []
    max_gains = []
    for key_id in report.key_ids():
        base = report.baseline(key_id)
        candidates = report.candidate_rows(key_id)
        if base is None or base.macro_f1 is None or not candidates:
            continue
        max_gains.append(max(100.0 * (r.macro_f1 - base.macro_f1) for r in candidates))
    if max_gains:
        fig, ax = plt.subplots(figsize=(5, 3.5))
        ax.hist(max_gains, bins=min(20, max(5, len(max_gains) // 2)), color="#4878b0", edgecolor="white")
        mean = sum(max_gains) / len(max_gains)
        ax.axvline(mean, color="#c44e52", linestyle="--", label=f"mean {mean:.1f}")
        ax.set_xlabel("max gain over best specific model (F1 points)")
        ax.set_ylabel("combinations")
        ax.set_title(f"n={len(max_gains)}, min={min(max_gains):.1f}, max={max(max_gains):.1f}")
        ax.legend()
        fig.tight_layout()
        path = figures_dir / "gain_distribution.png"
        fig.savefig(path, dpi=150)
        plt.close(fig)
        written.append(path)

    pairs = [
        (row.generic_coef, row.specific_coef)
        for row in report.rows
        if row.status == STATUS_OK and row.generic_coef is not None
    ]
    if pairs:
        labels = sorted({f"({a:g},{b:g})" for a, b in pairs})
        counts = [sum(1 for a, b in pairs if f"({a:g},{b:g})" == lab) for lab in labels]
        fig, ax = plt.subplots(figsize=(6, 3.5))
        ax.bar(range(len(labels)), counts, color="#6aa84f")
        ax.set_xticks(range(len(labels)))
        ax.set_xticklabels(labels, rotation=60, ha="right", fontsize=7)
        ax.set_ylabel("selected count")
        ax.set_xlabel("(generic, specific) blend coefficients")
        fig.tight_layout()
        path = figures_dir / "blend_coefficients.png"
        fig.savefig(path, dpi=150)
        plt.close(fig)
        written.append(path)
    return written


def write_difficulty_outputs(
    points: list[CurvePoint],
    out_dir: str | Path,
    formats: tuple[str, ...] = ("csv", "markdown"),
) -> list[Path]:
    """Difficulty-vs-category-count table plus its rendered curve."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    header = ["n_categories", "difficulty_random", "difficulty_most_frequent", "difficulty_aggregate"]
    rows = [
        [p.n_categories, repr(p.difficulty_random), repr(p.difficulty_most_frequent),
         repr(p.difficulty_aggregate)]
        for p in points
    ]
    _write_table(rows, header, out_dir / "difficulty_curve", formats)

    ks = [p.n_categories for p in points]
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.plot(ks, [p.difficulty_random for p in points], "o-", label="random")
    ax.plot(ks, [p.difficulty_most_frequent for p in points], "s-", label="most frequent")
    ax.plot(ks, [p.difficulty_aggregate for p in points], "k--", label="aggregate")
    ax.set_xlabel("number of categories")
    ax.set_ylabel("difficulty (1 - baseline F1)")
    ax.set_ylim(0, 1)
    ax.legend()
    fig.tight_layout()
    path = Path(out_dir) / "difficulty_curve.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return [Path(out_dir) / "difficulty_curve.csv", path]
