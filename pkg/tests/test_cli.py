import csv
import json
from pathlib import Path

import pytest

from safepool.cli import main
from safepool.records import load_pool_csv, load_lexicon, load_taxonomy

POOL_SPEC = {
    "companies": [
        {"name": "acme", "domain": "construction", "n_records": 500},
        {"name": "brill", "domain": "construction", "n_records": 900, "label_noise": 0.05},
    ],
    "signal_bits": 2,
    "seed": 11,
}


@pytest.fixture
def workdir(tmp_path):
    spec_path = tmp_path / "pool_spec.json"
    spec_path.write_text(json.dumps(POOL_SPEC))
    return tmp_path


def _synth(workdir) -> Path:
    pool = workdir / "pool.csv"
    assert main(["synth", "--spec", str(workdir / "pool_spec.json"), "--out", str(pool)]) == 0
    return pool


def _stage_args(workdir):
    return [
        "--pool", str(workdir / "pool.csv"),
        "--lexicon", str(workdir / "pool.attributes.txt"),
        "--taxonomy", str(workdir / "pool.taxonomy.json"),
        "--out", str(workdir / "exp"),
        "--seed", "5",
        "--grid", "strided:900",
        "--families", "forest,logistic",
    ]


def test_synth_then_ingest_round_trip(workdir, capsys):
    pool = _synth(workdir)
    records = load_pool_csv(
        pool,
        load_lexicon(workdir / "pool.attributes.txt"),
        load_taxonomy(workdir / "pool.taxonomy.json"),
    )
    assert len(records) == 1400
    assert main([
        "ingest", str(pool),
        "--lexicon", str(workdir / "pool.attributes.txt"),
        "--taxonomy", str(workdir / "pool.taxonomy.json"),
    ]) == 0
    out = capsys.readouterr().out
    assert "1400 records" in out


def test_full_staged_pipeline(workdir):
    _synth(workdir)
    args = _stage_args(workdir)
    for stage in ("split", "tune", "train", "ensemble", "evaluate"):
        assert main([stage, *args]) == 0, stage
    assert main(["report", "--out", str(workdir / "exp")]) == 0

    exp = workdir / "exp"
    scores = list(csv.DictReader(open(exp / "evaluation" / "scores.csv")))
    kinds = {row["model_kind"] for row in scores}
    assert kinds == {"spec", "gen_full", "gen_domain", "ens_full", "ens_domain"}
    summary = {
        row["metric"]: row["value"]
        for row in csv.DictReader(open(exp / "report" / "summary.csv"))
    }
    assert "win_rate" in summary and "n_wins" in summary
    assert (exp / "report" / "figures" / "gain_distribution.png").exists()
    tables = list((exp / "report" / "tables").glob("*.csv"))
    assert tables


def test_stage_out_of_order_fails_cleanly(workdir, capsys):
    _synth(workdir)
    args = _stage_args(workdir)
    assert main(["split", *args]) == 0
    assert main(["train", *args]) == 1  # tune has not run
    assert "tune" in capsys.readouterr().err


def test_difficulty_subcommand(workdir):
    out = workdir / "difficulty"
    assert main([
        "difficulty", "--k", "2..12", "--n", "2000", "--seed", "7", "--out", str(out),
    ]) == 0
    rows = list(csv.DictReader(open(out / "difficulty_curve.csv")))
    assert len(rows) == 11
    assert (out / "difficulty_curve.png").stat().st_size > 0


def test_unknown_flag_exits_2(capsys):
    assert main(["difficulty", "--bogus", "1"]) == 2


def test_unknown_command_exits_2():
    assert main(["frobnicate"]) == 2


def test_bad_grid_mode_exits_2(workdir, capsys):
    _synth(workdir)
    args = _stage_args(workdir)
    idx = args.index("--grid")
    args[idx + 1] = "strided:-1"
    assert main(["split", *args]) == 2
    assert "config error" in capsys.readouterr().err


def test_missing_config_file_exits_2(tmp_path):
    assert main(["split", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path)]) == 2


def test_config_file_drives_stages(workdir):
    _synth(workdir)
    config = {
        "pool": {"csv": str(workdir / "pool.csv")},
        "lexicon": str(workdir / "pool.attributes.txt"),
        "taxonomy": str(workdir / "pool.taxonomy.json"),
        "out": str(workdir / "exp2"),
        "seed": 5,
        "grid": "strided:900",
        "families": ["logistic"],
    }
    cfg_path = workdir / "experiment.json"
    cfg_path.write_text(json.dumps(config))
    assert main(["split", "--config", str(cfg_path)]) == 0
    assert (workdir / "exp2" / "splits").is_dir()
