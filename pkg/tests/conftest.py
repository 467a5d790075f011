from __future__ import annotations

import csv
from pathlib import Path

import numpy as np
import pytest

from safepool.records import AccidentRecord, Outcome

DATA_DIR = Path(__file__).parent / "data"

# collected (criterion, description, passed) entries, printed at session end
ACCEPTANCE_RESULTS: list[tuple[int, str, bool]] = []


def record_acceptance(number: int, description: str, passed: bool) -> None:
    ACCEPTANCE_RESULTS.append((number, description, passed))
    assert passed, f"acceptance criterion {number} failed: {description}"


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for number, description, passed in sorted(ACCEPTANCE_RESULTS):
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"criterion {number:2d} [{status}] {description}")


def make_records(
    labels,
    company: str = "c1",
    domain: str = "construction",
    outcome: Outcome = Outcome.SEVERITY,
    n_attributes: int = 6,
    start_id: int = 0,
    seed: int = 0,
):
    """Records with the given labels and random binary attributes."""
    rng = np.random.default_rng(seed)
    records = []
    for i, label in enumerate(labels):
        bits = tuple(int(b) for b in rng.integers(0, 2, n_attributes))
        records.append(
            AccidentRecord(start_id + i, company, domain, bits, {outcome: label})
        )
    return records


def load_weight_reference():
    rows = list(csv.DictReader(open(DATA_DIR / "class_weight_reference.csv")))
    groups: dict[tuple[str, str], list[tuple[str, int, float]]] = {}
    for row in rows:
        key = (row["outcome"], row["scope"])
        groups.setdefault(key, []).append(
            (row["category"], int(row["train_count"]), float(row["weight"]))
        )
    return groups


def load_gain_reference():
    return [
        (row["company"], row["domain"], row["outcome"], float(row["gain"]))
        for row in csv.DictReader(open(DATA_DIR / "gain_reference.csv"))
    ]


@pytest.fixture
def weight_reference():
    return load_weight_reference()


@pytest.fixture
def gain_reference():
    return load_gain_reference()
