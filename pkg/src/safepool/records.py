"""Domain types: attribute vectors, outcomes, accident records, and task keys.

The attribute lexicon and the outcome taxonomy are runtime configuration; the
defaults shipped under ``safepool/data`` cover the standard 92-attribute
lexicon and the five-outcome taxonomy. Synthetic pools can substitute their
own without touching any code.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import (
    BadAttributeValueError,
    MissingFieldError,
    UnknownCategoryError,
)

DOMAIN_CONSTRUCTION = "construction"
DOMAIN_ELECTRIC = "electric_td"
DOMAIN_OIL_GAS = "oil_gas"
DOMAIN_CORPORATE = "corporate"

DOMAINS = (DOMAIN_CONSTRUCTION, DOMAIN_ELECTRIC, DOMAIN_OIL_GAS, DOMAIN_CORPORATE)

# Corporate records join full pools but never spawn their own modeling task.
TASK_DOMAINS = (DOMAIN_CONSTRUCTION, DOMAIN_ELECTRIC, DOMAIN_OIL_GAS)


class Outcome(str, Enum):
    SEVERITY = "severity"
    BODY_PART = "body_part"
    INJURY_TYPE = "injury_type"
    ACCIDENT_TYPE = "accident_type"
    ENERGY_SOURCE = "energy_source"


OUTCOMES = tuple(Outcome)
OUTCOME_COLUMNS = tuple(o.value for o in Outcome)

Taxonomy = Mapping[Outcome, Sequence[str]]

SCOPE_SPECIFIC = "specific"
SCOPE_PER_DOMAIN = "per_domain"
SCOPE_FULL = "full"


def default_lexicon() -> tuple[str, ...]:
    text = resources.files("safepool.data").joinpath("attributes.txt").read_text("utf-8")
    return tuple(line.strip() for line in text.splitlines() if line.strip())


def default_taxonomy() -> dict[Outcome, tuple[str, ...]]:
    text = resources.files("safepool.data").joinpath("taxonomy.json").read_text("utf-8")
    raw = json.loads(text)
    return {Outcome(name): tuple(cats) for name, cats in raw.items()}


def load_lexicon(path: str | Path) -> tuple[str, ...]:
    lines = Path(path).read_text("utf-8").splitlines()
    return tuple(line.strip() for line in lines if line.strip())


def load_taxonomy(path: str | Path) -> dict[Outcome, tuple[str, ...]]:
    raw = json.loads(Path(path).read_text("utf-8"))
    return {Outcome(name): tuple(cats) for name, cats in raw.items()}


def write_lexicon(path: str | Path, lexicon: Sequence[str]) -> None:
    Path(path).write_text("".join(f"{a}\n" for a in lexicon), "utf-8")


def write_taxonomy(path: str | Path, taxonomy: Taxonomy) -> None:
    raw = {o.value: list(cats) for o, cats in taxonomy.items()}
    Path(path).write_text(json.dumps(raw, indent=2) + "\n", "utf-8")


@dataclass(frozen=True)
class AccidentRecord:
    """One accident event; immutable after construction."""

    record_id: int
    company: str
    domain: str
    attributes: tuple[int, ...]
    outcomes: Mapping[Outcome, str]

    def label(self, outcome: Outcome) -> str | None:
        return self.outcomes.get(outcome)


@dataclass(frozen=True)
class CombinationKey:
    """Identifies one modeling task: a scope plus an outcome.

    Specific keys carry (company, domain); per-domain keys carry the domain
    only; full keys carry neither.
    """

    scope: str
    outcome: Outcome
    company: str | None = None
    domain: str | None = None

    @classmethod
    def specific(cls, company: str, domain: str, outcome: Outcome) -> "CombinationKey":
        return cls(SCOPE_SPECIFIC, outcome, company=company, domain=domain)

    @classmethod
    def per_domain(cls, domain: str, outcome: Outcome) -> "CombinationKey":
        return cls(SCOPE_PER_DOMAIN, outcome, domain=domain)

    @classmethod
    def full(cls, outcome: Outcome) -> "CombinationKey":
        return cls(SCOPE_FULL, outcome)

    def label(self) -> str:
        """Stable filesystem-safe identifier."""
        parts = [self.scope]
        if self.company is not None:
            parts.append(self.company)
        if self.domain is not None:
            parts.append(self.domain)
        parts.append(self.outcome.value)
        return "__".join(p.replace("/", "-").replace(" ", "-") for p in parts)


def attribute_vector(values: Iterable, lexicon: Sequence[str]) -> tuple[int, ...]:
    """Coerce raw flag values to a 0/1 tuple matching the lexicon length."""
    flags = []
    for i, v in enumerate(values):
        if isinstance(v, str):
            v = v.strip()
        if v in (0, 1, "0", "1", False, True):
            flags.append(int(v))
        else:
            raise BadAttributeValueError(i, v)
    if len(flags) != len(lexicon):
        raise BadAttributeValueError(
            len(flags), f"expected {len(lexicon)} flags, got {len(flags)}"
        )
    return tuple(flags)


def validate_record(
    raw: Mapping[str, object],
    lexicon: Sequence[str],
    taxonomy: Taxonomy,
    record_id: int = 0,
) -> AccidentRecord:
    """Normalize one raw field map into an AccidentRecord.

    Unknown outcome categories are rejected, attribute flags are coerced to
    {0, 1}, and at least one outcome must be present.
    """
    for field in ("company", "domain"):
        if field not in raw or raw[field] in (None, ""):
            raise MissingFieldError(field)
    company = str(raw["company"]).strip()
    domain = str(raw["domain"]).strip()
    if domain not in DOMAINS:
        raise UnknownCategoryError("domain", domain)

    flags = []
    for i, name in enumerate(lexicon):
        if name not in raw:
            raise MissingFieldError(name)
        v = raw[name]
        if isinstance(v, str):
            v = v.strip()
        if v in (0, 1, "0", "1", False, True):
            flags.append(int(v))
        else:
            raise BadAttributeValueError(i, v)

    outcomes: dict[Outcome, str] = {}
    for outcome in Outcome:
        value = raw.get(outcome.value)
        if value is None:
            continue
        label = str(value).strip()
        if not label:
            continue
        if label not in taxonomy.get(outcome, ()):
            raise UnknownCategoryError(outcome.value, label)
        outcomes[outcome] = label
    if not outcomes:
        raise MissingFieldError("outcome")

    return AccidentRecord(record_id, company, domain, tuple(flags), outcomes)


def record_to_row(record: AccidentRecord, lexicon: Sequence[str]) -> dict[str, str]:
    """Serialize a record to the ingestion CSV schema (inverse of validate_record)."""
    row = {"company": record.company, "domain": record.domain}
    for name, flag in zip(lexicon, record.attributes):
        row[name] = str(flag)
    for outcome in Outcome:
        row[outcome.value] = record.outcomes.get(outcome, "")
    return row


def csv_header(lexicon: Sequence[str]) -> list[str]:
    return ["company", "domain", *lexicon, *OUTCOME_COLUMNS]


def write_pool_csv(path: str | Path, records: Sequence[AccidentRecord], lexicon: Sequence[str]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=csv_header(lexicon))
        writer.writeheader()
        for record in records:
            writer.writerow(record_to_row(record, lexicon))


def load_pool_csv(
    path: str | Path,
    lexicon: Sequence[str] | None = None,
    taxonomy: Taxonomy | None = None,
) -> list[AccidentRecord]:
    """Read and validate a pool CSV; record ids are assigned in row order."""
    lexicon = default_lexicon() if lexicon is None else lexicon
    taxonomy = default_taxonomy() if taxonomy is None else taxonomy
    records = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for i, row in enumerate(reader):
            records.append(validate_record(row, lexicon, taxonomy, record_id=i))
    return records


def category_counts(records: Iterable[AccidentRecord], outcome: Outcome) -> dict[str, int]:
    """Tally categories over records where the outcome is present."""
    counts: dict[str, int] = {}
    for record in records:
        label = record.outcomes.get(outcome)
        if label is not None:
            counts[label] = counts.get(label, 0) + 1
    return counts


def is_eligible(counts: Mapping[str, int], min_count: int = 100, min_categories: int = 2) -> bool:
    """True when at least ``min_categories`` categories each exceed ``min_count``."""
    return sum(1 for v in counts.values() if v > min_count) >= min_categories


def eligible_combinations(
    records: Sequence[AccidentRecord],
    min_count: int = 100,
    min_categories: int = 2,
) -> list[CombinationKey]:
    """All (company, domain, outcome) keys whose counts pass the eligibility rule.

    Corporate-domain keys are included here; task enumeration downstream
    excludes them from specific-model training while keeping their records in
    the full pool.
    """
    groups: dict[tuple[str, str], list[AccidentRecord]] = {}
    for record in records:
        groups.setdefault((record.company, record.domain), []).append(record)
    keys = []
    for (company, domain) in sorted(groups):
        group = groups[(company, domain)]
        for outcome in Outcome:
            counts = category_counts(group, outcome)
            if is_eligible(counts, min_count, min_categories):
                keys.append(CombinationKey.specific(company, domain, outcome))
    return keys


def records_for_key(records: Iterable[AccidentRecord], key: CombinationKey) -> list[AccidentRecord]:
    """Records belonging to the key's scope that carry the key's outcome."""
    out = []
    for record in records:
        if record.outcomes.get(key.outcome) is None:
            continue
        if key.scope == SCOPE_SPECIFIC and (record.company, record.domain) != (key.company, key.domain):
            continue
        if key.scope == SCOPE_PER_DOMAIN and record.domain != key.domain:
            continue
        out.append(record)
    return out
