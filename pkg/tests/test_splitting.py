import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from safepool.errors import EmptyInputError, MixedOutcomeError
from safepool.records import CombinationKey, Outcome
from safepool.splitting import (
    SplitSet,
    part_sizes,
    pool_splits,
    read_manifest,
    split_combination,
    split_from_manifest,
    write_manifest,
)
from tests.conftest import make_records

KEY = CombinationKey.specific("c1", "construction", Outcome.SEVERITY)


def split_of(n, seed=0, company="c1", start_id=0):
    records = make_records(
        ["a"] * n, company=company, start_id=start_id, seed=start_id + 1
    )
    key = CombinationKey.specific(company, "construction", Outcome.SEVERITY)
    return split_combination(records, key, seed=seed)


def test_exact_ratio_sizes():
    assert split_of(100).sizes == (64, 16, 20)


def test_floor_rule_at_101():
    assert split_of(101).sizes == (64, 16, 21)


@given(st.integers(min_value=1, max_value=5000))
def test_part_sizes_match_integer_floor(n):
    train, val, test = part_sizes(n)
    assert train == (64 * n) // 100
    assert val == (16 * n) // 100
    assert test == n - train - val


def test_small_split_may_lose_a_category():
    records = make_records(["a", "a", "a", "a", "b"])
    split = split_combination(records, KEY, seed=3)
    assert split.sizes == (3, 0, 2)
    # no stratification: the minority category can vanish from train
    train_labels = {r.outcomes[Outcome.SEVERITY] for r in split.train}
    assert train_labels <= {"a", "b"}


def test_empty_input_raises():
    with pytest.raises(EmptyInputError):
        split_combination([], KEY)


def test_bad_ratios_raise():
    with pytest.raises(ValueError):
        split_combination(make_records(["a"] * 10), KEY, ratios=(0.5, 0.2, 0.2))


@given(st.integers(min_value=1, max_value=400), st.integers(min_value=0, max_value=10_000))
@settings(max_examples=100)
def test_disjoint_union_and_determinism(n, seed):
    split = split_of(n, seed=seed)
    ids = [r.record_id for part in (split.train, split.validation, split.test) for r in part]
    assert len(ids) == n
    assert len(set(ids)) == n
    assert set(ids) == set(range(n))
    again = split_of(n, seed=seed)
    assert [r.record_id for r in again.train] == [r.record_id for r in split.train]
    assert [r.record_id for r in again.test] == [r.record_id for r in split.test]


def test_different_seeds_same_size_triple():
    sizes = {split_of(137, seed=s).sizes for s in range(20)}
    assert sizes == {part_sizes(137)}


def test_pooling_single_split_is_identity():
    split = split_of(50)
    pooled = pool_splits([split], "per_domain", domain="construction")
    assert pooled.train == split.train
    assert pooled.validation == split.validation
    assert pooled.test == split.test
    assert pooled.key == CombinationKey.per_domain("construction", Outcome.SEVERITY)


def _fabricated_domain_split(domain, company_sizes, outcome=Outcome.SEVERITY, start=0):
    """Per-company splits with fixed part sizes, pooled into one domain split."""
    parts = []
    next_id = start
    for i, (n_train, n_val, n_test) in enumerate(company_sizes):
        n = n_train + n_val + n_test
        records = make_records(
            ["a"] * n, company=f"{domain}_c{i}", domain=domain, start_id=next_id
        )
        key = CombinationKey.specific(f"{domain}_c{i}", domain, outcome)
        parts.append(
            SplitSet(
                key,
                tuple(records[:n_train]),
                tuple(records[n_train : n_train + n_val]),
                tuple(records[n_train + n_val :]),
            )
        )
        next_id += n
    return parts


def test_pooling_construction_severity_totals():
    # four fabricated company splits whose parts sum to the reference row
    company_sizes = [
        (2495, 624, 780),
        (2495, 623, 780),
        (2495, 623, 780),
        (2495, 624, 779),
    ]
    parts = _fabricated_domain_split("construction", company_sizes)
    pooled = pool_splits(parts, "per_domain", domain="construction")
    assert pooled.sizes == (9980, 2494, 3119)


def test_pooling_full_severity_totals():
    domain_sizes = {
        "construction": (9980, 2494, 3119),
        "electric_td": (6672, 1669, 2085),
        "oil_gas": (18381, 4595, 5744),
        "corporate": (418, 105, 131),
    }
    parts = []
    start = 0
    for domain, sizes in domain_sizes.items():
        parts.extend(_fabricated_domain_split(domain, [sizes], start=start))
        start += sum(sizes)
    pooled = pool_splits(parts, "full")
    assert pooled.sizes == (35451, 8863, 11079)
    assert pooled.key == CombinationKey.full(Outcome.SEVERITY)


def test_pooled_sets_disjoint_from_specific_tests():
    parts = [split_of(100, seed=1), split_of(80, seed=2, company="c2", start_id=100)]
    pooled = pool_splits(parts, "per_domain", domain="construction")
    pooled_train_ids = {r.record_id for r in pooled.train}
    pooled_val_ids = {r.record_id for r in pooled.validation}
    for part in parts:
        test_ids = {r.record_id for r in part.test}
        assert not (pooled_train_ids & test_ids)
        assert not (pooled_val_ids & test_ids)


def test_pooling_mixed_outcomes_rejected():
    severity = split_of(30)
    injury_records = make_records(
        ["cut"] * 30, outcome=Outcome.INJURY_TYPE, start_id=100
    )
    injury = split_combination(
        injury_records,
        CombinationKey.specific("c1", "construction", Outcome.INJURY_TYPE),
    )
    with pytest.raises(MixedOutcomeError):
        pool_splits([severity, injury], "full")


def test_pooling_mixed_domains_rejected_for_per_domain():
    a = split_of(30, company="c1")
    b_records = make_records(["a"] * 30, company="c2", domain="oil_gas", start_id=50)
    b = split_combination(
        b_records, CombinationKey.specific("c2", "oil_gas", Outcome.SEVERITY)
    )
    with pytest.raises(ValueError):
        pool_splits([a, b], "per_domain", domain="construction")


def test_manifest_round_trip(tmp_path):
    split = split_of(60, seed=9)
    path = tmp_path / "manifest.csv"
    write_manifest(split, path)
    parts = read_manifest(path)
    assert parts["train"] == [r.record_id for r in split.train]
    records_by_id = {r.record_id: r for part in ("train", "validation", "test") for r in split.part(part)}
    again = split_from_manifest(path, split.key, records_by_id, seed=split.seed)
    assert again == split
