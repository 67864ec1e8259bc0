from __future__ import annotations

import random

import pytest

from tenantweaver.enumeration import SearchSpaceExceeded, enumerate_configurations
from tenantweaver.ovm import parse_model
from tenantweaver.validation import (
    COMPLETE,
    VALID,
    CustomizationInstance as CI,
    CustomizationSet,
    validate,
)

from genmodels import bounded_model


def test_travel_configurations_exact(travel_model):
    result = enumerate_configurations(travel_model)
    assert result.configurations == (
        frozenset({"OB", "CCP"}),
        frozenset({"PVB", "CP"}),
        frozenset({"PVB", "CCP", "CP"}),
    )
    assert result.truncated is False


def test_single_mandatory_variant():
    model = parse_model({"model": {
        "id": "m",
        "variation_points": [{"id": "A"}],
        "variants": [{"id": "a1"}],
        "groups": [{"edge_id": "g1", "vp": "A", "kind": "mandatory", "variants": ["a1"]}],
    }})
    result = enumerate_configurations(model)
    assert result.configurations == (frozenset({"a1"}),)


def test_limit_truncates(travel_model):
    result = enumerate_configurations(travel_model, limit=1)
    assert len(result.configurations) == 1
    assert result.configurations[0] == frozenset({"OB", "CCP"})
    assert result.truncated is True


def test_limit_equal_to_total_is_not_truncated(travel_model):
    result = enumerate_configurations(travel_model, limit=3)
    assert len(result.configurations) == 3
    assert result.truncated is False


def test_guard_rejects_huge_spaces():
    variants = [{"id": f"v{i}"} for i in range(1, 25)]
    groups = [{"edge_id": f"g{k}", "vp": f"VP{k}", "kind": "optional",
               "variants": [f"v{i}" for i in range(1, 25)],
               "min": 0, "max": 24} for k in range(1, 4)]
    # one group of 24 free variants is ~1.7e7 subsets on its own
    model = parse_model({"model": {
        "id": "big",
        "variation_points": [{"id": f"VP{k}"} for k in range(1, 4)],
        "variants": variants,
        "groups": groups,
    }})
    with pytest.raises(SearchSpaceExceeded):
        enumerate_configurations(model)


def test_restricted_icp_excludes_unbound_groups(travel_model):
    result = enumerate_configurations(travel_model, icp=frozenset({"P"}))
    # only the payment group contributes; OB's constraints never trigger
    assert result.configurations == (
        frozenset({"CCP"}),
        frozenset({"CP"}),
        frozenset({"CCP", "CP"}),
    )


def test_mandatory_closure_joins_every_configuration(service_model):
    result = enumerate_configurations(service_model)
    assert result.configurations == (
        frozenset({"Core"}),
        frozenset({"Core", "V1"}),
        frozenset({"Core", "V2"}),
    )


def test_enumeration_deterministic(travel_model):
    first = enumerate_configurations(travel_model)
    second = enumerate_configurations(travel_model)
    assert first == second


def _mandatory_closure_variants(model, icp):
    forced = set()
    for group in model.groups:
        if group.kind == "mandatory" and group.vp in icp:
            forced.update(group.variants)
    return forced


def all_subset_customizations(model):
    """Every per-optional-group subset assignment, as instance lists."""
    import itertools

    optional = [g for g in model.groups if g.kind == "optional"]
    per_group = []
    for g in optional:
        subsets = []
        for size in range(len(g.variants) + 1):
            subsets.extend(itertools.combinations(g.variants, size))
        per_group.append([(g.vp, subset) for subset in subsets])
    for combo in itertools.product(*per_group):
        yield [CI(vp, v) for vp, subset in combo for v in subset]


def test_oracle_equivalence_travel(travel_model):
    configurations = set(enumerate_configurations(travel_model).configurations)
    for instances in all_subset_customizations(travel_model):
        report = validate(travel_model, None, CustomizationSet(tuple(instances)), "unordered")
        accepted = report.vf == VALID and report.cf == COMPLETE
        selection = frozenset(c.v for c in instances)
        assert accepted == (selection in configurations), instances


def test_oracle_equivalence_random_models():
    rng = random.Random(20260101)
    checked = 0
    for _ in range(100):
        model = bounded_model(rng, max_choice_product=600)
        icp = frozenset(vp.id for vp in model.variation_points)
        configurations = set(enumerate_configurations(model).configurations)
        forced = _mandatory_closure_variants(model, icp)
        for instances in all_subset_customizations(model):
            report = validate(model, None, CustomizationSet(tuple(instances)), "unordered")
            accepted = report.vf == VALID and report.cf == COMPLETE
            selection = frozenset(c.v for c in instances) | forced
            assert accepted == (selection in configurations), (model.id, instances)
            checked += 1
    assert checked >= 1000
