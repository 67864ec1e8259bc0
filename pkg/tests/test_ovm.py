from __future__ import annotations

import random

import pytest

from tenantweaver.ovm import (
    Constraint,
    ModelFormatError,
    VariabilityGroup,
    VariabilityModel,
    VariationPoint,
    Variant,
    check_model,
    parse_model,
    serialize_model,
)

from conftest import fixture_text
from genmodels import random_model


def test_parse_travel_model():
    model = parse_model(fixture_text("travel_model.json"))
    assert model.id == "travel"
    assert model.vp_ids() == ("B", "P")
    assert model.variant_ids() == ("OB", "PVB", "CCP", "CP")
    e_1, e_5 = model.groups
    assert (e_1.edge_id, e_1.vp, e_1.kind, e_1.variants, e_1.min, e_1.max) == \
        ("e_1", "B", "optional", ("OB", "PVB"), 1, 1)
    assert (e_5.edge_id, e_5.vp, e_5.kind, e_5.variants, e_5.min, e_5.max) == \
        ("e_5", "P", "optional", ("CCP", "CP"), 1, 2)
    kinds = {(c.edge_id, c.kind, c.source, c.target) for c in model.constraints}
    assert kinds == {("e_2", "requires", "OB", "CCP"),
                     ("e_3", "excludes", "OB", "CP"),
                     ("e_4", "requires", "PVB", "CP")}


def test_parse_empty_document_is_schema_violation():
    with pytest.raises(ModelFormatError):
        parse_model("{}")
    with pytest.raises(ModelFormatError):
        parse_model("")


def test_parse_unknown_variant_reference_names_it():
    document = {
        "model": {
            "id": "m",
            "variation_points": [{"id": "A"}],
            "variants": [{"id": "a1"}],
            "groups": [{"edge_id": "g1", "vp": "A", "kind": "optional", "variants": ["X"]}],
        }
    }
    with pytest.raises(ModelFormatError) as err:
        parse_model(document)
    assert "'X'" in str(err.value)
    assert "groups[0]" in err.value.path


def test_parse_rejects_unknown_keys_and_duplicates():
    with pytest.raises(ModelFormatError):
        parse_model({"model": {"id": "m", "bogus": 1}})
    with pytest.raises(ModelFormatError) as err:
        parse_model({"model": {"id": "m",
                               "variation_points": [{"id": "A"}, {"id": "A"}]}})
    assert "duplicate" in str(err.value)


@pytest.mark.parametrize("reserved", ["O", "M", "R", "E"])
def test_reserved_ids_rejected_at_parse(reserved):
    document = {"model": {"id": "m", "variation_points": [{"id": reserved}]}}
    with pytest.raises(ModelFormatError) as err:
        parse_model(document)
    assert "reserved" in str(err.value)
    # reserved edge ids as well
    document = {"model": {"id": "m",
                          "variation_points": [{"id": "A"}],
                          "variants": [{"id": "a1"}],
                          "groups": [{"edge_id": reserved, "vp": "A", "kind": "optional",
                                      "variants": ["a1"]}]}}
    with pytest.raises(ModelFormatError):
        parse_model(document)


def test_default_cardinalities():
    document = {"model": {
        "id": "m",
        "variation_points": [{"id": "A"}, {"id": "B2"}],
        "variants": [{"id": "a1"}, {"id": "a2"}, {"id": "b1"}],
        "groups": [
            {"edge_id": "g1", "vp": "A", "kind": "optional", "variants": ["a1", "a2"]},
            {"edge_id": "g2", "vp": "B2", "kind": "optional", "variants": ["b1"]},
        ],
    }}
    model = parse_model(document)
    # alternative choice default [1..1]; standalone optional variant [0..1]
    assert (model.groups[0].min, model.groups[0].max) == (1, 1)
    assert (model.groups[1].min, model.groups[1].max) == (0, 1)


def test_mandatory_default_is_fully_bound():
    document = {"model": {
        "id": "m",
        "variation_points": [{"id": "A"}],
        "variants": [{"id": "a1"}, {"id": "a2"}],
        "groups": [{"edge_id": "g1", "vp": "A", "kind": "mandatory", "variants": ["a1", "a2"]}],
    }}
    group = parse_model(document).groups[0]
    assert (group.min, group.max) == (2, 2)


def test_check_travel_model_is_clean(travel_model):
    assert check_model(travel_model) == []


def test_check_unbound_variation_point():
    model = VariabilityModel(
        "m",
        (VariationPoint("A"), VariationPoint("B2")),
        (Variant("a1"),),
        (VariabilityGroup("g1", "A", "optional", ("a1",), 0, 1),),
        (),
    )
    diagnostics = check_model(model)
    assert len(diagnostics) == 1
    assert "unbound variation point" in diagnostics[0].message


def test_check_min_exceeds_max():
    model = VariabilityModel(
        "m",
        (VariationPoint("A"),),
        (Variant("a1"), Variant("a2")),
        (VariabilityGroup("g1", "A", "optional", ("a1", "a2"), 2, 1),),
        (),
    )
    messages = [d.message for d in check_model(model) if d.severity == "error"]
    assert messages == ["cardinality min exceeds max"]


def test_check_constraint_endpoints():
    model = VariabilityModel(
        "m",
        (VariationPoint("A"),),
        (Variant("a1"),),
        (VariabilityGroup("g1", "A", "optional", ("a1",), 0, 1),),
        (Constraint("c1", "requires", "a1", "a1"),),
    )
    messages = [d.message for d in check_model(model)]
    assert any("identical" in m for m in messages)


def test_check_is_pure(travel_model):
    first = check_model(travel_model)
    second = check_model(travel_model)
    assert first == second == []


def test_shared_variant_across_vps_is_informational():
    document = {"model": {
        "id": "m",
        "variation_points": [{"id": "A"}, {"id": "B2"}],
        "variants": [{"id": "x1"}],
        "groups": [
            {"edge_id": "g1", "vp": "A", "kind": "optional", "variants": ["x1"]},
            {"edge_id": "g2", "vp": "B2", "kind": "optional", "variants": ["x1"]},
        ],
    }}
    diagnostics = check_model(parse_model(document))
    assert [d.severity for d in diagnostics] == ["info"]
    assert "shared" in diagnostics[0].message


def test_serialize_round_trip_travel(travel_model):
    assert parse_model(serialize_model(travel_model)) == travel_model


def test_serialize_round_trip_minimal():
    model = parse_model({"model": {
        "id": "tiny",
        "variation_points": [{"id": "A"}],
        "variants": [{"id": "a1"}],
        "groups": [{"edge_id": "g1", "vp": "A", "kind": "mandatory", "variants": ["a1"]}],
    }})
    assert parse_model(serialize_model(model)) == model


def test_serialize_round_trip_random_models():
    rng = random.Random(20260809)
    for _ in range(100):
        model = random_model(rng)
        assert parse_model(serialize_model(model)) == model
