from __future__ import annotations

import json

import pytest

from tenantweaver.store import (
    BadKeyError,
    NotFoundError,
    StoreCatalog,
    StoreValidationError,
    VersionConflictError,
)

from conftest import fixture_json, fixture_text


@pytest.fixture()
def stores(tmp_path):
    return StoreCatalog(tmp_path / "data")


def test_put_get_round_trip(stores):
    document = fixture_json("travel_model.json")
    version = stores.models.put("travel", document)
    assert version == 1
    value, got_version = stores.models.get("travel")
    assert value == document
    assert got_version == 1


def test_version_increments_per_write(stores):
    document = fixture_json("travel_model.json")
    assert stores.models.put("travel", document) == 1
    assert stores.models.put("travel", document) == 2
    assert stores.models.put("travel", document, expected_version=2) == 3


def test_version_conflict(stores):
    document = fixture_json("travel_model.json")
    stores.models.put("travel", document)
    stores.models.put("travel", document)
    with pytest.raises(VersionConflictError):
        stores.models.put("travel", document, expected_version=1)


def test_get_unknown_key(stores):
    with pytest.raises(NotFoundError):
        stores.models.get("nope")


def test_list_sorted(stores):
    document = fixture_json("travel_model.json")
    for key in ("m-c", "m-a", "m-b"):
        document["model"]["id"] = key
        stores.models.put(key, json.loads(json.dumps(document)))
    assert [key for key, _ in stores.models.list()] == ["m-a", "m-b", "m-c"]


def test_invalid_model_document_rejected(stores):
    with pytest.raises(StoreValidationError):
        stores.models.put("bad", {"model": {"id": "bad", "variation_points": [{"id": "A"}]}})


def test_active_tenant_record_requires_valid_report(stores, travel_model):
    from tenantweaver.validation import CustomizationInstance as CI
    from tenantweaver.validation import CustomizationSet, report_to_dict, validate

    invalid = validate(travel_model, None, CustomizationSet((CI("B", "OB"),)), "sequential")
    assert invalid.vf == "invalid"
    record = {"tenant_id": "t1", "model_id": "travel", "active": True,
              "report": report_to_dict(invalid), "history": []}
    with pytest.raises(StoreValidationError):
        stores.tenants.put("t1", record)
    # inactive records may hold anything structurally sound
    record["active"] = False
    assert stores.tenants.put("t1", record) == 1


def test_illegal_keys_rejected(stores):
    for key in ("../escape", "", ".hidden", "a/b"):
        with pytest.raises(BadKeyError):
            stores.models.get(key)


def test_delete(stores):
    stores.aspects.put("timing", fixture_json("aspect_timing.json"))
    stores.aspects.delete("timing")
    with pytest.raises(NotFoundError):
        stores.aspects.get("timing")
    with pytest.raises(NotFoundError):
        stores.aspects.delete("timing")


def test_interrupted_put_leaves_old_value(stores):
    document = fixture_json("travel_model.json")
    stores.models.put("travel", document)
    # simulate a crash mid-write: a stray temp file next to the value
    tmp = stores.models.path / "travel.json.tmp"
    tmp.write_text('{"model": {"id": "torn', encoding="utf-8")
    value, version = stores.models.get("travel")
    assert value == document
    assert version == 1


def test_on_disk_layout(stores):
    stores.models.put("travel", fixture_json("travel_model.json"))
    assert (stores.root / "models" / "travel.json").exists()
    assert (stores.root / "models" / "travel.version").read_text() == "1"


def test_check_references_reports_dangling(stores):
    stores.processes.put("travel", fixture_json("travel_process.json"))
    problems = stores.check_references()
    assert any("unknown service 'crm'" in p for p in problems)
    for stub in fixture_json("service_stubs.json")["stubs"]:
        stores.services.put(stub["service"]["id"], stub)
    assert stores.check_references() == []
