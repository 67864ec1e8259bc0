from __future__ import annotations

import json
from pathlib import Path

import pytest

from tenantweaver.ovm import parse_model
from tenantweaver.workflow import parse_aspect, parse_process, parse_service_stub

FIXTURES = Path(__file__).parent / "fixtures"

VARIANT_ASPECT_FILES = (
    "aspect_online_booking.json",
    "aspect_personal_visit_booking.json",
    "aspect_credit_card_payment.json",
    "aspect_cash_payment.json",
)


def fixture_text(name: str) -> str:
    return (FIXTURES / name).read_text(encoding="utf-8")


def fixture_json(name: str) -> dict:
    return json.loads(fixture_text(name))


@pytest.fixture(scope="session")
def travel_model():
    return parse_model(fixture_text("travel_model.json"))


@pytest.fixture(scope="session")
def service_model():
    return parse_model(fixture_text("service_model.json"))


@pytest.fixture(scope="session")
def travel_process():
    return parse_process(fixture_text("travel_process.json"))


@pytest.fixture(scope="session")
def flight_process():
    return parse_process(fixture_text("flight_process.json"))


@pytest.fixture(scope="session")
def variant_aspects():
    return [parse_aspect(fixture_text(name)) for name in VARIANT_ASPECT_FILES]


@pytest.fixture(scope="session")
def timing_aspect():
    return parse_aspect(fixture_text("aspect_timing.json"))


@pytest.fixture(scope="session")
def stub_registry():
    stubs = [parse_service_stub(doc) for doc in fixture_json("service_stubs.json")["stubs"]]
    return {stub.id: stub for stub in stubs}
