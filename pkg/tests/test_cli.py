from __future__ import annotations

import json
from pathlib import Path

import pytest

from tenantweaver.cli import main

from conftest import FIXTURES

TRAVEL = str(FIXTURES / "travel_model.json")
PROCESS = str(FIXTURES / "travel_process.json")
ASPECTS = [str(FIXTURES / name) for name in (
    "aspect_online_booking.json",
    "aspect_personal_visit_booking.json",
    "aspect_credit_card_payment.json",
    "aspect_cash_payment.json",
)]


def write_json(path: Path, payload) -> str:
    path.write_text(json.dumps(payload), encoding="utf-8")
    return str(path)


@pytest.fixture()
def good_customization(tmp_path):
    return write_json(tmp_path / "good.json",
                      {"instances": [{"cp": "P", "v": "CCP"}, {"cp": "B", "v": "OB"}]})


@pytest.fixture()
def reordered_customization(tmp_path):
    return write_json(tmp_path / "reordered.json",
                      {"instances": [{"cp": "B", "v": "OB"}, {"cp": "P", "v": "CCP"}]})


def test_model_check_ok(capsys):
    assert main(["model", "check", TRAVEL]) == 0
    assert "well-formed" in capsys.readouterr().out


def test_model_check_reports_diagnostics(tmp_path, capsys):
    bad = write_json(tmp_path / "bad.json", {"model": {
        "id": "bad",
        "variation_points": [{"id": "A"}, {"id": "B2"}],
        "variants": [{"id": "a1"}],
        "groups": [{"edge_id": "g1", "vp": "A", "kind": "optional", "variants": ["a1"],
                    "min": 2, "max": 1}],
    }})
    assert main(["model", "check", bad]) == 1
    out = capsys.readouterr().out
    assert "cardinality min exceeds max" in out
    assert "unbound variation point" in out


def test_model_check_schema_error_is_exit_2(tmp_path, capsys):
    broken = tmp_path / "broken.json"
    broken.write_text("{not json", encoding="utf-8")
    assert main(["model", "check", str(broken)]) == 2
    assert "error:" in capsys.readouterr().err


def test_map_output_matches_export_and_is_stable(capsys):
    assert main(["map", TRAVEL]) == 0
    first = capsys.readouterr().out
    assert main(["map", TRAVEL]) == 0
    second = capsys.readouterr().out
    assert first == second
    document = json.loads(first)
    assert document["elements"] == ["B", "OB", "PVB", "CCP", "CP", "P", "R", "E", "O"]
    assert len(document["edges"]) == 5


def test_map_dot(capsys):
    assert main(["map", TRAVEL, "--format", "dot"]) == 0
    assert capsys.readouterr().out.startswith("digraph")


def test_validate_good_exit_0(good_customization, capsys):
    assert main(["validate", TRAVEL, good_customization, "--mode", "sequential"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert (report["vf"], report["cf"]) == ("valid", "complete")


def test_validate_reordered_sequential_exit_1_with_ic(reordered_customization, capsys):
    assert main(["validate", TRAVEL, reordered_customization, "--mode", "sequential"]) == 1
    report = json.loads(capsys.readouterr().out)
    assert report["ic"] == {"cp": "B", "v": "OB"}


def test_validate_icp_flag(tmp_path, capsys):
    customization = write_json(tmp_path / "c.json", {"instances": [{"cp": "P", "v": "CCP"}]})
    assert main(["validate", TRAVEL, customization, "--icp", "P"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert set(report["m_t"]["x_t"]) == {"P", "CCP"}


def test_enumerate_three_lines(capsys):
    assert main(["enumerate", TRAVEL]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines == ["OB CCP", "PVB CP", "PVB CCP CP"]


def test_enumerate_limit_flags_truncation(capsys):
    assert main(["enumerate", TRAVEL, "--limit", "1"]) == 0
    captured = capsys.readouterr()
    assert len(captured.out.strip().splitlines()) == 1
    assert "truncated" in captured.err


def test_weave_and_run(tmp_path, capsys):
    selection = write_json(tmp_path / "selection.json",
                           {"selection": {"B": ["PVB"], "P": ["CP"]}})
    assert main(["weave", TRAVEL, PROCESS, *ASPECTS, "--selection", selection]) == 0
    woven = json.loads(capsys.readouterr().out)
    assert woven["applied_aspects"] == ["personal-visit-booking", "cash-payment"]

    stub_files = []
    stubs = json.loads((FIXTURES / "service_stubs.json").read_text())["stubs"]
    for i, stub in enumerate(stubs):
        stub_files.append(write_json(tmp_path / f"stub{i}.json", stub))
    request = write_json(tmp_path / "input.json", {"customer": "ada", "amount": "9"})
    assert main(["run", TRAVEL, PROCESS, *ASPECTS,
                 "--selection", selection, "--services", *stub_files,
                 "--input", request]) == 0
    lines = [json.loads(line) for line in capsys.readouterr().out.strip().splitlines()]
    invokes = [line["activity"] for line in lines if line["kind"] == "invoke"]
    assert invokes == ["checkCustomer", "scheduleVisit", "bookAtDesk", "registerCashPayment"]


def test_weave_invalid_selection_exit_1(tmp_path, capsys):
    selection = write_json(tmp_path / "selection.json",
                           {"selection": {"B": ["OB"], "P": ["CP"]}})
    assert main(["weave", TRAVEL, PROCESS, *ASPECTS, "--selection", selection]) == 1
    report = json.loads(capsys.readouterr().out)
    assert report["vf"] == "invalid"


def test_usage_error_exit_2():
    with pytest.raises(SystemExit) as err:
        main(["frobnicate"])
    assert err.value.code == 2
