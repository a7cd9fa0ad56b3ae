"""End-to-end command tests: ingest -> store -> reports."""

import csv
import json
from pathlib import Path

import pytest

from sitecover.cli import main
from sitecover.store import load_store

from conftest import MINI_DIR

GOLDEN = Path(__file__).parent / "golden"
EXAMPLE_SCENARIOS = Path(__file__).resolve().parents[1] / "scenarios.example.json"


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture()
def store_dir(tmp_path):
    out = tmp_path / "store"
    code = run(
        "ingest",
        "--tracts", MINI_DIR / "tracts.csv",
        "--svi", MINI_DIR / "svi.csv",
        "--facilities", f"pharm={MINI_DIR / 'pharm.csv'}",
        "--facilities", f"dg={MINI_DIR / 'dg.csv'}",
        "--out", out,
    )
    assert code == 0
    return out


def test_ingest_writes_manifest_with_two_sets(store_dir, capsys):
    manifest = json.loads((store_dir / "manifest.json").read_text())
    assert sorted(manifest["facility_sets"]) == ["dg", "pharm"]
    assert manifest["facility_sets"]["pharm"]["count"] == 2
    assert manifest["tracts"]["count"] == 5
    assert manifest["svi"]["matched"] == 4  # five rows, one sentinel


def test_ingest_report_printed(tmp_path, capsys):
    code = run(
        "ingest",
        "--tracts", MINI_DIR / "tracts.csv",
        "--svi", MINI_DIR / "svi.csv",
        "--facilities", f"pharm={MINI_DIR / 'pharm.csv'}",
        "--out", tmp_path / "s",
    )
    assert code == 0
    out = capsys.readouterr().out
    assert "tracts: read=5 accepted=5" in out
    assert "svi: read=5 accepted=5" in out
    assert "svi_matched=4" in out
    assert "facilities[pharm]: read=4 accepted=2" in out
    assert "doubt_geocodes=1" in out


def test_ingest_missing_tract_file(tmp_path, capsys):
    code = run("ingest", "--tracts", tmp_path / "nope.csv", "--out", tmp_path / "s")
    assert code == 2
    assert "nope.csv" in capsys.readouterr().err


def test_ingest_state_sites(tmp_path):
    sites = tmp_path / "ks_sites.csv"
    sites.write_text(
        "site_id,state,lat,lon,geocode_quality\n"
        "KS-SITE-1,KS,39.05,-98.2,success\n"
        "KS-SITE-2,KS,38.5,-97.5,success\n"
    )
    out = tmp_path / "s"
    code = run(
        "ingest",
        "--tracts", MINI_DIR / "tracts.csv",
        "--state-sites", f"KS={sites}",
        "--out", out,
    )
    assert code == 0
    store = load_store(out)
    assert set(store.facility_sets) == {"state"}
    ids = [f.id for f in store.facility_sets["state"].facilities]
    assert ids == ["KS-SITE-1", "KS-SITE-2"]
    assert all(f.chain == "state:KS" for f in store.facility_sets["state"].facilities)


def test_analyze_matches_goldens(store_dir, tmp_path, capsys):
    out = tmp_path / "reports"
    code = run("analyze", "--store", store_dir, "--sets", "pharm", "--out", out)
    assert code == 0
    assert (out / "coverage.csv").read_bytes() == (GOLDEN / "mini_pharm_coverage.csv").read_bytes()
    assert (out / "coverage.json").read_bytes() == (GOLDEN / "mini_pharm_coverage.json").read_bytes()
    assert (out / "goal.json").read_bytes() == (GOLDEN / "mini_goal.json").read_bytes()
    assert (out / "rates.csv").read_bytes() == (GOLDEN / "mini_rates.csv").read_bytes()
    printed = capsys.readouterr().out
    assert "goal: all_adults within 5 mi = 74.71% (target 90%) NOT met" in printed


def test_analyze_distances_dump(store_dir, tmp_path):
    out = tmp_path / "reports"
    assert run("analyze", "--store", store_dir, "--sets", "pharm", "--out", out) == 0
    rows = list(csv.DictReader((out / "distances.csv").open()))
    by_id = {r["tract_id"]: r for r in rows}
    assert len(rows) == 5
    assert by_id["38001000100"]["facility_id"] == ""
    assert by_id["38001000100"]["miles"] == ""
    assert by_id["20001000100"]["facility_id"] == "PH-KS-01"
    # engine value, not a re-derivation: the dump must be a lossless echo
    assert float(by_id["20001000100"]["miles"]) == 0.5369567150093438


def test_analyze_both_sets(store_dir, tmp_path):
    out = tmp_path / "reports"
    assert run("analyze", "--store", store_dir, "--sets", "pharm,dg", "--out", out) == 0
    assert (out / "coverage.csv").read_bytes() == (GOLDEN / "mini_both_coverage.csv").read_bytes()


def test_analyze_env_var_store(store_dir, tmp_path, monkeypatch):
    monkeypatch.setenv("SITECOVER_STORE", str(store_dir))
    out = tmp_path / "reports"
    assert run("analyze", "--sets", "pharm", "--out", out) == 0
    assert (out / "coverage.csv").read_bytes() == (GOLDEN / "mini_pharm_coverage.csv").read_bytes()


def test_analyze_no_store_anywhere(tmp_path, monkeypatch, capsys):
    monkeypatch.delenv("SITECOVER_STORE", raising=False)
    assert run("analyze", "--sets", "pharm", "--out", tmp_path / "r") == 2
    assert "SITECOVER_STORE" in capsys.readouterr().err


def test_analyze_unknown_set_named(store_dir, tmp_path, capsys):
    assert run("analyze", "--store", store_dir, "--sets", "nope", "--out", tmp_path / "r") == 2
    assert "nope" in capsys.readouterr().err


def test_analyze_unknown_group_named(store_dir, tmp_path, capsys):
    code = run("analyze", "--store", store_dir, "--sets", "pharm",
               "--groups", "all_adults,martians", "--out", tmp_path / "r")
    assert code == 2
    assert "martians" in capsys.readouterr().err


def test_analyze_single_cell(store_dir, tmp_path, capsys):
    out = tmp_path / "reports"
    code = run("analyze", "--store", store_dir, "--sets", "pharm",
               "--thresholds", "5", "--groups", "all_adults", "--out", out)
    assert code == 0
    lines = (out / "coverage.csv").read_text().splitlines()
    assert lines[0] == "group,scope,share_lt_5mi,weighted_total"
    assert lines[1] == "all_adults,US,74.71,870"
    assert "goal: all_adults within 5 mi" in capsys.readouterr().out


def test_analyze_workers_byte_identical(store_dir, tmp_path):
    out1, out2 = tmp_path / "w1", tmp_path / "w2"
    assert run("analyze", "--store", store_dir, "--sets", "pharm,dg",
               "--workers", "1", "--out", out1) == 0
    assert run("analyze", "--store", store_dir, "--sets", "pharm,dg",
               "--workers", "4", "--out", out2) == 0
    for name in ("coverage.csv", "coverage.json", "distances.csv", "goal.json", "rates.csv"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


def test_analyze_cross_state_flag(store_dir, tmp_path):
    out = tmp_path / "reports"
    code = run("analyze", "--store", store_dir, "--sets", "pharm,dg",
               "--cross-state", "ND=KS", "--out", out)
    assert code == 0
    rows = list(csv.DictReader((out / "distances.csv").open()))
    nd = next(r for r in rows if r["tract_id"] == "38001000100")
    assert nd["facility_id"] == "PH-KS-01"  # ND now borrows Kansas facilities
    assert nd["miles"] != ""


def test_analyze_scenario_file(store_dir, tmp_path):
    scenario_file = tmp_path / "scenarios.json"
    scenario_file.write_text(json.dumps({
        "scenarios": [
            {"name": "weekend", "sets": ["pharm", "dg"], "thresholds": [1, 2, 5]},
        ]
    }))
    out = tmp_path / "reports"
    code = run("analyze", "--store", store_dir, "--scenario", "weekend",
               "--scenario-file", scenario_file, "--out", out)
    assert code == 0
    assert (out / "coverage.csv").read_bytes() == (GOLDEN / "mini_both_coverage.csv").read_bytes()


def test_analyze_scenario_file_unknown_name(store_dir, tmp_path, capsys):
    scenario_file = tmp_path / "scenarios.json"
    scenario_file.write_text(json.dumps([{"name": "a", "sets": ["pharm"]}]))
    code = run("analyze", "--store", store_dir, "--scenario", "b",
               "--scenario-file", scenario_file, "--out", tmp_path / "r")
    assert code == 2
    assert "'b'" in capsys.readouterr().err


def test_example_scenario_file_parses(store_dir, tmp_path):
    out = tmp_path / "reports"
    code = run("analyze", "--store", store_dir, "--scenario", "pharm",
               "--scenario-file", EXAMPLE_SCENARIOS, "--out", out)
    assert code == 0
    assert (out / "coverage.csv").read_bytes() == (GOLDEN / "mini_pharm_coverage.csv").read_bytes()


def test_compare_matches_goldens(store_dir, tmp_path, capsys):
    out = tmp_path / "delta"
    code = run("compare", "--store", store_dir, "--base", "pharm",
               "--augmented", "pharm,dg", "--out", out)
    assert code == 0
    assert (out / "delta.csv").read_bytes() == (GOLDEN / "mini_delta.csv").read_bytes()
    assert (out / "delta.json").read_bytes() == (GOLDEN / "mini_delta.json").read_bytes()
    assert "+11.49pp<1mi" in capsys.readouterr().out


def test_compare_identity_is_zero(store_dir, tmp_path):
    out = tmp_path / "delta"
    assert run("compare", "--store", store_dir, "--base", "pharm",
               "--augmented", "pharm", "--out", out) == 0
    for row in json.loads((out / "delta.json").read_bytes())["rows"]:
        assert all(d in (0.0, None) for d in row["deltas"])


def test_svi_hist_matches_goldens(store_dir, tmp_path, capsys):
    out = tmp_path / "hist"
    code = run("svi-hist", "--store", store_dir, "--sets", "dg", "--out", out)
    assert code == 0
    assert (out / "decile.csv").read_bytes() == (GOLDEN / "mini_dg_decile.csv").read_bytes()
    assert (out / "decile.json").read_bytes() == (GOLDEN / "mini_dg_decile.json").read_bytes()
    assert "matched=1 unmatched=1" in capsys.readouterr().out


def test_svi_hist_pharm(store_dir, tmp_path):
    out = tmp_path / "hist"
    assert run("svi-hist", "--store", store_dir, "--sets", "pharm", "--out", out) == 0
    assert (out / "decile.csv").read_bytes() == (GOLDEN / "mini_pharm_decile.csv").read_bytes()


def test_round_trip_store_equals_direct_fixture(store_dir, mini):
    # store order is id-sorted by dedupe; contents must match the fixture
    by_id = lambda fs: sorted(fs.facilities, key=lambda f: f.id)
    store = load_store(store_dir)
    assert store.tracts == tuple(mini.tracts)
    assert by_id(store.facility_sets["pharm"]) == by_id(mini.sets["pharm"])
    assert by_id(store.facility_sets["dg"]) == by_id(mini.sets["dg"])
