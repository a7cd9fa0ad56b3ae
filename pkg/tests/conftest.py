"""Shared fixtures: the small five-tract dataset used across suites."""

from pathlib import Path
from types import SimpleNamespace

import pytest

from sitecover.ingest import join_svi, parse_facilities, parse_tracts

DATA_DIR = Path(__file__).parent / "data"
MINI_DIR = DATA_DIR / "mini"


@pytest.fixture(scope="session")
def mini():
    tracts, tract_report = parse_tracts(MINI_DIR / "tracts.csv")
    tracts, svi_report = join_svi(tracts, MINI_DIR / "svi.csv")
    pharm, pharm_report = parse_facilities(MINI_DIR / "pharm.csv", chain="pharm")
    dg, dg_report = parse_facilities(MINI_DIR / "dg.csv", chain="dg")
    return SimpleNamespace(
        tracts=tracts,
        sets={"pharm": pharm, "dg": dg},
        reports=SimpleNamespace(
            tracts=tract_report, svi=svi_report, pharm=pharm_report, dg=dg_report
        ),
    )
