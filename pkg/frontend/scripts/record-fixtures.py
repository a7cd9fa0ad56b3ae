"""Regenerate the recorded service responses the contract tests replay.

Run from the repository root with the Python package installed:

    python3 frontend/scripts/record-fixtures.py

Each fixture holds the exact body bytes the service produced for one
request, so the tests exercise the client and views against real wire
payloads rather than hand-written approximations. Error fixtures carry
the HTTP status in the filename.
"""

import csv
import sys
import tempfile
from pathlib import Path

from fastapi.testclient import TestClient

from sitecover.cli import main as cli_main
from sitecover.service import create_app

REPO = Path(__file__).resolve().parents[2]
MINI = REPO / "tests" / "data" / "mini"
OUT = REPO / "frontend" / "tests" / "fixtures"

TRACT_HEADER = [
    "tract_id", "state", "lat", "lon", "adults_total", "households_total",
    "hh_lt_35k", "hh_gt_100k", "pop_total", "pop_white", "pop_black",
    "pop_aapi", "pop_other", "pop_hispanic", "pop_non_hispanic",
]
FACILITY_HEADER = ["facility_id", "chain", "state", "lat", "lon", "role", "geocode_quality"]


def write_csv(path: Path, header, rows) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def ingest(out: Path, tracts: Path, svi, facilities) -> None:
    args = ["ingest", "--tracts", str(tracts), "--out", str(out)]
    if svi is not None:
        args += ["--svi", str(svi)]
    for name, path in facilities:
        args += ["--facilities", f"{name}={path}"]
    code = cli_main(args)
    if code != 0:
        raise SystemExit(f"ingest failed with exit code {code}")


def build_uniform_store(root: Path) -> Path:
    """Ten KS tracts, one per SVI decile, one facility pinned to each.

    Also an AL tract with no SVI row and a facility set there, so the
    histogram's zero-matched case comes from a real response.
    """
    tracts = [
        [f"200010001{k:02d}", "KS", 39.0 + 0.01 * k, -98.0, 100, 50, 20, 10,
         100, 40, 30, 20, 10, 20, 80]
        for k in range(10)
    ]
    tracts.append(["01001000100", "AL", 33.0, -87.0, 100, 50, 20, 10, 100, 40, 30, 20, 10, 20, 80])
    svi = [[f"200010001{k:02d}", 0.05 + 0.1 * k] for k in range(10)]
    even = [
        [f"EV-{k:02d}", "even", "KS", 39.0 + 0.01 * k, -98.0, "retail", "success", f"200010001{k:02d}"]
        for k in range(10)
    ]
    nosvi = [
        ["NS-00", "nosvi", "AL", 33.0, -87.0, "retail", "success"],
        ["NS-01", "nosvi", "AL", 33.1, -87.0, "retail", "success"],
    ]
    write_csv(root / "tracts.csv", TRACT_HEADER, tracts)
    write_csv(root / "svi.csv", ["tract_id", "rpl_themes"], svi)
    write_csv(root / "even.csv", FACILITY_HEADER + ["tract_id"], even)
    write_csv(root / "nosvi.csv", FACILITY_HEADER, nosvi)
    store = root / "store"
    ingest(store, root / "tracts.csv", root / "svi.csv",
           [("even", root / "even.csv"), ("nosvi", root / "nosvi.csv")])
    return store


def record(client: TestClient, name: str, method: str, path: str, body=None, status: int = 200) -> None:
    if method == "GET":
        r = client.get(path)
    else:
        r = client.post(path, json=body)
    if r.status_code != status:
        raise SystemExit(f"{name}: expected {status}, got {r.status_code}: {r.text}")
    (OUT / name).write_bytes(r.content)
    print(f"wrote {name} ({len(r.content)} bytes)")


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    with tempfile.TemporaryDirectory() as tmp:
        root = Path(tmp)
        mini_store = root / "mini_store"
        ingest(mini_store, MINI / "tracts.csv", MINI / "svi.csv",
               [("pharm", MINI / "pharm.csv"), ("dg", MINI / "dg.csv")])

        with TestClient(create_app(str(mini_store))) as c:
            record(c, "sets.json", "GET", "/sets")
            record(c, "meta.json", "GET", "/meta")
            record(c, "analyze_pharm.json", "POST", "/analyze", {"sets": ["pharm"]})
            record(c, "analyze_pharm_dg.json", "POST", "/analyze", {"sets": ["pharm", "dg"]})
            record(c, "compare_pharm_vs_pharm_dg.json", "POST", "/compare",
                   {"base": ["pharm"], "augmented": ["pharm", "dg"]})
            record(c, "hist_dg.json", "POST", "/svi-hist", {"sets": ["dg"]})
            record(c, "error_unknown_set_404.json", "POST", "/analyze",
                   {"sets": ["ghost"]}, status=404)
            record(c, "error_empty_sets_400.json", "POST", "/analyze",
                   {"sets": []}, status=400)

        uniform_store = build_uniform_store(root)
        with TestClient(create_app(str(uniform_store))) as c:
            record(c, "hist_uniform.json", "POST", "/svi-hist", {"sets": ["even"]})
            record(c, "hist_unmatched.json", "POST", "/svi-hist", {"sets": ["nosvi"]})
            # every tract has a facility at its centroid, so the 90% goal holds
            record(c, "analyze_goal_met.json", "POST", "/analyze", {"sets": ["even", "nosvi"]})


if __name__ == "__main__":
    sys.exit(main())
