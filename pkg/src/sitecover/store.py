"""Dataset store: a directory of normalized CSV files plus a manifest.

`save_store` writes the validated datasets exactly as the ingest writers
serialize them and records a sha256 over every file's bytes in
manifest.json. `load_store` verifies those hashes before parsing, so a
loaded store is guaranteed to be the one that was written. The digest of
the manifest itself doubles as a reproducibility token: any two runs
over stores with equal digests operate on byte-identical data.
"""

import hashlib
import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Union

from .ingest import (
    IngestReport,
    join_svi,
    parse_facilities,
    parse_tracts,
    write_facilities,
    write_svi,
    write_tracts,
)
from .model import FacilitySet, Tract

MANIFEST_NAME = "manifest.json"
STORE_VERSION = 1

_SET_NAME = re.compile(r"^[a-z0-9][a-z0-9_-]{0,63}$")


class StoreError(ValueError):
    """A store directory is missing, incomplete, or fails verification."""


@dataclass(frozen=True)
class Store:
    """A loaded, verified dataset store."""

    tracts: tuple[Tract, ...]
    facility_sets: Mapping[str, FacilitySet]
    svi_matched: int
    digest: str

    def set_counts(self) -> dict[str, int]:
        return {name: len(fs.facilities) for name, fs in sorted(self.facility_sets.items())}


def check_set_name(name: str) -> str:
    """Validate a facility-set name for use as a store file stem."""
    if not _SET_NAME.match(name):
        raise StoreError(
            f"invalid facility-set name {name!r}: use lowercase letters, digits, '_' or '-'"
        )
    return name


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def save_store(
    directory: Union[str, Path],
    tracts: list[Tract],
    facility_sets: Mapping[str, FacilitySet],
    svi_matched: int,
) -> str:
    """Write a store directory and return the manifest digest."""
    root = Path(directory)
    root.mkdir(parents=True, exist_ok=True)

    write_tracts(tracts, root / "tracts.csv")
    write_svi(tracts, root / "svi.csv")

    sets_entry = {}
    for name in sorted(facility_sets):
        check_set_name(name)
        path = root / f"set_{name}.csv"
        write_facilities(facility_sets[name].facilities, path)
        sets_entry[name] = {
            "path": path.name,
            "sha256": _sha256(path),
            "count": len(facility_sets[name].facilities),
        }

    manifest = {
        "version": STORE_VERSION,
        "tracts": {
            "path": "tracts.csv",
            "sha256": _sha256(root / "tracts.csv"),
            "count": len(tracts),
        },
        "svi": {
            "path": "svi.csv",
            "sha256": _sha256(root / "svi.csv"),
            "matched": svi_matched,
        },
        "facility_sets": sets_entry,
    }
    payload = (json.dumps(manifest, indent=2, sort_keys=True) + "\n").encode("utf-8")
    (root / MANIFEST_NAME).write_bytes(payload)
    return hashlib.sha256(payload).hexdigest()


def _verified_path(root: Path, entry: dict, what: str) -> Path:
    path = root / entry["path"]
    if not path.is_file():
        raise StoreError(f"store is missing {what} file {path}")
    actual = _sha256(path)
    if actual != entry["sha256"]:
        raise StoreError(f"checksum mismatch for {path}: store was modified after ingest")
    return path


def _strict(report: IngestReport, path: Path) -> None:
    if report.records_accepted != report.records_read:
        raise StoreError(f"normalized file {path} contains invalid rows: {dict(report.records_rejected_by_reason)}")


def load_store(directory: Union[str, Path]) -> Store:
    """Load and verify a store directory written by `save_store`."""
    root = Path(directory)
    manifest_path = root / MANIFEST_NAME
    if not manifest_path.is_file():
        raise StoreError(f"no store manifest at {manifest_path}")
    payload = manifest_path.read_bytes()
    try:
        manifest = json.loads(payload)
    except json.JSONDecodeError as exc:
        raise StoreError(f"unreadable store manifest {manifest_path}: {exc}") from exc
    if manifest.get("version") != STORE_VERSION:
        raise StoreError(
            f"unsupported store version {manifest.get('version')!r} in {manifest_path}"
        )

    tracts_path = _verified_path(root, manifest["tracts"], "tract")
    raw_tracts, report = parse_tracts(tracts_path)
    _strict(report, tracts_path)
    if len(raw_tracts) != manifest["tracts"]["count"]:
        raise StoreError(f"tract count mismatch in {tracts_path}")

    svi_path = _verified_path(root, manifest["svi"], "SVI")
    tracts, svi_report = join_svi(raw_tracts, svi_path)
    _strict(svi_report, svi_path)
    if svi_report.svi_matched != manifest["svi"]["matched"]:
        raise StoreError(f"SVI match count mismatch in {svi_path}")

    facility_sets = {}
    for name, entry in manifest["facility_sets"].items():
        check_set_name(name)
        path = _verified_path(root, entry, f"facility set {name!r}")
        parsed, set_report = parse_facilities(path, chain=None)
        _strict(set_report, path)
        if len(parsed.facilities) != entry["count"]:
            raise StoreError(f"facility count mismatch in {path}")
        facility_sets[name] = FacilitySet(name=name, facilities=parsed.facilities)

    return Store(
        tracts=tuple(tracts),
        facility_sets=facility_sets,
        svi_matched=manifest["svi"]["matched"],
        digest=hashlib.sha256(payload).hexdigest(),
    )
