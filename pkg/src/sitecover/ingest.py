"""Readers and writers for tract, facility, SVI, and state-site files.

All sources are delimited UTF-8 text with a required header. Parsing is
row-at-a-time: a bad row is rejected with a stable reason label and
counted, never fatal; a bad header is fatal. Accepted records can be
serialized back to the same format and re-parsed losslessly.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import logging
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Iterator, Optional, Union

from .geo import Coordinate
from .model import (
    STATE_UNIVERSE,
    DemographicCounts,
    Facility,
    FacilityRole,
    FacilitySet,
    GeocodeQuality,
    InvariantViolation,
    NON_RETAIL_ROLES,
    SviPercentile,
    Tract,
)

logger = logging.getLogger(__name__)

Source = Union[str, Path, IO[str], IO[bytes]]

TRACT_COLUMNS = (
    "tract_id", "state", "lat", "lon",
    "adults_total", "households_total", "hh_lt_35k", "hh_gt_100k",
    "pop_total", "pop_white", "pop_black", "pop_aapi", "pop_other",
    "pop_hispanic", "pop_non_hispanic",
)
FACILITY_COLUMNS = ("facility_id", "chain", "state", "lat", "lon", "role", "geocode_quality")
# Optional trailing column holding an explicit containing-tract id.
FACILITY_COLUMNS_WITH_TRACT = FACILITY_COLUMNS + ("tract_id",)
SVI_COLUMNS = ("tract_id", "rpl_themes")
STATE_SITE_COLUMNS = ("site_id", "state", "lat", "lon", "geocode_quality")

SVI_SENTINEL = -999.0


class IngestError(ValueError):
    """Fatal ingestion problem (unreadable source or malformed header)."""


@dataclass(frozen=True)
class IngestReport:
    """Bookkeeping for one parse: reads = accepts + rejects, by reason."""

    records_read: int
    records_accepted: int
    records_rejected_by_reason: dict[str, int] = field(default_factory=dict)
    svi_matched: int = 0
    #: Accepted rows whose geocode quality was "doubt"; kept for
    #: sensitivity checks since that class has no precision bound.
    doubt_accepted: int = 0

    def __post_init__(self) -> None:
        rejected = sum(self.records_rejected_by_reason.values())
        if self.records_read != self.records_accepted + rejected:
            raise InvariantViolation(
                "bookkeeping",
                f"read {self.records_read} != accepted {self.records_accepted} "
                f"+ rejected {rejected}",
            )


class _RowTally:
    """Accumulates accept/reject counts while a parse is in flight."""

    def __init__(self) -> None:
        self.read = 0
        self.accepted = 0
        self.rejected: Counter[str] = Counter()
        self.doubt = 0

    def reject(self, reason: str) -> None:
        self.rejected[reason] += 1

    def report(self, svi_matched: int = 0) -> IngestReport:
        return IngestReport(
            records_read=self.read,
            records_accepted=self.accepted,
            records_rejected_by_reason=dict(self.rejected),
            svi_matched=svi_matched,
            doubt_accepted=self.doubt,
        )


def _open_text(source: Source):
    """Return (text stream, should_close) for a path or open stream."""
    if isinstance(source, (str, Path)):
        return open(source, "r", encoding="utf-8", newline=""), True
    raw = getattr(source, "buffer", None) or source
    if isinstance(raw.read(0), bytes):
        return io.TextIOWrapper(raw, encoding="utf-8", newline=""), False
    return source, False


def _read_rows(source: Source, delimiter: str, header_options) -> tuple[tuple, Iterator[list[str]]]:
    """Validate the header against the allowed column tuples, yield data rows."""
    stream, should_close = _open_text(source)

    def rows():
        try:
            yield from reader
        finally:
            if should_close:
                stream.close()

    reader = csv.reader(stream, delimiter=delimiter)
    try:
        raw_header = next(reader)
    except StopIteration:
        if should_close:
            stream.close()
        raise IngestError("missing header row") from None
    header = tuple(c.strip().lower() for c in raw_header)
    for option in header_options:
        if header == option:
            return option, rows()
    if should_close:
        stream.close()
    raise IngestError(f"unexpected header {list(header)!r}; expected one of {[list(o) for o in header_options]}")


def _parse_coordinate(lat_text: str, lon_text: str) -> Coordinate:
    try:
        lat = float(lat_text)
        lon = float(lon_text)
    except ValueError:
        raise InvariantViolation("malformed", f"bad coordinate text ({lat_text!r}, {lon_text!r})") from None
    try:
        return Coordinate(lat, lon)
    except ValueError as exc:
        raise InvariantViolation("coordinate-range", str(exc)) from None


def _parse_int(text: str, name: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise InvariantViolation("malformed", f"{name} must be an integer, got {text!r}") from None


def _check_state(state: str) -> str:
    state = state.strip().upper()
    if state not in STATE_UNIVERSE:
        raise InvariantViolation("state-unknown", f"unknown state code {state!r}")
    return state


def parse_tracts(source: Source, delimiter: str = ",") -> tuple[list[Tract], IngestReport]:
    """Parse a tract file; invalid rows are rejected with a reason label."""
    _, rows = _read_rows(source, delimiter, (TRACT_COLUMNS,))
    tally = _RowTally()
    tracts: list[Tract] = []
    seen: set[str] = set()
    for row in rows:
        tally.read += 1
        try:
            if len(row) != len(TRACT_COLUMNS):
                raise InvariantViolation("malformed", f"expected {len(TRACT_COLUMNS)} fields, got {len(row)}")
            tract_id = row[0].strip()
            state = _check_state(row[1])
            centroid = _parse_coordinate(row[2], row[3])
            counts = DemographicCounts(*[_parse_int(v, TRACT_COLUMNS[i + 4]) for i, v in enumerate(row[4:])])
            tract = Tract(id=tract_id, state=state, centroid=centroid, counts=counts)
            if tract.id in seen:
                raise InvariantViolation("duplicate-id", f"tract id {tract.id!r} repeated")
        except InvariantViolation as exc:
            tally.reject(exc.reason)
            continue
        seen.add(tract.id)
        tracts.append(tract)
        tally.accepted += 1
    return tracts, tally.report()


def _parse_quality(text: str) -> GeocodeQuality:
    try:
        quality = GeocodeQuality(text.strip().lower())
    except ValueError:
        raise InvariantViolation("malformed", f"unknown geocode quality {text!r}") from None
    if quality is GeocodeQuality.FAILED:
        raise InvariantViolation("geocode-failed", "geocode quality is failed")
    return quality


def _parse_role(text: str) -> FacilityRole:
    try:
        role = FacilityRole(text.strip().lower())
    except ValueError:
        raise InvariantViolation("malformed", f"unknown role {text!r}") from None
    if role in NON_RETAIL_ROLES:
        raise InvariantViolation("non-retail", f"role {role.value} does not serve walk-ins")
    return role


def parse_facilities(
    source: Source,
    chain: Optional[str],
    state_override: Optional[str] = None,
    delimiter: str = ",",
) -> tuple[FacilitySet, IngestReport]:
    """Parse a facility file, keeping retail rows of the requested chain.

    Chain labels are compared case-insensitively after trimming. Rows
    with non-retail roles or failed geocodes are rejected; "doubt"
    geocodes are accepted and counted in the report. `chain=None`
    disables the chain filter and keeps each row's own label, which is
    how already-normalized files are read back.
    """
    header, rows = _read_rows(source, delimiter, (FACILITY_COLUMNS, FACILITY_COLUMNS_WITH_TRACT))
    has_tract = header == FACILITY_COLUMNS_WITH_TRACT
    want_chain = chain.strip().lower() if chain is not None else None
    tally = _RowTally()
    facilities: list[Facility] = []
    seen: set[str] = set()
    for row in rows:
        tally.read += 1
        try:
            if len(row) != len(header):
                raise InvariantViolation("malformed", f"expected {len(header)} fields, got {len(row)}")
            if want_chain is not None and row[1].strip().lower() != want_chain:
                raise InvariantViolation("chain-mismatch", f"chain {row[1]!r} is not {chain!r}")
            role = _parse_role(row[5])
            quality = _parse_quality(row[6])
            state = _check_state(state_override if state_override else row[2])
            coordinate = _parse_coordinate(row[3], row[4])
            tract_id = row[7].strip() or None if has_tract else None
            facility = Facility(
                id=row[0].strip(),
                chain=chain if chain is not None else row[1].strip(),
                state=state, coordinate=coordinate,
                role=role, geocode_quality=quality, tract_id=tract_id,
            )
            if facility.id in seen:
                raise InvariantViolation("duplicate-id", f"facility id {facility.id!r} repeated")
        except InvariantViolation as exc:
            tally.reject(exc.reason)
            continue
        seen.add(facility.id)
        facilities.append(facility)
        tally.accepted += 1
        if quality is GeocodeQuality.DOUBT:
            tally.doubt += 1
    if tally.read and not facilities:
        logger.warning("chain %r matched no rows in facility source", chain)
    set_name = chain if chain is not None else "facilities"
    return FacilitySet(name=set_name, facilities=tuple(facilities)), tally.report()


def parse_state_sites(source: Source, state: str, delimiter: str = ",") -> tuple[FacilitySet, IngestReport]:
    """Parse a state-coordinated site file; all rows are retail by definition."""
    _, rows = _read_rows(source, delimiter, (STATE_SITE_COLUMNS,))
    chain = f"state:{state.strip().upper()}"
    tally = _RowTally()
    facilities: list[Facility] = []
    seen: set[str] = set()
    for row in rows:
        tally.read += 1
        try:
            if len(row) != len(STATE_SITE_COLUMNS):
                raise InvariantViolation("malformed", f"expected {len(STATE_SITE_COLUMNS)} fields, got {len(row)}")
            quality = _parse_quality(row[4])
            site_state = _check_state(row[1])
            coordinate = _parse_coordinate(row[2], row[3])
            facility = Facility(
                id=row[0].strip(), chain=chain, state=site_state, coordinate=coordinate,
                role=FacilityRole.RETAIL, geocode_quality=quality,
            )
            if facility.id in seen:
                raise InvariantViolation("duplicate-id", f"site id {facility.id!r} repeated")
        except InvariantViolation as exc:
            tally.reject(exc.reason)
            continue
        seen.add(facility.id)
        facilities.append(facility)
        tally.accepted += 1
        if quality is GeocodeQuality.DOUBT:
            tally.doubt += 1
    return FacilitySet(name=chain, facilities=tuple(facilities)), tally.report()


def dedupe_coordinates(facility_set: FacilitySet) -> FacilitySet:
    """Keep one facility per exact (lat, lon), the lexicographically smallest id.

    Idempotent and independent of input order; output is sorted by id.
    """
    best: dict[tuple[float, float], Facility] = {}
    for f in facility_set.facilities:
        key = (f.coordinate.lat, f.coordinate.lon)
        cur = best.get(key)
        if cur is None or f.id < cur.id:
            best[key] = f
    kept = tuple(sorted(best.values(), key=lambda f: f.id))
    return FacilitySet(name=facility_set.name, facilities=kept)


def join_svi(tracts: Iterable[Tract], source: Source, delimiter: str = ",") -> tuple[list[Tract], IngestReport]:
    """Attach SVI percentiles to tracts by id.

    Sentinel -999 rows and rows for tracts not in the input are read and
    accepted but match nothing; out-of-range percentiles are rejected.
    """
    _, rows = _read_rows(source, delimiter, (SVI_COLUMNS,))
    tally = _RowTally()
    values: dict[str, SviPercentile] = {}
    seen: set[str] = set()
    by_id = {t.id: t for t in tracts}
    for row in rows:
        tally.read += 1
        try:
            if len(row) != len(SVI_COLUMNS):
                raise InvariantViolation("malformed", f"expected {len(SVI_COLUMNS)} fields, got {len(row)}")
            tract_id = row[0].strip()
            if tract_id in seen:
                raise InvariantViolation("duplicate-id", f"svi row for {tract_id!r} repeated")
            try:
                value = float(row[1])
            except ValueError:
                raise InvariantViolation("malformed", f"bad percentile text {row[1]!r}") from None
            seen.add(tract_id)
            if value != SVI_SENTINEL:
                percentile = SviPercentile(value)  # raises svi-range when outside [0,1]
                if tract_id in by_id:
                    values[tract_id] = percentile
        except InvariantViolation as exc:
            tally.reject(exc.reason)
            continue
        tally.accepted += 1
    joined = [
        dataclasses.replace(t, svi=values[t.id]) if t.id in values else t
        for t in by_id.values()
    ]
    return joined, tally.report(svi_matched=len(values))


def _writer(dest: Union[str, Path, IO[str]]):
    if isinstance(dest, (str, Path)):
        return open(dest, "w", encoding="utf-8", newline=""), True
    return dest, False


def write_tracts(tracts: Iterable[Tract], dest: Union[str, Path, IO[str]]) -> None:
    """Serialize tracts to the tract file format (floats kept lossless)."""
    stream, should_close = _writer(dest)
    try:
        w = csv.writer(stream, lineterminator="\n")
        w.writerow(TRACT_COLUMNS)
        for t in tracts:
            c = t.counts
            w.writerow([
                t.id, t.state, repr(t.centroid.lat), repr(t.centroid.lon),
                c.adults_total, c.households_total, c.households_low_income,
                c.households_high_income, c.pop_total, c.pop_white, c.pop_black,
                c.pop_aapi, c.pop_other, c.pop_hispanic, c.pop_non_hispanic,
            ])
    finally:
        if should_close:
            stream.close()


def write_facilities(facilities: Iterable[Facility], dest: Union[str, Path, IO[str]]) -> None:
    """Serialize facilities; emits the tract_id column iff any row has one."""
    rows = list(facilities)
    with_tract = any(f.tract_id for f in rows)
    header = FACILITY_COLUMNS_WITH_TRACT if with_tract else FACILITY_COLUMNS
    stream, should_close = _writer(dest)
    try:
        w = csv.writer(stream, lineterminator="\n")
        w.writerow(header)
        for f in rows:
            record = [
                f.id, f.chain, f.state, repr(f.coordinate.lat), repr(f.coordinate.lon),
                f.role.value, f.geocode_quality.value,
            ]
            if with_tract:
                record.append(f.tract_id or "")
            w.writerow(record)
    finally:
        if should_close:
            stream.close()


def write_svi(tracts: Iterable[Tract], dest: Union[str, Path, IO[str]]) -> None:
    """Serialize the SVI values carried by tracts (one row per matched tract)."""
    stream, should_close = _writer(dest)
    try:
        w = csv.writer(stream, lineterminator="\n")
        w.writerow(SVI_COLUMNS)
        for t in tracts:
            if t.svi is not None:
                w.writerow([t.id, repr(t.svi.value)])
    finally:
        if should_close:
            stream.close()
