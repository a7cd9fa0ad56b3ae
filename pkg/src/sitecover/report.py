"""Render coverage tables, histograms, rates, and deltas as CSV or JSON.

Rendering is pure and byte-deterministic: fixed column orders, LF line
endings, UTF-8, and round-half-to-even at a caller-chosen number of
decimals. The JSON payload builders are shared with the HTTP service so
both wire formats carry identical numbers.
"""

from __future__ import annotations

import csv
import io
import json
from typing import Optional, Sequence

from .coverage import (
    CoverageTable,
    DecileHistogram,
    DistanceTable,
    GoalCheck,
    ScenarioDelta,
    StateRate,
)


def _rounded(value: Optional[float], decimals: int) -> Optional[float]:
    """Round-half-to-even via decimal string formatting; None passes through."""
    if value is None:
        return None
    r = float(f"{value:.{decimals}f}")
    return 0.0 if r == 0.0 else r  # never emit -0.0


def _cell(value: Optional[float], decimals: int) -> str:
    """CSV cell for the same rounded number the JSON payload carries."""
    r = _rounded(value, decimals)
    if r is None:
        return ""
    text = f"{r:.{decimals}f}".rstrip("0").rstrip(".")
    return text or "0"


def _threshold_label(t: float) -> str:
    return f"{t:g}"


def _json_bytes(payload: dict) -> bytes:
    return (json.dumps(payload, indent=2, allow_nan=False) + "\n").encode("utf-8")


def _csv_buffer():
    buf = io.StringIO()
    return buf, csv.writer(buf, lineterminator="\n")


def coverage_payload(table: CoverageTable, decimals: int = 2) -> dict:
    return {
        "scenario": table.scenario_name,
        "thresholds": list(table.thresholds),
        "rows": [
            {
                "group": row.group.value,
                "scope": row.scope,
                "shares": [_rounded(s, decimals) for s in row.shares],
                "weighted_total": row.weighted_total,
            }
            for row in table.rows
        ],
    }


def render_coverage(table: CoverageTable, format: str = "csv", decimals: int = 2) -> bytes:
    """Coverage rows: national first, then states ascending; fixed columns."""
    if format == "json":
        return _json_bytes(coverage_payload(table, decimals))
    buf, w = _csv_buffer()
    w.writerow(
        ["group", "scope"]
        + [f"share_lt_{_threshold_label(t)}mi" for t in table.thresholds]
        + ["weighted_total"]
    )
    for row in table.rows:
        w.writerow(
            [row.group.value, row.scope]
            + [_cell(s, decimals) for s in row.shares]
            + [row.weighted_total]
        )
    return buf.getvalue().encode("utf-8")


def decile_payload(h: DecileHistogram, decimals: int = 2) -> dict:
    return {
        "bins": [
            {"bin": k + 1, "count": h.counts[k], "share": _rounded(h.shares[k], decimals)}
            for k in range(10)
        ],
        "matched_total": h.matched_total,
        "unmatched": h.unmatched,
    }


def render_decile(h: DecileHistogram, format: str = "csv", decimals: int = 2) -> bytes:
    """Ten decile rows plus a trailing unmatched-count row."""
    if format == "json":
        return _json_bytes(decile_payload(h, decimals))
    buf, w = _csv_buffer()
    w.writerow(["bin", "count", "share"])
    for k in range(10):
        w.writerow([k + 1, h.counts[k], _cell(h.shares[k], decimals)])
    w.writerow(["unmatched", h.unmatched, ""])
    return buf.getvalue().encode("utf-8")


def delta_payload(delta: ScenarioDelta, decimals: int = 2) -> dict:
    return {
        "base": delta.base_name,
        "augmented": delta.augmented_name,
        "thresholds": list(delta.thresholds),
        "rows": [
            {
                "group": row.group.value,
                "base_shares": [_rounded(s, decimals) for s in row.base_shares],
                "augmented_shares": [_rounded(s, decimals) for s in row.augmented_shares],
                "deltas": [_rounded(s, decimals) for s in row.deltas],
            }
            for row in delta.rows
        ],
    }


def render_delta(delta: ScenarioDelta, format: str = "csv", decimals: int = 2) -> bytes:
    """Long-format rows: one line per (group, threshold)."""
    if format == "json":
        return _json_bytes(delta_payload(delta, decimals))
    buf, w = _csv_buffer()
    w.writerow(["group", "threshold", "base_share", "augmented_share", "delta"])
    for row in delta.rows:
        for k, t in enumerate(delta.thresholds):
            w.writerow([
                row.group.value,
                _threshold_label(t),
                _cell(row.base_shares[k], decimals),
                _cell(row.augmented_shares[k], decimals),
                _cell(row.deltas[k], decimals),
            ])
    return buf.getvalue().encode("utf-8")


def rates_payload(rows: Sequence[StateRate], decimals: int = 2) -> dict:
    return {
        "rows": [
            {"state": r.state, "count": r.count, "per_100k": _rounded(r.per_100k, decimals)}
            for r in rows
        ]
    }


def render_rates(rows: Sequence[StateRate], format: str = "csv", decimals: int = 2) -> bytes:
    if format == "json":
        return _json_bytes(rates_payload(rows, decimals))
    buf, w = _csv_buffer()
    w.writerow(["state", "count", "per_100k"])
    for r in rows:
        w.writerow([r.state, r.count, _cell(r.per_100k, decimals)])
    return buf.getvalue().encode("utf-8")


def goal_payload(check: GoalCheck, decimals: int = 2) -> dict:
    return {
        "group": check.group.value,
        "threshold": check.threshold,
        "target": check.target,
        "share": _rounded(check.share, decimals),
        "met": check.met,
    }


def render_goal(check: GoalCheck, format: str = "json", decimals: int = 2) -> bytes:
    if format == "json":
        return _json_bytes(goal_payload(check, decimals))
    buf, w = _csv_buffer()
    w.writerow(["group", "threshold", "target", "share", "met"])
    w.writerow([
        check.group.value, _threshold_label(check.threshold), _threshold_label(check.target),
        _cell(check.share, decimals), str(check.met).lower(),
    ])
    return buf.getvalue().encode("utf-8")


def render_distances(table: DistanceTable, format: str = "csv") -> bytes:
    """Full-precision per-tract dump (miles as shortest round-trip text)."""
    buf, w = _csv_buffer()
    w.writerow(["tract_id", "facility_id", "miles"])
    for tract_id, hit in table.entries.items():
        if hit is None:
            w.writerow([tract_id, "", ""])
        else:
            w.writerow([tract_id, hit[0], repr(hit[1])])
    return buf.getvalue().encode("utf-8")
