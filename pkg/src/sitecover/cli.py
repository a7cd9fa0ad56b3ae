"""Batch driver: ingest datasets, run analyses, write report files.

Every subcommand exits 0 only when all requested outputs were written.
Fatal problems (unreadable files, unknown sets or groups) are reported
on stderr with the offending name and exit nonzero; per-row data issues
never abort an ingest, they are counted in the printed report.
"""

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from .coverage import (
    UnknownSetError,
    compare_scenarios,
    coverage_table,
    goal_check,
    min_distance_table,
    resolve_scenario,
    stores_per_100k,
    svi_decile_distribution,
)
from .ingest import IngestError, IngestReport, dedupe_coordinates, join_svi, parse_facilities, parse_state_sites, parse_tracts
from .model import DemographicGroup, FacilitySet, InvariantViolation, Scenario
from .report import (
    render_coverage,
    render_decile,
    render_delta,
    render_distances,
    render_goal,
    render_rates,
)
from .store import StoreError, check_set_name, load_store, save_store

STORE_ENV = "SITECOVER_STORE"
EXIT_USAGE = 2


class CliError(Exception):
    """Fatal command error; the message is printed to stderr."""


def _report_line(label: str, report: IngestReport) -> str:
    parts = [
        f"read={report.records_read}",
        f"accepted={report.records_accepted}",
    ]
    rejected = dict(sorted(report.records_rejected_by_reason.items()))
    parts.append(f"rejected={json.dumps(rejected)}")
    if report.svi_matched:
        parts.append(f"svi_matched={report.svi_matched}")
    if report.doubt_accepted:
        parts.append(f"doubt_geocodes={report.doubt_accepted}")
    return f"{label}: " + " ".join(parts)


def _split_assignment(text: str, flag: str) -> tuple[str, str]:
    name, sep, value = text.partition("=")
    if not sep or not name or not value:
        raise CliError(f"{flag} expects NAME=VALUE, got {text!r}")
    return name, value


def _parse_path(path_text: str, what: str) -> Path:
    path = Path(path_text)
    if not path.is_file():
        raise CliError(f"{what} file not found: {path}")
    return path


def cmd_ingest(args: argparse.Namespace) -> int:
    tracts_path = _parse_path(args.tracts, "tract")
    try:
        tracts, tract_report = parse_tracts(tracts_path)
    except IngestError as exc:
        raise CliError(f"{tracts_path}: {exc}") from exc
    print(_report_line("tracts", tract_report))

    svi_matched = 0
    if args.svi:
        svi_path = _parse_path(args.svi, "SVI")
        try:
            tracts, svi_report = join_svi(tracts, svi_path)
        except IngestError as exc:
            raise CliError(f"{svi_path}: {exc}") from exc
        svi_matched = svi_report.svi_matched
        print(_report_line("svi", svi_report))

    facility_sets: dict[str, FacilitySet] = {}
    for assignment in args.facilities or ():
        chain, path_text = _split_assignment(assignment, "--facilities")
        name = chain.strip().lower()
        try:
            check_set_name(name)
        except StoreError as exc:
            raise CliError(str(exc)) from exc
        if name in facility_sets:
            raise CliError(f"facility set {name!r} given twice")
        path = _parse_path(path_text, f"facility set {name!r}")
        try:
            parsed, report = parse_facilities(path, chain=chain.strip())
        except IngestError as exc:
            raise CliError(f"{path}: {exc}") from exc
        deduped = dedupe_coordinates(parsed)
        facility_sets[name] = FacilitySet(name=name, facilities=deduped.facilities)
        print(_report_line(f"facilities[{name}]", report))

    state_sites: list = []
    for assignment in args.state_sites or ():
        state, path_text = _split_assignment(assignment, "--state-sites")
        path = _parse_path(path_text, f"state sites for {state}")
        try:
            parsed, report = parse_state_sites(path, state.strip())
        except (IngestError, InvariantViolation) as exc:
            raise CliError(f"{path}: {exc}") from exc
        state_sites.extend(parsed.facilities)
        print(_report_line(f"state-sites[{state.strip().upper()}]", report))
    if state_sites:
        merged = dedupe_coordinates(FacilitySet(name="state", facilities=tuple(state_sites)))
        facility_sets["state"] = FacilitySet(name="state", facilities=merged.facilities)

    digest = save_store(args.out, tracts, facility_sets, svi_matched)
    print(f"store written to {args.out} ({len(facility_sets)} facility sets, digest {digest[:12]})")
    return 0


def _store_path(args: argparse.Namespace) -> str:
    if args.store:
        return args.store
    from_env = os.environ.get(STORE_ENV)
    if from_env:
        return from_env
    raise CliError(f"no store given: pass --store or set {STORE_ENV}")


def _load(args: argparse.Namespace):
    try:
        return load_store(_store_path(args))
    except StoreError as exc:
        raise CliError(str(exc)) from exc


def _parse_groups(text: Optional[str]) -> tuple[DemographicGroup, ...]:
    if not text:
        return tuple(DemographicGroup)
    groups = []
    for raw in text.split(","):
        name = raw.strip()
        try:
            groups.append(DemographicGroup(name))
        except ValueError:
            known = ", ".join(g.value for g in DemographicGroup)
            raise CliError(f"unknown group {name!r} (known: {known})") from None
    return tuple(groups)


def _parse_thresholds(text: Optional[str]) -> Optional[tuple[float, ...]]:
    if text is None:
        return None
    try:
        return tuple(float(part) for part in text.split(","))
    except ValueError:
        raise CliError(f"--thresholds expects comma-separated numbers, got {text!r}") from None


def _parse_cross_state(pairs: Optional[Sequence[str]]) -> dict[str, frozenset]:
    mapping: dict[str, frozenset] = {}
    for text in pairs or ():
        state, value = _split_assignment(text, "--cross-state")
        extra = frozenset(s.strip().upper() for s in value.split(",") if s.strip())
        key = state.strip().upper()
        mapping[key] = mapping.get(key, frozenset()) | extra
    return mapping


def _scenario_from_file(path_text: str, name: str) -> dict:
    path = _parse_path(path_text, "scenario")
    try:
        entries = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise CliError(f"{path}: invalid JSON: {exc}") from exc
    if isinstance(entries, dict):
        entries = entries.get("scenarios", [])
    by_name = {e.get("name"): e for e in entries if isinstance(e, dict)}
    if name not in by_name:
        known = ", ".join(sorted(k for k in by_name if k))
        raise CliError(f"scenario {name!r} not found in {path} (known: {known})")
    return by_name[name]


def _build_scenario(args: argparse.Namespace) -> Scenario:
    entry: dict = {}
    if args.scenario_file:
        if not args.scenario:
            raise CliError("--scenario-file requires --scenario NAME")
        entry = _scenario_from_file(args.scenario_file, args.scenario)

    sets = [s.strip() for s in args.sets.split(",")] if args.sets else list(entry.get("sets", ()))
    if not sets or not all(sets):
        raise CliError("no facility sets requested: pass --sets or a scenario file entry")
    region = args.region if args.region is not None else entry.get("region", "all")
    thresholds = _parse_thresholds(args.thresholds)
    if thresholds is None:
        thresholds = tuple(entry.get("thresholds", (1.0, 2.0, 5.0)))
    cross_state = _parse_cross_state(args.cross_state)
    if not cross_state:
        cross_state = {k: frozenset(v) for k, v in entry.get("cross_state", {}).items()}
    name = args.scenario or "+".join(sets)
    try:
        return Scenario(name=name, sets=tuple(sets), region=region,
                        cross_state=cross_state, thresholds=thresholds)
    except InvariantViolation as exc:
        raise CliError(str(exc)) from exc


def _write(out_dir: Path, name: str, payload: bytes) -> None:
    (out_dir / name).write_bytes(payload)


def _goal_line(check) -> str:
    verdict = "met" if check.met else "NOT met"
    share = "n/a" if check.share is None else f"{check.share:.2f}%"
    return (
        f"goal: {check.group.value} within {check.threshold:g} mi = {share} "
        f"(target {check.target:g}%) {verdict}"
    )


def cmd_analyze(args: argparse.Namespace) -> int:
    store = _load(args)
    scenario = _build_scenario(args)
    groups = _parse_groups(args.groups)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    try:
        distances = min_distance_table(store.tracts, scenario, store.facility_sets, workers=args.workers)
        union = resolve_scenario(scenario, store.facility_sets)
    except UnknownSetError as exc:
        raise CliError(str(exc)) from exc
    table = coverage_table(distances, store.tracts, groups, scenario.thresholds)
    check = goal_check(distances, store.tracts)
    rates = stores_per_100k(union, store.tracts)

    _write(out_dir, "coverage.csv", render_coverage(table, "csv", args.decimals))
    _write(out_dir, "coverage.json", render_coverage(table, "json", args.decimals))
    _write(out_dir, "distances.csv", render_distances(distances))
    _write(out_dir, "goal.json", render_goal(check, "json", args.decimals))
    _write(out_dir, "rates.csv", render_rates(rates, "csv", args.decimals))
    print(f"scenario {scenario.name!r}: {len(distances.entries)} tracts, "
          f"{distances.facility_count} facilities, reports in {out_dir}")
    print(_goal_line(check))
    return 0


def cmd_compare(args: argparse.Namespace) -> int:
    store = _load(args)
    thresholds = _parse_thresholds(args.thresholds) or (1.0, 2.0, 5.0)
    cross_state = _parse_cross_state(args.cross_state)
    region = args.region if args.region is not None else "all"
    groups = _parse_groups(args.groups)

    def scenario_for(sets_text: str) -> Scenario:
        sets = tuple(s.strip() for s in sets_text.split(","))
        try:
            return Scenario(name="+".join(sets), sets=sets, region=region,
                            cross_state=cross_state, thresholds=thresholds)
        except InvariantViolation as exc:
            raise CliError(str(exc)) from exc

    base_scenario = scenario_for(args.base)
    augmented_scenario = scenario_for(args.augmented)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    try:
        base = min_distance_table(store.tracts, base_scenario, store.facility_sets, workers=args.workers)
        augmented = min_distance_table(store.tracts, augmented_scenario, store.facility_sets, workers=args.workers)
    except UnknownSetError as exc:
        raise CliError(str(exc)) from exc
    delta = compare_scenarios(base, augmented, store.tracts, groups, thresholds)

    _write(out_dir, "delta.csv", render_delta(delta, "csv", args.decimals))
    _write(out_dir, "delta.json", render_delta(delta, "json", args.decimals))
    national = next((r for r in delta.rows if r.group is DemographicGroup.ALL_ADULTS), delta.rows[0] if delta.rows else None)
    if national is not None:
        gains = ", ".join(
            f"+{d:.2f}pp<{t:g}mi" if d is not None else f"n/a<{t:g}mi"
            for t, d in zip(delta.thresholds, national.deltas)
        )
        print(f"compare {args.base!r} -> {args.augmented!r} ({national.group.value}): {gains}")
    print(f"delta reports in {out_dir}")
    return 0


def cmd_svi_hist(args: argparse.Namespace) -> int:
    store = _load(args)
    sets = tuple(s.strip() for s in args.sets.split(","))
    scenario = Scenario(name="+".join(sets), sets=sets)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    try:
        union = resolve_scenario(scenario, store.facility_sets)
    except UnknownSetError as exc:
        raise CliError(str(exc)) from exc
    histogram = svi_decile_distribution(union, store.tracts)

    _write(out_dir, "decile.csv", render_decile(histogram, "csv", args.decimals))
    _write(out_dir, "decile.json", render_decile(histogram, "json", args.decimals))
    print(f"svi-hist over {'+'.join(sets)}: matched={histogram.matched_total} "
          f"unmatched={histogram.unmatched}, reports in {out_dir}")
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(_store_path(args))
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def _add_store_flag(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--store", default=None,
                        help=f"store directory (default: ${STORE_ENV})")


def _add_scenario_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--region", default=None, help="all, conus, or comma-separated states")
    parser.add_argument("--thresholds", default=None, help="comma-separated miles, e.g. 1,2,5")
    parser.add_argument("--cross-state", action="append", default=None, metavar="STATE=ST1,ST2",
                        help="let STATE borrow facilities from the listed states")
    parser.add_argument("--groups", default=None, help="comma-separated demographic groups")
    parser.add_argument("--workers", type=int, default=1, help="parallel tree-query workers")
    parser.add_argument("--decimals", type=int, default=2, help="report rounding (default 2)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sitecover",
        description="Facility proximity coverage analysis over census tracts.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate raw files and write a dataset store")
    p.add_argument("--tracts", required=True, help="tract demographics CSV")
    p.add_argument("--svi", default=None, help="SVI percentile CSV")
    p.add_argument("--facilities", action="append", metavar="CHAIN=PATH",
                   help="facility CSV for one chain (repeatable)")
    p.add_argument("--state-sites", action="append", metavar="STATE=PATH",
                   help="state-run site CSV (repeatable, merged into set 'state')")
    p.add_argument("--out", required=True, help="store directory to write")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("analyze", help="coverage shares for one scenario")
    _add_store_flag(p)
    p.add_argument("--scenario", default=None, help="scenario name")
    p.add_argument("--scenario-file", default=None, help="JSON file of named scenarios")
    p.add_argument("--sets", default=None, help="comma-separated facility set names")
    _add_scenario_flags(p)
    p.add_argument("--out", required=True, help="report directory to write")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("compare", help="share deltas between two scenarios")
    _add_store_flag(p)
    p.add_argument("--base", required=True, help="comma-separated base sets")
    p.add_argument("--augmented", required=True, help="comma-separated augmented sets")
    _add_scenario_flags(p)
    p.add_argument("--out", required=True, help="report directory to write")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("svi-hist", help="facility distribution across SVI deciles")
    _add_store_flag(p)
    p.add_argument("--sets", required=True, help="comma-separated facility set names")
    p.add_argument("--decimals", type=int, default=2)
    p.add_argument("--out", required=True, help="report directory to write")
    p.set_defaults(func=cmd_svi_hist)

    p = sub.add_parser("serve", help="run the HTTP analysis service")
    _add_store_flag(p)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
