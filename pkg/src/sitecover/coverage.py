"""The metric suite: minimum distances, weighted shares, deciles, deltas.

Aggregation is exact: weights are summed as 64-bit integers and every
share is one float division at the end, so results are bit-identical
regardless of chunking or worker count.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .geo import unit_vectors
from .index import FacilityIndex, Hit, build_index, nearest_many
from .model import (
    DemographicGroup,
    Facility,
    FacilitySet,
    Scenario,
    Tract,
    group_weight,
    in_region,
)

ALL_GROUPS = tuple(DemographicGroup)

NATIONAL_SCOPE = "US"

#: Decile bin k covers [ (k-1)/10, k/10 ), except bin 10 is closed at 1.0.
_DECILE_BOUNDS = np.array([0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9])


class UnknownSetError(ValueError):
    """A scenario referenced a facility set that is not loaded."""

    def __init__(self, name: str, available: Iterable[str]):
        super().__init__(
            f"unknown facility set {name!r}; available: {sorted(available)}"
        )
        self.set_name = name


@dataclass(frozen=True)
class DistanceTable:
    """Per-tract nearest-facility hits for one scenario.

    ``entries`` maps tract id to (facility id, miles), or None when no
    eligible facility exists; every in-region input tract has an entry.
    """

    entries: Mapping[str, Optional[Hit]]
    scenario_name: str
    facility_count: int


@dataclass(frozen=True)
class CoverageRow:
    group: DemographicGroup
    scope: str
    shares: tuple[Optional[float], ...]  # percent in [0,100], or None for zero weight
    weighted_total: int


@dataclass(frozen=True)
class CoverageTable:
    scenario_name: str
    thresholds: tuple[float, ...]
    rows: tuple[CoverageRow, ...]

    def row(self, group: DemographicGroup, scope: str = NATIONAL_SCOPE) -> CoverageRow:
        for r in self.rows:
            if r.group is DemographicGroup(group) and r.scope == scope:
                return r
        raise KeyError((group, scope))


@dataclass(frozen=True)
class DecileHistogram:
    """Facility counts and percentage shares by SVI decile bin (1..10)."""

    counts: tuple[int, ...]
    shares: tuple[float, ...]
    matched_total: int
    unmatched: int


@dataclass(frozen=True)
class DeltaRow:
    group: DemographicGroup
    base_shares: tuple[Optional[float], ...]
    augmented_shares: tuple[Optional[float], ...]
    deltas: tuple[Optional[float], ...]


@dataclass(frozen=True)
class ScenarioDelta:
    base_name: str
    augmented_name: str
    thresholds: tuple[float, ...]
    rows: tuple[DeltaRow, ...]
    #: tract id -> (base miles, augmented miles, augmented - base); None
    #: slots where the corresponding distance is absent.
    distance_deltas: Mapping[str, tuple[Optional[float], Optional[float], Optional[float]]]


@dataclass(frozen=True)
class GoalCheck:
    group: DemographicGroup
    threshold: float
    target: float
    share: Optional[float]
    met: bool


@dataclass(frozen=True)
class StateRate:
    state: str
    count: int
    per_100k: Optional[float]


def resolve_scenario(scenario: Scenario, sets: Mapping[str, FacilitySet]) -> FacilitySet:
    """Union the scenario's facility sets, independent of declaration order.

    Sets are merged in sorted-name order so that scenarios naming the
    same sets in any order resolve to the same facilities; on a
    cross-set facility id collision the alphabetically earliest set
    wins. Order independence is what allows caching per set union.
    """
    for name in scenario.sets:
        if name not in sets:
            raise UnknownSetError(name, sets.keys())
    facilities: list[Facility] = []
    seen: set[str] = set()
    for name in sorted(set(scenario.sets)):
        for f in sets[name].facilities:
            if f.id not in seen:
                seen.add(f.id)
                facilities.append(f)
    return FacilitySet(name=scenario.name, facilities=tuple(facilities))


def tract_vectors(tracts: Sequence[Tract]) -> np.ndarray:
    """Canonical one-pass unit-sphere embedding of tract centroids."""
    lats = np.array([t.centroid.lat for t in tracts], dtype=np.float64)
    lons = np.array([t.centroid.lon for t in tracts], dtype=np.float64)
    return unit_vectors(lats, lons)


def min_distance_table(
    tracts: Sequence[Tract],
    scenario: Scenario,
    sets: Mapping[str, FacilitySet],
    index: Optional[FacilityIndex] = None,
    workers: int = 1,
) -> DistanceTable:
    """Distance from each in-region tract to its nearest eligible facility.

    Eligible means: in the union of the scenario's sets and located in
    the tract's own state, or in the scenario's expanded state set for
    cross-state exempt states. ``index`` may supply a prebuilt structure
    for the same union; ``workers`` only parallelizes tree queries.
    """
    resolved = resolve_scenario(scenario, sets)
    if index is None:
        index = build_index(resolved)
    scoped = [t for t in tracts if in_region(t, scenario.region)]
    vectors = tract_vectors(scoped)

    groups: dict[frozenset, list[int]] = {}
    for row, t in enumerate(scoped):
        groups.setdefault(scenario.query_states(t.state), []).append(row)

    entries: dict[str, Optional[Hit]] = {t.id: None for t in scoped}
    if len(entries) != len(scoped):
        raise ValueError("duplicate tract ids in input")
    for states, rows in groups.items():
        hits = nearest_many(index, vectors[rows], states, workers=workers)
        for row, hit in zip(rows, hits):
            entries[scoped[row].id] = hit
    return DistanceTable(
        entries=entries, scenario_name=scenario.name, facility_count=len(resolved)
    )


def _share_row(
    weights: np.ndarray, miles: np.ndarray, thresholds: Sequence[float]
) -> tuple[tuple[Optional[float], ...], int]:
    """Weighted strictly-below-threshold shares; absent distance = NaN."""
    total = int(weights.sum())
    if total == 0:
        return tuple(None for _ in thresholds), 0
    shares = []
    for t in thresholds:
        covered = int(weights[np.nan_to_num(miles, nan=np.inf) < t].sum())
        shares.append(100.0 * covered / total)
    return tuple(shares), total


def _weights_and_miles(
    table: DistanceTable, tracts: Sequence[Tract], group: DemographicGroup, scope: str
) -> tuple[np.ndarray, np.ndarray]:
    weights = []
    miles = []
    for t in tracts:
        if t.id not in table.entries:
            continue  # outside the scenario region
        if scope != NATIONAL_SCOPE and t.state != scope:
            continue
        hit = table.entries[t.id]
        weights.append(group_weight(t, group))
        miles.append(np.nan if hit is None else hit[1])
    return np.array(weights, dtype=np.int64), np.array(miles, dtype=np.float64)


def threshold_share(
    table: DistanceTable,
    tracts: Sequence[Tract],
    group: DemographicGroup,
    thresholds: Sequence[float] = (1.0, 2.0, 5.0),
    scope: str = NATIONAL_SCOPE,
) -> CoverageRow:
    """One coverage row: share of group weight strictly within each threshold.

    Tracts with no eligible facility count toward the denominator only;
    a zero-weight row reports absent shares rather than zero.
    """
    group = DemographicGroup(group)
    weights, miles = _weights_and_miles(table, tracts, group, scope)
    shares, total = _share_row(weights, miles, thresholds)
    return CoverageRow(group=group, scope=scope, shares=shares, weighted_total=total)


def coverage_table(
    table: DistanceTable,
    tracts: Sequence[Tract],
    groups: Sequence[DemographicGroup] = ALL_GROUPS,
    thresholds: Sequence[float] = (1.0, 2.0, 5.0),
    include_states: bool = True,
) -> CoverageTable:
    """All requested coverage rows: national first, then states ascending.

    Weights and distances are materialized once and every scope is a
    mask over them, so large tables cost one pass per group rather than
    one pass per row. Row values are identical to `threshold_share`.
    """
    scoped = [t for t in tracts if t.id in table.entries]
    scopes = [NATIONAL_SCOPE]
    if include_states:
        scopes.extend(sorted({t.state for t in scoped}))
    group_list = tuple(DemographicGroup(g) for g in groups)

    miles = np.array(
        [np.nan if table.entries[t.id] is None else table.entries[t.id][1] for t in scoped],
        dtype=np.float64,
    )
    states = np.array([t.state for t in scoped])
    weight_columns = {
        g: np.array([group_weight(t, g) for t in scoped], dtype=np.int64) for g in group_list
    }

    rows = []
    for scope in scopes:
        mask = slice(None) if scope == NATIONAL_SCOPE else states == scope
        scope_miles = miles[mask]
        for group in group_list:
            shares, total = _share_row(weight_columns[group][mask], scope_miles, thresholds)
            rows.append(CoverageRow(group=group, scope=scope, shares=shares, weighted_total=total))
    return CoverageTable(
        scenario_name=table.scenario_name,
        thresholds=tuple(float(t) for t in thresholds),
        rows=tuple(rows),
    )


def _facility_tract_assignment(
    facilities: Sequence[Facility], tracts: Sequence[Tract]
) -> dict[str, Optional[str]]:
    """Assign each facility a containing tract.

    An explicit ``tract_id`` naming a known tract wins; otherwise the
    nearest same-state tract centroid (distance ties to the smaller
    tract id). None when neither applies.
    """
    by_id = {t.id: t for t in tracts}
    assignment: dict[str, Optional[str]] = {}
    need_nearest: list[Facility] = []
    for f in facilities:
        if f.tract_id is not None and f.tract_id in by_id:
            assignment[f.id] = f.tract_id
        else:
            need_nearest.append(f)
    if need_nearest:
        centroid_index = build_index(
            FacilitySet(
                name="centroids",
                facilities=tuple(
                    Facility(id=t.id, chain="", state=t.state, coordinate=t.centroid)
                    for t in tracts
                ),
            )
        )
        by_state: dict[str, list[Facility]] = {}
        for f in sorted(need_nearest, key=lambda f: f.id):
            by_state.setdefault(f.state, []).append(f)
        for state, fs in sorted(by_state.items()):
            vectors = unit_vectors(
                np.array([f.coordinate.lat for f in fs], dtype=np.float64),
                np.array([f.coordinate.lon for f in fs], dtype=np.float64),
            )
            hits = nearest_many(centroid_index, vectors, {state})
            for f, hit in zip(fs, hits):
                assignment[f.id] = None if hit is None else hit[0]
    return assignment


def svi_decile_distribution(
    facility_set: FacilitySet, tracts: Sequence[Tract]
) -> DecileHistogram:
    """Share of facilities per SVI decile of their assigned tract.

    Facilities whose assigned tract has no SVI (or that match no tract)
    are counted separately and excluded from the percentage base.
    """
    assignment = _facility_tract_assignment(facility_set.facilities, tracts)
    by_id = {t.id: t for t in tracts}
    counts = [0] * 10
    unmatched = 0
    for f in facility_set.facilities:
        tract = by_id.get(assignment.get(f.id) or "")
        if tract is None or tract.svi is None:
            unmatched += 1
            continue
        counts[int(np.searchsorted(_DECILE_BOUNDS, tract.svi.value, side="right"))] += 1
    matched = sum(counts)
    if matched:
        shares = tuple(100.0 * c / matched for c in counts)
    else:
        shares = tuple(0.0 for _ in counts)
    return DecileHistogram(
        counts=tuple(counts), shares=shares, matched_total=matched, unmatched=unmatched
    )


def stores_per_100k(
    facility_set: FacilitySet, tracts: Sequence[Tract]
) -> tuple[StateRate, ...]:
    """Facility count and rate per 100,000 residents, by state, ascending."""
    pop: dict[str, int] = {}
    for t in tracts:
        pop[t.state] = pop.get(t.state, 0) + t.counts.pop_total
    counts: dict[str, int] = {}
    for f in facility_set.facilities:
        counts[f.state] = counts.get(f.state, 0) + 1
    rows = []
    for state in sorted(set(pop) | set(counts)):
        count = counts.get(state, 0)
        people = pop.get(state, 0)
        rate = (count * 100000.0) / people if people > 0 else None
        rows.append(StateRate(state=state, count=count, per_100k=rate))
    return tuple(rows)


def compare_scenarios(
    base: DistanceTable,
    augmented: DistanceTable,
    tracts: Sequence[Tract],
    groups: Sequence[DemographicGroup] = ALL_GROUPS,
    thresholds: Sequence[float] = (1.0, 2.0, 5.0),
) -> ScenarioDelta:
    """National share deltas (augmented - base) plus per-tract distance deltas."""
    if set(base.entries.keys()) != set(augmented.entries.keys()):
        raise ValueError(
            "scenario comparison requires identical tract universes; "
            f"{base.scenario_name!r} and {augmented.scenario_name!r} differ"
        )
    scoped = [t for t in tracts if t.id in base.entries]
    rows = []
    for group in groups:
        b = threshold_share(base, scoped, group, thresholds)
        a = threshold_share(augmented, scoped, group, thresholds)
        deltas = tuple(
            None if (x is None or y is None) else y - x
            for x, y in zip(b.shares, a.shares)
        )
        rows.append(
            DeltaRow(
                group=DemographicGroup(group),
                base_shares=b.shares,
                augmented_shares=a.shares,
                deltas=deltas,
            )
        )
    distance_deltas = {}
    for t in scoped:
        bh = base.entries[t.id]
        ah = augmented.entries[t.id]
        bm = None if bh is None else bh[1]
        am = None if ah is None else ah[1]
        delta = None if (bm is None or am is None) else am - bm
        distance_deltas[t.id] = (bm, am, delta)
    return ScenarioDelta(
        base_name=base.scenario_name,
        augmented_name=augmented.scenario_name,
        thresholds=tuple(float(t) for t in thresholds),
        rows=tuple(rows),
        distance_deltas=distance_deltas,
    )


def goal_check(
    table: DistanceTable,
    tracts: Sequence[Tract],
    threshold: float = 5.0,
    target: float = 90.0,
    group: DemographicGroup = DemographicGroup.ALL_ADULTS,
) -> GoalCheck:
    """Whether the group's share within the threshold meets the target."""
    row = threshold_share(table, tracts, group, (threshold,))
    share = row.shares[0]
    return GoalCheck(
        group=DemographicGroup(group),
        threshold=float(threshold),
        target=float(target),
        share=share,
        met=share is not None and share >= target,
    )
