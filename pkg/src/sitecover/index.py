"""Exact nearest-facility search over spherical points, by state.

Facilities are embedded on the unit sphere and indexed with one k-d tree
per state; Euclidean chord distance is monotone in great-circle
distance, so tree pruning is exact. Tree-reported distances are used
only to bound the search: every reported distance comes from the shared
kernel in ``geo``, and anything within a tiny chord window of the best
candidate is re-examined so the (distance, id) winner is identical to a
linear scan, bit for bit.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .geo import Coordinate, arc_miles, half_chords, unit_vectors
from .model import Facility, FacilitySet

# Pruning window around the best chord seen. Generous relative to the
# few-ulp wobble between tree arithmetic and the kernel's, so the window
# always contains every facility that could win on (miles, id).
_SLOP_REL = 1e-9
_SLOP_ABS = 1e-12

Hit = tuple[str, float]  # (facility id, miles)


@dataclass(frozen=True)
class _Partition:
    ids: tuple[str, ...]
    vectors: np.ndarray
    tree: cKDTree


@dataclass(frozen=True)
class FacilityIndex:
    """Immutable per-state nearest-neighbor structure."""

    partitions: Mapping[str, _Partition]
    facility_count: int

    def partition_sizes(self) -> dict[str, int]:
        return {state: len(p.ids) for state, p in self.partitions.items()}


def _partition_arrays(facilities: Iterable[Facility]) -> dict[str, tuple[tuple[str, ...], np.ndarray]]:
    """Group facilities by state, sorted by id, embedded one pass per state.

    Both the index build and the brute-force scan use this, so the two
    paths see bit-identical embeddings regardless of input order.
    """
    by_state: dict[str, list[Facility]] = defaultdict(list)
    for f in sorted(facilities, key=lambda f: f.id):
        by_state[f.state].append(f)
    out = {}
    for state in sorted(by_state):
        fs = by_state[state]
        lats = np.array([f.coordinate.lat for f in fs], dtype=np.float64)
        lons = np.array([f.coordinate.lon for f in fs], dtype=np.float64)
        out[state] = (tuple(f.id for f in fs), unit_vectors(lats, lons))
    return out


def build_index(facility_set: FacilitySet) -> FacilityIndex:
    """Build the per-state index; deterministic in set content only."""
    partitions = {}
    count = 0
    for state, (ids, vectors) in _partition_arrays(facility_set.facilities).items():
        partitions[state] = _Partition(ids=ids, vectors=vectors, tree=cKDTree(vectors))
        count += len(ids)
    return FacilityIndex(partitions=partitions, facility_count=count)


def _point_vector(point: Coordinate) -> np.ndarray:
    return unit_vectors(np.float64(point.lat), np.float64(point.lon))


def _best_hit(candidates: Iterable[Hit]) -> Optional[Hit]:
    best = None
    for fid, miles in candidates:
        if best is None or (miles, fid) < (best[1], best[0]):
            best = (fid, miles)
    return best


def nearest(
    index: FacilityIndex,
    point: Coordinate,
    states: Iterable[str],
    point_vector: Optional[np.ndarray] = None,
) -> Optional[Hit]:
    """Nearest indexed facility to the point among the given states.

    Ties on distance go to the lexicographically smallest facility id.
    ``point_vector`` optionally supplies a precomputed embedding so a
    caller can keep one canonical embedding per collection.
    """
    parts = _states_to_parts(index, states)
    if not parts:
        return None
    q = _point_vector(point) if point_vector is None else point_vector

    bound = min(float(p.tree.query(q, k=1)[0]) for p in parts)
    radius = bound * (1.0 + _SLOP_REL) + _SLOP_ABS
    candidates: list[Hit] = []
    for p in parts:
        rows = p.tree.query_ball_point(q, radius)
        if not rows:
            continue
        halves = half_chords(p.vectors[rows], q)
        candidates.extend((p.ids[r], arc_miles(float(h))) for r, h in zip(rows, halves))
    return _best_hit(candidates)


def _states_to_parts(index: FacilityIndex, states: Iterable[str]) -> list[_Partition]:
    wanted = set(states)
    if not wanted:
        raise ValueError("states must be nonempty")
    return [index.partitions[s] for s in sorted(wanted) if s in index.partitions]


def nearest_bruteforce(
    facility_set: FacilitySet,
    point: Coordinate,
    states: Iterable[str],
    point_vector: Optional[np.ndarray] = None,
) -> Optional[Hit]:
    """Reference linear scan with the same contract as ``nearest``."""
    wanted = set(states)
    if not wanted:
        raise ValueError("states must be nonempty")
    parts = _partition_arrays(f for f in facility_set.facilities if f.state in wanted)
    if not parts:
        return None
    q = _point_vector(point) if point_vector is None else point_vector

    state_halves = {state: half_chords(vectors, q) for state, (_, vectors) in parts.items()}
    bound = min(float(h.min()) for h in state_halves.values())
    window = bound * (1.0 + _SLOP_REL) + _SLOP_ABS
    candidates: list[Hit] = []
    for state, (ids, _) in parts.items():
        halves = state_halves[state]
        for r in np.flatnonzero(halves <= window):
            candidates.append((ids[r], arc_miles(float(halves[r]))))
    return _best_hit(candidates)


def nearest_many(
    index: FacilityIndex,
    point_vectors: np.ndarray,
    states: Iterable[str],
    workers: int = 1,
) -> list[Optional[Hit]]:
    """Nearest facility for many embedded points sharing one state set.

    Same winner as calling ``nearest`` per point; vectorized tree
    queries with per-point near-tie refinement. ``workers`` feeds the
    tree query and cannot change results.
    """
    parts = _states_to_parts(index, states)
    n = point_vectors.shape[0]
    if not parts or n == 0:
        return [None] * n

    # Tree distances per state: k=2 so a same-state near-tie is visible.
    dist_rows = []
    idx_rows = []
    for p in parts:
        k = min(2, len(p.ids))
        d, i = p.tree.query(point_vectors, k=k, workers=workers)
        if k == 1:
            d = d.reshape(n, 1)
            i = i.reshape(n, 1)
        dist_rows.append(d)
        idx_rows.append(i)

    best_tree = np.min([d[:, 0] for d in dist_rows], axis=0)
    radii = best_tree * (1.0 + _SLOP_REL) + _SLOP_ABS

    # A point needs the ball fallback when any partition has a second
    # neighbor inside the window (possible id tie-break) or when more
    # than one partition competes at the window.
    needs_ball = np.zeros(n, dtype=bool)
    for d in dist_rows:
        if d.shape[1] > 1:
            needs_ball |= d[:, 1] <= radii
    if len(parts) > 1:
        competing = np.zeros(n, dtype=np.int64)
        for d in dist_rows:
            competing += d[:, 0] <= radii
        needs_ball |= competing > 1

    out: list[Optional[Hit]] = [None] * n

    # Fast path: unique winner per point; compute kernel miles in bulk.
    simple = np.flatnonzero(~needs_ball)
    if simple.size:
        owner = np.argmin(np.stack([d[:, 0] for d in dist_rows], axis=1), axis=1)
        for part_no, p in enumerate(parts):
            sel = simple[owner[simple] == part_no]
            if not sel.size:
                continue
            rows = idx_rows[part_no][sel, 0]
            halves = half_chords(p.vectors[rows], point_vectors[sel])
            for point_row, facility_row, h in zip(sel, rows, halves):
                out[point_row] = (p.ids[facility_row], arc_miles(float(h)))

    for point_row in np.flatnonzero(needs_ball):
        q = point_vectors[point_row]
        radius = float(radii[point_row])
        candidates: list[Hit] = []
        for p in parts:
            rows = p.tree.query_ball_point(q, radius)
            if not rows:
                continue
            halves = half_chords(p.vectors[rows], q)
            candidates.extend((p.ids[r], arc_miles(float(h))) for r, h in zip(rows, halves))
        out[point_row] = _best_hit(candidates)
    return out
