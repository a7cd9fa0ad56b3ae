"""Great-circle distance kernel and coordinate validation.

Distances are statute miles on a sphere of mean radius 3958.7613 mi
(6371.0088 km). Each coordinate is embedded as a 3-D unit vector; the
arc is recovered from the straight-line half-chord with arcsin. This is
algebraically the haversine path (never arccos), so it stays
well-conditioned at sub-mile separations, and chord length is monotone
in arc length, which is what makes exact tree-accelerated
nearest-neighbor search possible downstream.

Determinism contract: unit vectors for a collection are computed in a
single array pass; chord arithmetic uses only exactly-rounded IEEE
operations (subtract, multiply, add, sqrt); the one transcendental step
is a scalar libm arcsin per value. Identical coordinates therefore give
bit-identical distances at every call site, whatever the array shapes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

EARTH_RADIUS_MILES = 3958.7613

_DIAMETER_MILES = 2.0 * EARTH_RADIUS_MILES

# Upper bound of any great-circle distance: half the circumference.
MAX_DISTANCE_MILES = math.pi * EARTH_RADIUS_MILES


@dataclass(frozen=True)
class Coordinate:
    """A latitude/longitude pair in degrees, validated at construction."""

    lat: float
    lon: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.lat) and math.isfinite(self.lon)):
            raise ValueError(f"coordinate must be finite, got ({self.lat}, {self.lon})")
        if not -90.0 <= self.lat <= 90.0:
            raise ValueError(f"latitude {self.lat} outside [-90, 90]")
        if not -180.0 <= self.lon <= 180.0:
            raise ValueError(f"longitude {self.lon} outside [-180, 180]")


def unit_vectors(lat_deg, lon_deg) -> np.ndarray:
    """Embed degree coordinates on the unit sphere; output shape (..., 3)."""
    lat = np.radians(np.asarray(lat_deg, dtype=np.float64))
    lon = np.radians(np.asarray(lon_deg, dtype=np.float64))
    clat = np.cos(lat)
    out = np.empty(lat.shape + (3,), dtype=np.float64)
    out[..., 0] = clat * np.cos(lon)
    out[..., 1] = clat * np.sin(lon)
    out[..., 2] = np.sin(lat)
    return out


def half_chords(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Elementwise half-chord between unit-vector embeddings (broadcasting).

    Exactly-rounded IEEE operations with a fixed association, so any two
    call sites given the same vectors agree bit-for-bit.
    """
    dx = u[..., 0] - v[..., 0]
    dy = u[..., 1] - v[..., 1]
    dz = u[..., 2] - v[..., 2]
    half = 0.5 * np.sqrt((dx * dx + dy * dy) + dz * dz)
    return np.minimum(half, 1.0)


def arc_miles(half_chord: float) -> float:
    """Canonical half-chord to arc-miles finalization (scalar libm asin)."""
    return _DIAMETER_MILES * math.asin(half_chord if half_chord < 1.0 else 1.0)


def miles_between_vectors(u: np.ndarray, v: np.ndarray):
    """Great-circle miles between unit-vector embeddings.

    Routes every element through the scalar ``arc_miles`` finalization;
    meant for candidate sets and final results, not bulk pruning (prune
    on ``half_chords`` instead).
    """
    half = half_chords(u, v)
    if half.ndim == 0:
        return np.float64(arc_miles(float(half)))
    flat = half.ravel()
    out = np.fromiter((math.asin(h) for h in flat), np.float64, count=flat.size)
    out *= _DIAMETER_MILES
    return out.reshape(half.shape)


def chord_for_miles(miles: float) -> float:
    """Chord length (unit-sphere units) subtending the given arc in miles."""
    return 2.0 * math.sin(min(miles / EARTH_RADIUS_MILES, math.pi) / 2.0)


def haversine_miles(a: Coordinate, b: Coordinate) -> float:
    """Great-circle distance between two coordinates, statute miles.

    Symmetric, zero at identity, and bounded by half the circumference.
    """
    u = unit_vectors(a.lat, a.lon)
    v = unit_vectors(b.lat, b.lon)
    return float(miles_between_vectors(u, v))
