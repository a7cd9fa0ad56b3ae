"""Facility coverage analysis: distances, weighted shares, what-if scenarios."""

from .coverage import (
    CoverageRow,
    CoverageTable,
    DecileHistogram,
    DistanceTable,
    GoalCheck,
    ScenarioDelta,
    StateRate,
    UnknownSetError,
    compare_scenarios,
    coverage_table,
    goal_check,
    min_distance_table,
    resolve_scenario,
    stores_per_100k,
    svi_decile_distribution,
    threshold_share,
)
from .geo import Coordinate, EARTH_RADIUS_MILES, MAX_DISTANCE_MILES, haversine_miles
from .index import FacilityIndex, build_index, nearest, nearest_bruteforce, nearest_many
from .ingest import (
    IngestError,
    IngestReport,
    dedupe_coordinates,
    join_svi,
    parse_facilities,
    parse_state_sites,
    parse_tracts,
)
from .model import (
    DemographicCounts,
    DemographicGroup,
    Facility,
    FacilityRole,
    FacilitySet,
    GeocodeQuality,
    InvariantViolation,
    Scenario,
    SviPercentile,
    Tract,
    group_weight,
    in_region,
)
from .store import Store, StoreError, load_store, save_store

__all__ = [
    "Coordinate",
    "EARTH_RADIUS_MILES",
    "MAX_DISTANCE_MILES",
    "haversine_miles",
    "FacilityIndex",
    "build_index",
    "nearest",
    "nearest_bruteforce",
    "nearest_many",
    "DemographicCounts",
    "DemographicGroup",
    "Facility",
    "FacilityRole",
    "FacilitySet",
    "GeocodeQuality",
    "InvariantViolation",
    "Scenario",
    "SviPercentile",
    "Tract",
    "group_weight",
    "in_region",
    "IngestError",
    "IngestReport",
    "dedupe_coordinates",
    "join_svi",
    "parse_facilities",
    "parse_state_sites",
    "parse_tracts",
    "CoverageRow",
    "CoverageTable",
    "DecileHistogram",
    "DistanceTable",
    "GoalCheck",
    "ScenarioDelta",
    "StateRate",
    "UnknownSetError",
    "compare_scenarios",
    "coverage_table",
    "goal_check",
    "min_distance_table",
    "resolve_scenario",
    "stores_per_100k",
    "svi_decile_distribution",
    "threshold_share",
    "Store",
    "StoreError",
    "load_store",
    "save_store",
]
