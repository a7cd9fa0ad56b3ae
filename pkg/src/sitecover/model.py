"""Domain records: tracts, facilities, demographic groups, scenarios.

Every invariant is enforced at construction; all records are immutable
afterwards and safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, Optional, Union

from .geo import Coordinate


class InvariantViolation(ValueError):
    """A domain invariant failed; ``reason`` is a stable machine label."""

    def __init__(self, reason: str, message: str):
        super().__init__(message)
        self.reason = reason


#: 50 states + DC + the territories that appear in national tract files.
STATE_UNIVERSE = frozenset(
    """AL AK AZ AR CA CO CT DE FL GA HI ID IL IN IA KS KY LA ME MD MA MI MN MS
       MO MT NE NV NH NJ NM NY NC ND OH OK OR PA RI SC SD TN TX UT VT VA WA WV
       WI WY DC PR VI GU MP AS""".split()
)

#: States/territories excluded by the continental-US region filter.
NON_CONTINENTAL = frozenset({"AK", "HI", "PR", "VI", "GU", "MP", "AS"})


@dataclass(frozen=True)
class DemographicCounts:
    """Per-tract population and household counts.

    The race fields partition pop_total, as do the ethnicity fields; the
    two income bands never exceed households_total.
    """

    adults_total: int
    households_total: int
    households_low_income: int
    households_high_income: int
    pop_total: int
    pop_white: int
    pop_black: int
    pop_aapi: int
    pop_other: int
    pop_hispanic: int
    pop_non_hispanic: int

    def __post_init__(self) -> None:
        for name in self.__dataclass_fields__:
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool) or v < 0:
                raise InvariantViolation(
                    "negative-count", f"{name} must be a nonnegative integer, got {v!r}"
                )
        race = self.pop_white + self.pop_black + self.pop_aapi + self.pop_other
        if race != self.pop_total:
            raise InvariantViolation(
                "race-sum",
                f"race-sum identity violated: white+black+aapi+other = {race} "
                f"!= pop_total = {self.pop_total}",
            )
        eth = self.pop_hispanic + self.pop_non_hispanic
        if eth != self.pop_total:
            raise InvariantViolation(
                "ethnicity-sum",
                f"ethnicity-sum identity violated: hispanic+non_hispanic = {eth} "
                f"!= pop_total = {self.pop_total}",
            )
        inc = self.households_low_income + self.households_high_income
        if inc > self.households_total:
            raise InvariantViolation(
                "income-sum",
                f"income-sum identity violated: low+high = {inc} "
                f"> households_total = {self.households_total}",
            )


@dataclass(frozen=True)
class SviPercentile:
    """Social-vulnerability percentile rank in [0, 1]; higher = more vulnerable."""

    value: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.value <= 1.0:
            raise InvariantViolation(
                "svi-range", f"SVI percentile {self.value} outside [0, 1]"
            )


@dataclass(frozen=True)
class Tract:
    """A population unit located at its centroid."""

    id: str
    state: str
    centroid: Coordinate
    counts: DemographicCounts
    svi: Optional[SviPercentile] = None

    def __post_init__(self) -> None:
        if not self.id:
            raise InvariantViolation("malformed", "tract id must be nonempty")
        if len(self.state) != 2 or not self.state.isalpha() or not self.state.isupper():
            raise InvariantViolation(
                "state-unknown", f"state must be a 2-letter code, got {self.state!r}"
            )


class FacilityRole(str, Enum):
    RETAIL = "retail"
    HEADQUARTERS = "headquarters"
    DISTRIBUTION_CENTER = "distribution_center"
    OTHER_NON_RETAIL = "other_non_retail"


#: Roles dropped from analysis: only storefronts can serve walk-in demand.
NON_RETAIL_ROLES = frozenset(
    {FacilityRole.HEADQUARTERS, FacilityRole.DISTRIBUTION_CENTER, FacilityRole.OTHER_NON_RETAIL}
)


class GeocodeQuality(str, Enum):
    SUCCESS = "success"
    DOUBT = "doubt"
    FAILED = "failed"
    AUTHORITATIVE = "authoritative"


@dataclass(frozen=True)
class Facility:
    """A candidate service site.

    ``tract_id`` is an optional explicit containing-tract override used by
    the vulnerability profile; when absent the facility is assigned to the
    nearest same-state tract centroid.
    """

    id: str
    chain: str
    state: str
    coordinate: Coordinate
    role: FacilityRole = FacilityRole.RETAIL
    geocode_quality: GeocodeQuality = GeocodeQuality.SUCCESS
    tract_id: Optional[str] = None

    def __post_init__(self) -> None:
        if not self.id:
            raise InvariantViolation("malformed", "facility id must be nonempty")


@dataclass(frozen=True)
class FacilitySet:
    """A named collection of facilities with unique ids."""

    name: str
    facilities: tuple[Facility, ...]

    def __post_init__(self) -> None:
        seen = set()
        for f in self.facilities:
            if f.id in seen:
                raise InvariantViolation(
                    "duplicate-id", f"facility id {f.id!r} appears twice in set {self.name!r}"
                )
            seen.add(f.id)

    def __len__(self) -> int:
        return len(self.facilities)


Region = Union[str, frozenset]  # "all" | "conus" | explicit state set


def parse_region(value) -> Region:
    """Normalize a region given as a keyword, state list, or comma string."""
    if isinstance(value, str):
        lowered = value.strip().lower()
        if lowered in ("all", "conus"):
            return lowered
        parts = [p.strip().upper() for p in value.split(",") if p.strip()]
        if not parts:
            raise ValueError(f"empty region value {value!r}")
        return frozenset(parts)
    if isinstance(value, Iterable):
        return frozenset(str(s).strip().upper() for s in value)
    raise ValueError(f"unrecognized region {value!r}")


def region_to_json(region: Region):
    return region if isinstance(region, str) else sorted(region)


def in_region(tract: Tract, region: Region, non_continental: frozenset = NON_CONTINENTAL) -> bool:
    """Whether the tract belongs to the requested region filter."""
    if region == "all":
        return True
    if region == "conus":
        return tract.state not in non_continental
    return tract.state in region


class DemographicGroup(str, Enum):
    """Population groups a coverage row can be weighted by.

    Declaration order is the canonical report row order.
    """

    ALL_ADULTS = "all_adults"
    HOUSEHOLDS_LOW_INCOME = "households_low_income"
    HOUSEHOLDS_HIGH_INCOME = "households_high_income"
    POP_BLACK = "pop_black"
    POP_WHITE = "pop_white"
    POP_AAPI = "pop_aapi"
    POP_OTHER = "pop_other"
    POP_HISPANIC = "pop_hispanic"
    POP_NON_HISPANIC = "pop_non_hispanic"


_GROUP_FIELD = {
    DemographicGroup.ALL_ADULTS: "adults_total",
    DemographicGroup.HOUSEHOLDS_LOW_INCOME: "households_low_income",
    DemographicGroup.HOUSEHOLDS_HIGH_INCOME: "households_high_income",
    DemographicGroup.POP_BLACK: "pop_black",
    DemographicGroup.POP_WHITE: "pop_white",
    DemographicGroup.POP_AAPI: "pop_aapi",
    DemographicGroup.POP_OTHER: "pop_other",
    DemographicGroup.POP_HISPANIC: "pop_hispanic",
    DemographicGroup.POP_NON_HISPANIC: "pop_non_hispanic",
}


def group_weight(tract: Tract, group: DemographicGroup) -> int:
    """The count that weights this tract when aggregating for ``group``."""
    return getattr(tract.counts, _GROUP_FIELD[DemographicGroup(group)])


@dataclass(frozen=True)
class Scenario:
    """A named what-if: which facility sets to union, over which region.

    ``cross_state`` maps a state exempt from the in-state service rule to
    the extra states whose facilities it may borrow (the home state is
    always included implicitly).
    """

    name: str
    sets: tuple[str, ...]
    region: Region = "all"
    cross_state: Mapping[str, frozenset] = field(default_factory=dict)
    thresholds: tuple[float, ...] = (1.0, 2.0, 5.0)

    def __post_init__(self) -> None:
        ts = tuple(float(t) for t in self.thresholds)
        if not ts:
            raise InvariantViolation("thresholds", "at least one threshold required")
        if ts[0] <= 0 or any(b <= a for a, b in zip(ts, ts[1:])):
            raise InvariantViolation(
                "thresholds", f"thresholds must be positive and strictly increasing, got {ts}"
            )
        object.__setattr__(self, "thresholds", ts)
        object.__setattr__(self, "sets", tuple(self.sets))
        object.__setattr__(
            self,
            "cross_state",
            {k.upper(): frozenset(str(s).upper() for s in v) for k, v in dict(self.cross_state).items()},
        )

    def query_states(self, state: str) -> frozenset:
        """States whose facilities may serve a tract in ``state``."""
        extra = self.cross_state.get(state)
        if extra:
            return frozenset({state}) | extra
        return frozenset({state})

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "sets": list(self.sets),
            "region": region_to_json(self.region),
            "cross_state": {k: sorted(v) for k, v in sorted(self.cross_state.items())},
            "thresholds": list(self.thresholds),
        }
