"""JSON-over-HTTP facade for interactive scenario analysis.

The service loads one read-only store at startup and answers analysis
requests with exactly the numbers the batch commands produce (shared
engine, shared rounding). Facility indexes are built lazily per sorted
set union and cached, since interactive clients tend to re-query the
same unions; the cache is the only mutable state and is lock-protected.
"""

import hashlib
import json
import threading
from contextlib import asynccontextmanager
from typing import Optional, Union

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

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
from .index import FacilityIndex, build_index
from .model import DemographicGroup, InvariantViolation, Scenario
from .report import (
    coverage_payload,
    decile_payload,
    delta_payload,
    goal_payload,
    rates_payload,
)
from .store import Store, load_store

DECIMALS = 2


class AnalyzeRequest(BaseModel):
    sets: list[str] = Field(min_length=1)
    region: Union[str, list[str]] = "all"
    thresholds: list[float] = [1.0, 2.0, 5.0]
    groups: Optional[list[str]] = None
    cross_state: dict[str, list[str]] = {}


class CompareRequest(BaseModel):
    base: list[str] = Field(min_length=1)
    augmented: list[str] = Field(min_length=1)
    region: Union[str, list[str]] = "all"
    thresholds: list[float] = [1.0, 2.0, 5.0]
    groups: Optional[list[str]] = None
    cross_state: dict[str, list[str]] = {}


class HistRequest(BaseModel):
    sets: list[str] = Field(min_length=1)


class _Engine:
    """Store plus a lock-protected cache of per-union facility indexes."""

    def __init__(self, store: Store):
        self.store = store
        self._indexes: dict[tuple[str, ...], FacilityIndex] = {}
        self._lock = threading.Lock()

    def index_for(self, scenario: Scenario) -> FacilityIndex:
        key = tuple(sorted(set(scenario.sets)))
        with self._lock:
            cached = self._indexes.get(key)
            if cached is None:
                union = resolve_scenario(scenario, self.store.facility_sets)
                cached = build_index(union)
                self._indexes[key] = cached
            return cached

    def cache_key(self, *parts: dict) -> str:
        material = self.store.digest + "".join(
            json.dumps(p, sort_keys=True, separators=(",", ":")) for p in parts
        )
        return hashlib.sha256(material.encode("utf-8")).hexdigest()


class RequestProblem(Exception):
    def __init__(self, status: int, detail):
        self.status = status
        self.detail = detail


def _field_errors(exc: RequestValidationError) -> list[dict]:
    errors = []
    for err in exc.errors():
        loc = [str(p) for p in err.get("loc", ()) if p != "body"]
        errors.append({"field": ".".join(loc) or "body", "message": err.get("msg", "invalid")})
    return errors


def _parse_groups(names: Optional[list[str]]) -> tuple[DemographicGroup, ...]:
    if names is None:
        return tuple(DemographicGroup)
    groups = []
    for name in names:
        try:
            groups.append(DemographicGroup(name))
        except ValueError:
            known = ", ".join(g.value for g in DemographicGroup)
            raise RequestProblem(400, [{"field": "groups", "message": f"unknown group {name!r} (known: {known})"}]) from None
    return tuple(groups)


def _scenario(sets: list[str], region, thresholds, cross_state, field: str = "sets") -> Scenario:
    try:
        return Scenario(
            name="+".join(sets),
            sets=tuple(sets),
            region=region,
            cross_state={k: frozenset(v) for k, v in cross_state.items()},
            thresholds=tuple(thresholds),
        )
    except (InvariantViolation, ValueError) as exc:
        reason = getattr(exc, "reason", field)
        raise RequestProblem(400, [{"field": reason, "message": str(exc)}]) from exc


def create_app(store_path: str) -> FastAPI:
    state: dict[str, Optional[_Engine]] = {"engine": None}

    @asynccontextmanager
    async def _lifespan(app: FastAPI):
        state["engine"] = _Engine(load_store(store_path))
        yield

    app = FastAPI(title="sitecover", docs_url=None, redoc_url=None, lifespan=_lifespan)

    def engine() -> _Engine:
        current = state["engine"]
        if current is None:
            raise RequestProblem(503, "store is still loading")
        return current

    @app.exception_handler(RequestProblem)
    async def _problem(request: Request, exc: RequestProblem):
        return JSONResponse(status_code=exc.status, content={"detail": exc.detail})

    @app.exception_handler(RequestValidationError)
    async def _invalid(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"detail": _field_errors(exc)})

    def _distances(eng: _Engine, scenario: Scenario):
        try:
            index = eng.index_for(scenario)
            return min_distance_table(eng.store.tracts, scenario, eng.store.facility_sets, index=index)
        except UnknownSetError as exc:
            raise RequestProblem(404, str(exc)) from exc

    @app.get("/sets")
    def sets_endpoint():
        eng = engine()
        return [
            {"name": name, "count": count}
            for name, count in sorted(eng.store.set_counts().items())
        ]

    @app.get("/meta")
    def meta_endpoint():
        eng = engine()
        return {
            "regions": ["all", "conus"],
            "states": sorted({t.state for t in eng.store.tracts}),
            "groups": [g.value for g in DemographicGroup],
            "default_thresholds": [1.0, 2.0, 5.0],
            "store_digest": eng.store.digest,
        }

    @app.post("/analyze")
    def analyze_endpoint(body: AnalyzeRequest):
        eng = engine()
        scenario = _scenario(body.sets, body.region, body.thresholds, body.cross_state)
        groups = _parse_groups(body.groups)
        distances = _distances(eng, scenario)
        union = resolve_scenario(scenario, eng.store.facility_sets)
        table = coverage_table(distances, eng.store.tracts, groups, scenario.thresholds)
        check = goal_check(distances, eng.store.tracts)
        rates = stores_per_100k(union, eng.store.tracts)
        scenario_json = scenario.to_json()
        return {
            "scenario": scenario_json,
            "cache_key": eng.cache_key(scenario_json, {"groups": [g.value for g in groups]}),
            "coverage": coverage_payload(table, DECIMALS),
            "goal": goal_payload(check, DECIMALS),
            "rates": rates_payload(rates, DECIMALS),
        }

    @app.post("/compare")
    def compare_endpoint(body: CompareRequest):
        eng = engine()
        base_scenario = _scenario(body.base, body.region, body.thresholds, body.cross_state, "base")
        augmented_scenario = _scenario(body.augmented, body.region, body.thresholds, body.cross_state, "augmented")
        groups = _parse_groups(body.groups)
        base = _distances(eng, base_scenario)
        augmented = _distances(eng, augmented_scenario)
        delta = compare_scenarios(base, augmented, eng.store.tracts, groups, base_scenario.thresholds)
        base_json = base_scenario.to_json()
        augmented_json = augmented_scenario.to_json()
        return {
            "base": base_json,
            "augmented": augmented_json,
            "cache_key": eng.cache_key(base_json, augmented_json, {"groups": [g.value for g in groups]}),
            "delta": delta_payload(delta, DECIMALS),
        }

    @app.post("/svi-hist")
    def svi_hist_endpoint(body: HistRequest):
        eng = engine()
        scenario = _scenario(body.sets, "all", (1.0, 2.0, 5.0), {})
        try:
            union = resolve_scenario(scenario, eng.store.facility_sets)
        except UnknownSetError as exc:
            raise RequestProblem(404, str(exc)) from exc
        histogram = svi_decile_distribution(union, eng.store.tracts)
        return {
            "sets": list(scenario.sets),
            "cache_key": eng.cache_key({"sets": sorted(set(scenario.sets))}),
            "histogram": decile_payload(histogram, DECIMALS),
        }

    return app
