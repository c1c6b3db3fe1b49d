"""Scenario files: JSON schema, validation and conversion to a mission config.

Units: lengths in meters, times in seconds, speeds in m/s, currents in
amperes, capacity in ampere-hours, resistance in ohms, capacitance in farads.
"""
from __future__ import annotations

import json
from dataclasses import replace
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from .battery import BatteryParams, BatteryState
from .dynamics import DynamicsModel
from .mission import MissionConfig, SwapPolicy
from .solver import AT_LEAST_ONE, AgentSpec, Mode, OcpProblem, SolverSettings, exactly
from .spatial import GaussianComponent, SpatialDistribution, make_basis


class ScenarioError(ValueError):
    pass


_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_point = {"type": "array", "items": _num, "minItems": 2, "maxItems": 2}


def _obj(props: dict, required=()) -> dict:
    return {"type": "object", "properties": props, "required": list(required), "additionalProperties": False}


_battery = _obj({
    "R": {**_pos, "description": "series resistance, ohm"},
    "R1": {**_pos, "description": "first RC resistance, ohm"},
    "C1": {**_pos, "description": "first RC capacitance, F"},
    "R2": {**_pos, "description": "second RC resistance, ohm"},
    "C2": {**_pos, "description": "second RC capacitance, F"},
    "capacity_Q": {**_pos, "description": "capacity, Ah"},
    "zeta": {**_pos, "description": "coulombic efficiency"},
    "ocv_curve": {"type": "array", "minItems": 2, "items": _point,
                  "description": "(soc, open-circuit volts) breakpoints"},
    "recharge_eta": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
    "recharge_theta": {"type": "number", "minimum": 0, "maximum": 1},
    "flight_current_I": {**_pos, "description": "current drawn in flight, A"},
})

SCHEMA = _obj({
    "name": {"type": "string"},
    "description": {"type": "string"},
    "distribution": _obj({
        "period_L": {**_pos, "description": "period of the mirrored domain, m; the workspace is [0, L/2]^2"},
        "components": {"type": "array", "minItems": 1, "items": _obj({
            "center": {**_point, "description": "m"},
            "covariance": {"type": "array", "minItems": 2, "maxItems": 2, "items": _point,
                           "description": "m^2"},
            "weight": {"type": "number", "minimum": 0, "maximum": 1},
        }, ["center", "covariance", "weight"])},
    }, ["period_L", "components"]),
    "battery": _battery,
    "agents": {"type": "array", "minItems": 1, "items": _obj({
        "start": {**_point, "description": "initial position, m"},
        "station": {**_point, "description": "pad the agent is parked on, m; defaults to start"},
        "soc": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        "coverage": {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 1,
                     "description": "component indices assigned to this agent"},
        "penalty_R": {"type": "array", "items": _pos, "minItems": 2, "maxItems": 2},
        "control_bounds": {"type": "array", "minItems": 2, "maxItems": 2, "items": _point,
                           "description": "(min, max) velocity per axis, m/s"},
        "battery": _battery,
    }, ["start", "soc"])},
    "solver": _obj({
        "K": {"type": "integer", "minimum": 1, "description": "frequencies per axis"},
        "gamma": _pos,
        "steps_N": {"type": "integer", "minimum": 2},
        "horizon_s": {**_pos, "description": "horizon length, s"},
        "epsilon_m": {**_pos, "description": "landing radius, m"},
        "b_f": {"type": "number", "minimum": 0, "maximum": 1},
        "enforce_b_f": {"type": "boolean"},
        "ergodic_weight": {"type": "number", "minimum": 0},
        "terminal_margin": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        "constraint_tol": _pos,
        "domain_tol": _pos,
        "grad_tol": _pos,
        "ftol": _pos,
        "outer_tol": _pos,
        "max_outer": {"type": "integer", "minimum": 1},
        "max_inner": {"type": "integer", "minimum": 1},
        "multi_starts": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer", "minimum": 0},
        "perturbation": {"type": "number", "minimum": 0, "description": "initial-guess noise, m/s"},
    }, ["K", "gamma", "steps_N", "horizon_s"]),
    "mission": _obj({
        "horizons": {"type": "integer", "minimum": 1},
        "mode": {"enum": ["competing", "cooperative"]},
        "swap_policy": {"enum": [p.value for p in SwapPolicy]},
        "cardinality": _obj({
            "rule": {"enum": ["at_least_one", "exactly"]},
            "m": {"type": "integer", "minimum": 1},
        }, ["rule"]),
        "coverage": {"enum": ["shared", "explicit", "farthest"]},
        "stations": {"type": "array", "items": _point, "minItems": 1,
                     "description": "pad positions, m; defaults to the agents' stations"},
    }, ["horizons", "mode"]),
}, ["distribution", "agents", "solver", "mission"])

_SETTINGS_KEYS = ("constraint_tol", "domain_tol", "grad_tol", "ftol", "outer_tol", "max_outer",
                  "max_inner", "multi_starts", "seed", "ergodic_weight", "terminal_margin", "perturbation")


def packaged_scenarios() -> list[str]:
    root = resources.files("energy_ergodic") / "scenarios"
    return sorted(p.name for p in root.iterdir() if p.name.endswith(".json"))


def resolve_path(name: str | Path) -> Path:
    """A path as given, else a packaged scenario of that file name."""
    path = Path(name)
    if path.exists():
        return path
    packaged = resources.files("energy_ergodic") / "scenarios" / path.name
    if packaged.is_file():
        return Path(str(packaged))
    raise ScenarioError(f"scenario file not found: {name}")


def _where(err: jsonschema.ValidationError) -> str:
    return "/".join(str(p) for p in err.absolute_path) or "<root>"


def validate(doc: dict) -> dict:
    """Schema check plus cross-field checks; raises ScenarioError naming the key."""
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        raise ScenarioError(f"{_where(err)}: {err.message}")
    m = len(doc["distribution"]["components"])
    total = sum(c["weight"] for c in doc["distribution"]["components"])
    if total > 1 + 1e-12:
        raise ScenarioError(f"distribution/components: weights sum to {total} > 1")
    for i, agent in enumerate(doc["agents"]):
        bad = [g for g in agent.get("coverage", []) if g >= m]
        if bad:
            raise ScenarioError(f"agents/{i}/coverage: component index {bad[0]} >= {m}")
    card = doc["mission"].get("cardinality", {})
    if card.get("rule") == "exactly" and "m" not in card:
        raise ScenarioError("mission/cardinality/m: required when rule is 'exactly'")
    return doc


def load(path) -> dict:
    path = resolve_path(path)
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: invalid JSON: {exc}") from exc
    return validate(doc)


def build(doc: dict, horizons: int | None = None, seed: int | None = None) -> MissionConfig:
    """Turn a validated scenario document into a :class:`MissionConfig`."""
    try:
        return _build(doc, horizons, seed)
    except ScenarioError:
        raise
    except ValueError as exc:
        raise ScenarioError(str(exc)) from exc


def _build(doc, horizons, seed):
    dist_doc = doc["distribution"]
    comps = [GaussianComponent(np.array(c["center"], dtype=float), np.array(c["covariance"], dtype=float),
                               float(c["weight"])) for c in dist_doc["components"]]
    dist = SpatialDistribution(comps, 2, float(dist_doc["period_L"]))
    sol = doc["solver"]
    basis = make_basis(dist, int(sol["K"]))

    settings_kw = {k: sol[k] for k in _SETTINGS_KEYS if k in sol}
    if seed is not None:
        settings_kw["seed"] = int(seed)
    settings = SolverSettings(**settings_kw)

    base_battery = BatteryParams(**doc.get("battery", {}))
    agents = []
    for a in doc["agents"]:
        params = replace(base_battery, **a.get("battery", {}))
        dyn = DynamicsModel(control_bounds=tuple(tuple(b) for b in a.get("control_bounds", ((-1, 1), (-1, 1)))))
        start = np.array(a["start"], dtype=float)
        pad = np.array(a.get("station", a["start"]), dtype=float)
        agents.append(AgentSpec(start, (pad,), BatteryState(soc=float(a["soc"])), params, dyn,
                                tuple(a.get("penalty_R", (1.0, 1.0))), a.get("coverage"), pad))

    mis = doc["mission"]
    card = mis.get("cardinality", {"rule": "at_least_one"})
    cardinality = exactly(int(card["m"])) if card["rule"] == "exactly" else AT_LEAST_ONE
    coverage = mis.get("coverage", "shared")
    problem = OcpProblem(
        distribution=dist, basis=basis, agents=tuple(agents),
        horizon_T=float(sol["horizon_s"]), steps_N=int(sol["steps_N"]), gamma=float(sol["gamma"]),
        b_f=float(sol.get("b_f", 1.0)), enforce_b_f=bool(sol.get("enforce_b_f", False)),
        epsilon=float(sol.get("epsilon_m", 0.05)), cardinality=cardinality, mode=Mode(mis["mode"]),
        coverage_assignment=None if coverage == "shared" else coverage, settings=settings)
    stations = mis.get("stations") or [a.get("station", a["start"]) for a in doc["agents"]]
    return MissionConfig(problem, tuple(stations), int(horizons or mis["horizons"]),
                         SwapPolicy(mis.get("swap_policy", "swap_stations")))
