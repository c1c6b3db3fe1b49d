"""Receding-horizon mission driver."""
from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field, replace

import numpy as np

from . import battery as bat
from .ergodic import assignment_scales, prefix_metrics, team_metric
from .solver import (HorizonPlan, NoFeasibleAgent, OcpProblem, PlanningError, check_plan,
                     solve_horizon)
from .spatial import SpectralBasis

log = logging.getLogger(__name__)


class ContinuityBroken(RuntimeError):
    """No agent could explore during some horizon."""

    def __init__(self, horizon: int, reason: str):
        super().__init__(f"horizon {horizon}: {reason}")
        self.horizon = horizon
        self.reason = reason


class SwapPolicy(enum.Enum):
    STAY_SAME = "stay_same"
    SWAP_STATIONS = "swap_stations"
    FREE_ASSIGNMENT = "free_assignment"


@dataclass(frozen=True)
class MissionConfig:
    problem_template: OcpProblem
    stations: tuple
    num_horizons: int
    swap_policy: SwapPolicy = SwapPolicy.SWAP_STATIONS
    verify_plans: bool = True

    def __post_init__(self):
        stations = tuple(np.asarray(s, dtype=float) for s in self.stations)
        object.__setattr__(self, "stations", stations)
        if self.num_horizons < 1:
            raise ValueError("num_horizons must be positive")
        lo, hi = self.problem_template.workspace
        for s in stations:
            if np.any(s < lo) or np.any(s > hi):
                raise ValueError(f"station {s.tolist()} outside the workspace [{lo}, {hi}]")
        n = len(self.problem_template.agents)
        fewest_active = min(self.problem_template.cardinality.sizes(n), default=n)
        if len(stations) < n - fewest_active:
            raise ValueError(f"{len(stations)} stations cannot park {n - fewest_active} grounded agents")


@dataclass(frozen=True)
class MissionRecord:
    horizon: int
    time_s: float
    agent: int
    position: tuple
    soc: float
    terminal_volts: float
    active: bool
    instantaneous_metric: float


@dataclass
class MissionLog:
    records: list = field(default_factory=list)
    plans: list = field(default_factory=list)
    num_agents: int = 0
    steps_N: int = 0
    num_horizons: int = 0

    @property
    def active_sets(self) -> list[tuple]:
        return [p.active_set for p in self.plans]

    def horizon_records(self, h: int) -> list[MissionRecord]:
        return [r for r in self.records if r.horizon == h]

    def ergodicity(self, h: int) -> np.ndarray:
        """Instantaneous metric at each step of horizon ``h``."""
        return np.array([r.instantaneous_metric for r in self.horizon_records(h) if r.agent == 0])

    def expected_records(self) -> int:
        return self.num_horizons * self.steps_N * self.num_agents


def instantaneous_ergodicity(log_prefix, basis: SpectralBasis, masks=None) -> float:
    """Team metric of the active agents' samples so far in the horizon.

    ``log_prefix`` holds one (j, D) array of samples per active agent, all of
    the same length.
    """
    samples = np.stack([np.atleast_2d(np.asarray(p, dtype=float)) for p in log_prefix])
    if samples.shape[1] < 1:
        raise ValueError("every prefix needs at least one sample")
    scales = None if masks is None else assignment_scales(masks, basis.component_coeffs.shape[1])
    return team_metric(samples, basis, scales)[0]


def _slots(policy: SwapPolicy, i: int, pads, stations):
    if policy is SwapPolicy.STAY_SAME:
        return (pads[i],)
    if policy is SwapPolicy.SWAP_STATIONS:
        # any other agent's pad; pads under grounded agents are filtered by the solver
        return tuple(p for k, p in enumerate(pads) if k != i)
    return tuple(stations)


def run_mission(config: MissionConfig) -> MissionLog:
    """Plan, fly and recharge for ``num_horizons`` consecutive horizons.

    Raises :class:`ContinuityBroken` as soon as a horizon has no flyable
    agent or no active subset can be planned.
    """
    tmpl = config.problem_template
    n = len(tmpl.agents)
    N, T, dt = tmpl.steps_N, tmpl.horizon_T, tmpl.dt
    positions = [np.array(a.start, dtype=float) for a in tmpl.agents]
    pads = [np.array(a.pad, dtype=float) for a in tmpl.agents]
    batteries = [a.battery for a in tmpl.agents]
    out = MissionLog(num_agents=n, steps_N=N, num_horizons=config.num_horizons)

    for h in range(config.num_horizons):
        t0 = tmpl.t0 + h * T
        agents = tuple(
            replace(a, start=positions[i], pad=pads[i], battery=batteries[i],
                    station_slots=_slots(config.swap_policy, i, pads, config.stations))
            for i, a in enumerate(tmpl.agents))
        problem = replace(tmpl, agents=agents, t0=t0)
        try:
            plan = solve_horizon(problem)
        except NoFeasibleAgent as exc:
            raise ContinuityBroken(h, str(exc)) from exc
        except PlanningError as exc:
            raise ContinuityBroken(h, f"planning failed: {exc}") from exc
        if config.verify_plans:
            problems = check_plan(plan, problem)
            if problems:
                raise ContinuityBroken(h, f"plan failed certification: {problems}")
        log.info("horizon %d: active %s, metric %.4g", h, plan.active_set, plan.achieved_metric)
        _fly(out, h, t0, dt, N, problem, plan, positions, batteries)
        for row, i in enumerate(plan.active_set):
            pads[i] = np.array(plan.stations[row], dtype=float)
        out.plans.append(plan)
    return out


def _fly(out: MissionLog, h, t0, dt, N, problem: OcpProblem, plan: HorizonPlan, positions, batteries):
    n = len(problem.agents)
    basis = problem.basis.with_mixing(plan.mixing)
    # metric of samples q_0..q_{j-1} at record j = 1..N
    ergo = prefix_metrics(plan.trajectories, basis, plan.masks)
    rows = {i: r for r, i in enumerate(plan.active_set)}
    states = {}
    path = {}
    for i in range(n):
        states[i] = batteries[i]
        path[i] = plan.trajectories[rows[i]].states if i in rows else None

    per_step = []
    for j in range(1, N + 1):
        step_rows = []
        for i in range(n):
            params = problem.agents[i].params
            if i in rows:
                current = params.flight_current_I
                states[i] = bat.propagate(states[i], params, current, dt, dt)
                pos = path[i][j]
            else:
                current = 0.0
                states[i] = bat.propagate(states[i], params, current, dt, dt)
                if j == N:
                    states[i] = bat.recharge(states[i], params)
                pos = positions[i]
            volts = bat.terminal_voltage(states[i], params, current)
            step_rows.append(MissionRecord(h, t0 + j * dt, i, tuple(float(v) for v in pos),
                                           states[i].soc, float(volts), i in rows, float(ergo[j - 1])))
        per_step.extend(step_rows)
    out.records.extend(per_step)
    for i in range(n):
        batteries[i] = states[i]
        if i in rows:
            positions[i] = np.array(path[i][-1], dtype=float)
