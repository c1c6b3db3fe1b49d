import time
from dataclasses import replace

import numpy as np
import pytest

from energy_ergodic import (AgentSpec, BatteryParams, BatteryState, GaussianComponent, OcpProblem,
                            SolverSettings, SpatialDistribution, make_basis, run_mission, scenario)

L = 6.0
QUAD_CENTERS = ((1.0, 1.0), (1.0, 2.0), (2.0, 1.0), (2.0, 2.0))
STATIONS = ((0.3, 0.9), (2.7, 2.1), (0.3, 2.1), (2.7, 0.9))


def four_gaussians(weight=0.25, var=0.03):
    comps = [GaussianComponent(np.array(c), var * np.eye(2), weight) for c in QUAD_CENTERS]
    return SpatialDistribution(comps, 2, L)


def one_gaussian(center=(1.5, 1.5), var=0.05, weight=1.0):
    return SpatialDistribution([GaussianComponent(np.array(center), var * np.eye(2), weight)], 2, L)


def small_problem(dist, starts, *, socs=None, slots=None, K=5, N=20, T=40.0, gamma=0.1,
                  settings=None, params=None, **kw):
    """A cheap OcpProblem for solver tests."""
    params = params or BatteryParams()
    socs = socs or [1.0] * len(starts)
    slots = slots or [(s,) for s in starts]
    agents = [AgentSpec(np.array(s, dtype=float), tuple(sl), BatteryState(soc=soc), params)
              for s, sl, soc in zip(starts, slots, socs)]
    settings = settings or SolverSettings(multi_starts=1)
    return OcpProblem(distribution=dist, basis=make_basis(dist, K), agents=tuple(agents), horizon_T=T,
                      steps_N=N, gamma=gamma, settings=settings, **kw)


def cooperative_config(horizons=None, **solver_overrides):
    doc = scenario.load("cooperative.json")
    doc["solver"].update(solver_overrides)
    return scenario.build(doc, horizons)


@pytest.fixture(scope="session")
def cooperative_run():
    """The packaged 14-horizon cooperative mission, solved once per session."""
    config = cooperative_config()
    t0 = time.perf_counter()
    log = run_mission(config)
    return config, log, time.perf_counter() - t0


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def with_settings(problem, **kw):
    return replace(problem, settings=replace(problem.settings, **kw))


ACCEPTANCE_LINES = []


def report(criterion: str, ok: bool, detail: str) -> bool:
    """Record one acceptance line; printed again in the terminal summary."""
    line = f"[{'PASS' if ok else 'FAIL'}] {criterion}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
