"""Per-horizon energy-aware multi-agent ergodic planning.

The mixed problem is split in two. Battery feasibility is decided per agent
up front (flight current is constant), which leaves a finite set of candidate
active subsets. Each subset then gets a continuous direct-transcription solve:
controls (and, in cooperative mode, mixing weights) are the decision
variables, an augmented Lagrangian handles the ergodic bound and terminal
landing constraints, a quadratic penalty keeps states in the workspace, and
each inner problem goes to scipy's bounded L-BFGS.
"""
from __future__ import annotations

import enum
import itertools
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import minimize

from . import battery as bat
from .dynamics import ControlSequence, DynamicsModel, control_effort, rollout
from .ergodic import assignment_scales, evaluate, team_metric
from .spatial import SpatialDistribution, SpectralBasis

log = logging.getLogger(__name__)


class PlanningError(RuntimeError):
    pass


class NoFeasibleAgent(PlanningError):
    pass


class ErgodicityUnreachable(PlanningError):
    pass


class Infeasible(PlanningError):
    """Constraint violation above tolerance after the iteration budget."""


class BudgetExceeded(PlanningError):
    """The inner solver ran out of iterations or line-search room while infeasible."""


class Mode(enum.Enum):
    COMPETING = "competing"
    COOPERATIVE = "cooperative"


@dataclass(frozen=True)
class Cardinality:
    """How many agents must fly: ``exactly`` m, or ``at_least_one``."""

    rule: str = "at_least_one"
    m: int | None = None

    def __post_init__(self):
        if self.rule not in ("at_least_one", "exactly"):
            raise ValueError(f"unknown cardinality rule {self.rule!r}")
        if self.rule == "exactly" and (self.m is None or self.m < 1):
            raise ValueError("exactly-m cardinality needs m >= 1")

    def sizes(self, n: int) -> range:
        if self.rule == "exactly":
            return range(self.m, self.m + 1) if self.m <= n else range(0)
        return range(1, n + 1)


AT_LEAST_ONE = Cardinality()


def exactly(m: int) -> Cardinality:
    return Cardinality("exactly", m)


@dataclass(frozen=True)
class AgentSpec:
    start: np.ndarray
    station_slots: tuple
    battery: bat.BatteryState = field(default_factory=bat.BatteryState)
    params: bat.BatteryParams = field(default_factory=bat.BatteryParams)
    dynamics: DynamicsModel = field(default_factory=DynamicsModel)
    penalty_R: tuple = (1.0, 1.0)
    coverage: tuple | None = None
    pad: np.ndarray | None = None  # station the agent is parked on; defaults to start

    def __post_init__(self):
        object.__setattr__(self, "start", np.asarray(self.start, dtype=float))
        object.__setattr__(self, "pad", self.start if self.pad is None else np.asarray(self.pad, dtype=float))
        object.__setattr__(self, "station_slots",
                           tuple(np.asarray(s, dtype=float) for s in self.station_slots))
        if not self.station_slots:
            raise ValueError("agent needs at least one station slot")
        object.__setattr__(self, "penalty_R", tuple(float(r) for r in self.penalty_R))
        if self.coverage is not None:
            object.__setattr__(self, "coverage", tuple(int(g) for g in self.coverage))


@dataclass(frozen=True)
class SolverSettings:
    constraint_tol: float = 1e-3
    domain_tol: float = 1e-3
    grad_tol: float = 1e-6  # projected-gradient stop of the inner solve
    ftol: float = 1e-10  # relative decrease that ends an inner solve
    outer_tol: float = 1e-4  # relative cost change between outer iterations
    max_outer: int = 30
    max_inner: int = 500
    multi_starts: int = 3
    seed: int = 0
    ergodic_weight: float = 1e5
    terminal_margin: float = 0.5
    perturbation: float = 0.05
    threads: int | None = None


@dataclass(frozen=True)
class OcpProblem:
    distribution: SpatialDistribution
    basis: SpectralBasis
    agents: tuple
    horizon_T: float
    steps_N: int
    gamma: float
    b_f: float = 1.0
    enforce_b_f: bool = False
    epsilon: float = 0.05
    cardinality: Cardinality = AT_LEAST_ONE
    mode: Mode = Mode.COMPETING
    coverage_assignment: str | None = None  # None, "explicit" or "farthest"
    settings: SolverSettings = field(default_factory=SolverSettings)
    t0: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "agents", tuple(self.agents))
        if self.steps_N < 2:
            raise ValueError("steps_N must be >= 2")
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if not self.horizon_T > 0:
            raise ValueError("horizon must be positive")
        if self.coverage_assignment not in (None, "explicit", "farthest"):
            raise ValueError(f"unknown coverage assignment {self.coverage_assignment!r}")

    @property
    def dt(self) -> float:
        return self.horizon_T / self.steps_N

    @property
    def workspace(self) -> tuple[float, float]:
        return 0.0, self.basis.period / 2.0

    @property
    def n_components(self) -> int:
        return len(self.distribution.components)


@dataclass
class ContinuousSolution:
    active_set: tuple
    trajectories: list
    controls: list
    mixing: np.ndarray
    metric: float
    cost: float
    effort: float
    stations: list
    terminal_assignments: tuple
    masks: np.ndarray | None
    start_costs: list
    violation_history: list


@dataclass
class HorizonPlan:
    active_set: tuple
    trajectories: list
    controls: list
    mixing: np.ndarray
    achieved_metric: float
    cost: float
    terminal_assignments: tuple
    stations: list
    masks: np.ndarray | None = None
    effort: float = 0.0
    start_costs: list = field(default_factory=list)
    subset_costs: dict = field(default_factory=dict)

    def summary(self) -> dict:
        return {
            "active_set": list(self.active_set),
            "achieved_metric": self.achieved_metric,
            "cost": self.cost,
            "effort": self.effort,
            "mixing": [float(d) for d in self.mixing],
            "terminal_assignments": list(self.terminal_assignments),
            "stations": [[float(v) for v in s] for s in self.stations],
            "start": [[float(v) for v in t.states[0]] for t in self.trajectories],
            "end": [[float(v) for v in t.states[-1]] for t in self.trajectories],
            "masks": None if self.masks is None else [[bool(b) for b in row] for row in self.masks],
            "start_costs": [float(c) for c in self.start_costs],
        }


@dataclass(frozen=True)
class Violation:
    kind: str
    magnitude: float
    agent: int | None = None
    detail: str = ""


# ---------------------------------------------------------------------------
# subsets, assignments
# ---------------------------------------------------------------------------

def feasible_agents(problem: OcpProblem) -> list[int]:
    out = []
    for i, agent in enumerate(problem.agents):
        pred = bat.predict_flight_feasible(agent.battery, agent.params, problem.horizon_T,
                                           problem.b_f if problem.enforce_b_f else None)
        if pred.feasible:
            out.append(i)
    return out


def enumerate_active_subsets(problem: OcpProblem) -> list[tuple]:
    """Battery-feasible subsets allowed by the cardinality rule.

    Ordered by descending total SoC, ties broken lexicographically.
    """
    ok = feasible_agents(problem)
    subsets = []
    for size in problem.cardinality.sizes(len(ok)):
        subsets.extend(itertools.combinations(ok, size))
    socs = [a.battery.soc for a in problem.agents]
    return sorted(subsets, key=lambda s: (-sum(socs[i] for i in s), s))


def farthest_grouping(centers, n_groups: int) -> list[tuple]:
    """Split component indices into ``n_groups`` near-equal groups whose members are far apart.

    Maximizes the summed within-group pairwise center distance by exhaustive
    search; the first maximizer in lexicographic label order wins. Groups are
    returned sorted by their smallest member.
    """
    centers = np.asarray(centers, dtype=float)
    m = centers.shape[0]
    if n_groups < 1:
        raise ValueError("need at least one group")
    if n_groups >= m:
        return [(g % m,) for g in range(n_groups)]
    dist = np.linalg.norm(centers[:, None] - centers[None, :], axis=-1)
    base, extra = divmod(m, n_groups)
    allowed = sorted([base + 1] * extra + [base] * (n_groups - extra))
    best, best_val = None, -math.inf
    for labels in itertools.product(range(n_groups), repeat=m):
        # canonical labelling: first appearance order 0, 1, 2, ...
        seen = []
        for lab in labels:
            if lab not in seen:
                seen.append(lab)
        if seen != list(range(len(seen))) or len(seen) != n_groups:
            continue
        sizes = sorted(labels.count(g) for g in range(n_groups))
        if sizes != allowed:
            continue
        lab = np.array(labels)
        val = float(np.sum(dist[lab[:, None] == lab[None, :]])) / 2.0
        if val > best_val + 1e-12:
            best, best_val = lab, val
    groups = [tuple(int(i) for i in np.flatnonzero(best == g)) for g in range(n_groups)]
    return sorted(groups)


def coverage_masks(problem: OcpProblem, active_set: Sequence[int]) -> np.ndarray | None:
    """Per-active-agent component masks, or None for a shared team metric."""
    m = problem.n_components
    if problem.coverage_assignment is None:
        return None
    masks = np.zeros((len(active_set), m), dtype=bool)
    if problem.coverage_assignment == "explicit":
        for row, i in enumerate(active_set):
            cov = problem.agents[i].coverage
            if cov is None:
                masks[row] = True
            else:
                masks[row, list(cov)] = True
    else:
        centers = [c.center for c in problem.distribution.components]
        for row, group in enumerate(farthest_grouping(centers, len(active_set))):
            masks[row, list(group)] = True
    if np.any(masks.sum(axis=0) == 0):
        raise Infeasible(f"active set {tuple(active_set)} leaves components uncovered")
    return masks


def _occupied(problem: OcpProblem, active_set) -> set:
    # pads under grounded agents
    return {tuple(np.round(a.pad, 9)) for i, a in enumerate(problem.agents) if i not in active_set}


def station_assignments(problem: OcpProblem, active_set: Sequence[int]) -> list[tuple]:
    """Injective choices of one station slot per active agent, avoiding pads under grounded agents."""
    slots = [problem.agents[i].station_slots for i in active_set]
    taken = _occupied(problem, active_set)
    out = []
    for choice in itertools.product(*[range(len(s)) for s in slots]):
        pts = [tuple(np.round(slots[a][c], 9)) for a, c in enumerate(choice)]
        if len(set(pts)) == len(pts) and not taken.intersection(pts):
            out.append(choice)
    return out


# ---------------------------------------------------------------------------
# continuous solve
# ---------------------------------------------------------------------------

def project_capped_simplex(v: np.ndarray, cap: float = 1.0) -> np.ndarray:
    """Euclidean projection onto ``{x >= 0, sum(x) <= cap}``."""
    x = np.maximum(v, 0.0)
    if x.sum() <= cap:
        return x
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - cap
    idx = np.arange(1, v.size + 1)
    rho = np.nonzero(u - css / idx > 0)[0][-1]
    return np.maximum(v - css[rho] / (rho + 1.0), 0.0)


class _Transcription:
    """Objective, constraints and gradients for one (subset, station assignment)."""

    def __init__(self, problem: OcpProblem, active_set, stations, masks):
        self.p = problem
        self.active = tuple(active_set)
        self.na = len(active_set)
        self.N = problem.steps_N
        self.dt = problem.dt
        self.starts = np.array([problem.agents[i].start for i in active_set])
        self.stations = np.array(stations, dtype=float)
        self.R = np.array([problem.agents[i].penalty_R for i in active_set])
        self.lo_u = np.array([problem.agents[i].dynamics.lower for i in active_set])
        self.hi_u = np.array([problem.agents[i].dynamics.upper for i in active_set])
        self.coop = problem.mode is Mode.COOPERATIVE
        self.m = problem.n_components
        self.masks = masks
        self.scales = None if masks is None else assignment_scales(masks, self.m)
        self.lo, self.hi = problem.workspace
        self.w = problem.settings.ergodic_weight
        self.eps_target = problem.settings.terminal_margin * problem.epsilon
        self.fixed_mixing = problem.distribution.weights
        self.nu = self.na * self.N * 2

    # x = [controls (na, N, 2) raveled, mixing (m,) if cooperative]
    def split(self, x):
        U = x[:self.nu].reshape(self.na, self.N, 2)
        delta = x[self.nu:] if self.coop else self.fixed_mixing
        return U, delta

    def states(self, U):
        Q = np.empty((self.na, self.N + 1, 2))
        Q[:, 0] = self.starts
        for j in range(self.N):
            Q[:, j + 1] = Q[:, j] + U[:, j] * self.dt
        return Q

    def project(self, x):
        U, delta = self.split(x)
        U = np.clip(U, self.lo_u[:, None, :], self.hi_u[:, None, :])
        if not self.coop:
            return U.ravel().copy()
        return np.concatenate([U.ravel(), project_capped_simplex(delta)])

    def parts(self, x):
        """Objective terms, constraint values and their gradients."""
        U, delta = self.split(x)
        Q = self.states(U)
        basis = self.p.basis.with_mixing(delta)
        E, gE_states, gE_mix = team_metric(Q[:, :-1], basis, self.scales)
        effort = 0.0
        g_effort = np.empty_like(U)
        for a in range(self.na):
            e, g = control_effort(ControlSequence(U[a], self.dt), self.R[a])
            effort += e / self.na
            g_effort[a] = g / self.na
        # u_j moves samples q_{j+1}..q_{N-1}
        gE_U = np.zeros_like(U)
        gE_U[:, :-1] = np.cumsum(gE_states[:, :0:-1], axis=1)[:, ::-1] * self.dt
        diff = Q[:, -1] - self.stations
        term = (np.sum(diff * diff, axis=1) - self.eps_target ** 2) / self.p.epsilon ** 2
        g_term_end = 2.0 * diff / self.p.epsilon ** 2
        below = np.minimum(Q[:, 1:] - self.lo, 0.0)
        above = np.maximum(Q[:, 1:] - self.hi, 0.0)
        dom = float(np.sum(below ** 2 + above ** 2))
        g_dom_states = 2.0 * (below + above)
        return dict(U=U, delta=delta, Q=Q, E=E, gE_U=gE_U, gE_mix=gE_mix, effort=effort,
                    g_effort=g_effort, term=term, g_term_end=g_term_end, dom=dom,
                    g_dom_states=g_dom_states)

    def cost(self, parts):
        c = parts["effort"] + self.w * parts["E"]
        if self.coop:
            c -= float(np.sum(parts["delta"]))
        return c

    def excursion(self, parts) -> float:
        Q = parts["Q"]
        return max(float(np.max(self.lo - Q)), float(np.max(Q - self.hi)), 0.0)

    def violation(self, parts) -> float:
        """Constraint excess beyond tolerance; zero means feasible."""
        s = self.p.settings
        dist = np.sqrt(np.sum((parts["Q"][:, -1] - self.stations) ** 2, axis=1))
        excursion = self.excursion(parts)
        mix_excess = float(np.sum(parts["delta"])) - 1.0 if self.coop else 0.0
        return max(parts["E"] - self.p.gamma - s.constraint_tol,
                   float(np.max(dist)) - self.p.epsilon,
                   excursion - s.domain_tol,
                   mix_excess - 1e-9,
                   0.0)

    def bounds(self):
        lo = np.repeat(self.lo_u[:, None, :], self.N, axis=1).ravel()
        hi = np.repeat(self.hi_u[:, None, :], self.N, axis=1).ravel()
        if self.coop:
            lo = np.concatenate([lo, np.zeros(self.m)])
            hi = np.concatenate([hi, np.ones(self.m)])
        return np.column_stack([lo, hi])

    def augmented(self, x, lam, rho, mu):
        """Augmented Lagrangian value and gradient.

        ``lam`` holds the multipliers ``(ergodic bound, mixing sum, landing per agent)``.
        """
        lam_e, lam_s, lam_t = lam[0], lam[1], lam[2:]
        P = self.parts(x)
        gamma = self.p.gamma
        val = self.cost(P)
        gU = self.w * P["gE_U"] + P["g_effort"]
        gmix = self.w * P["gE_mix"] - (1.0 if self.coop else 0.0)

        # ergodic bound, scaled by gamma
        ge = (P["E"] - gamma) / gamma
        me = max(0.0, lam_e + rho * ge)
        val += (me * me - lam_e * lam_e) / (2.0 * rho)
        gU += me / gamma * P["gE_U"]
        gmix = gmix + me / gamma * P["gE_mix"]

        if self.coop:
            ms = max(0.0, lam_s + rho * (float(np.sum(P["delta"])) - 1.0))
            val += (ms * ms - lam_s * lam_s) / (2.0 * rho)
            gmix = gmix + ms

        # terminal landing, one per agent
        mt = np.maximum(0.0, lam_t + rho * P["term"])
        val += float(np.sum(mt * mt - lam_t * lam_t)) / (2.0 * rho)
        g_end = mt[:, None] * P["g_term_end"]

        # domain penalty on q_1..q_N
        val += mu * P["dom"]
        g_states = mu * P["g_dom_states"]
        g_states[:, -1] += g_end
        # every control u_j shifts q_{j+1..N} by dt
        gU += np.cumsum(g_states[:, ::-1], axis=1)[:, ::-1] * self.dt

        grad = gU.ravel()
        if self.coop:
            grad = np.concatenate([grad, gmix])
        return val, grad, P

    def constraints(self, P):
        ge = (P["E"] - self.p.gamma) / self.p.gamma
        gs = float(np.sum(P["delta"])) - 1.0 if self.coop else 0.0
        return np.concatenate([[ge, gs], P["term"]])

    def multiplier_update(self, P, lam, rho):
        return np.maximum(0.0, lam + rho * self.constraints(P))


def _initial_controls(tr: _Transcription, start_index: int, settings: SolverSettings) -> np.ndarray:
    """Straight line to the assigned station plus a seeded perturbation."""
    T = tr.N * tr.dt
    base = np.repeat(((tr.stations - tr.starts) / T)[:, None, :], tr.N, axis=1)
    rng = np.random.default_rng([settings.seed, start_index])
    noise = rng.normal(0.0, settings.perturbation, size=base.shape)
    # keep the net displacement so the initial guess still lands
    noise -= noise.mean(axis=1, keepdims=True)
    return base + (noise if start_index > 0 else 0.0 * noise)


def _solve_one(tr: _Transcription, x0: np.ndarray, settings: SolverSettings):
    """Augmented-Lagrangian outer loop around bounded L-BFGS inner solves.

    An outer iterate that raises the constraint violation is rejected and
    the penalty grows, so the recorded violation history never increases.
    """
    lam = np.zeros(2 + tr.na)
    rho, mu = 10.0, 1e3
    bounds = tr.bounds()
    x = np.clip(x0, bounds[:, 0], bounds[:, 1])
    P = tr.parts(x)
    viol = tr.violation(P)
    history = [viol]
    prev_cost = tr.cost(P)
    stalled = False
    x_start = x
    for outer in range(settings.max_outer):
        res = minimize(lambda z: tr.augmented(z, lam, rho, mu)[:2], x_start, jac=True, method="L-BFGS-B",
                       bounds=bounds, options=dict(maxiter=settings.max_inner, ftol=settings.ftol,
                                                   gtol=settings.grad_tol))
        stalled = res.status != 0
        x_new = x_start = np.clip(res.x, bounds[:, 0], bounds[:, 1])
        P_new = tr.parts(x_new)
        viol_new = tr.violation(P_new)
        log.debug("outer %d: %d inner iterations, cost %.6g, violation %.3g",
                  outer, res.nit, tr.cost(P_new), viol_new)
        if viol_new <= viol:
            x, P, viol = x_new, P_new, viol_new
            history.append(viol)
            lam = tr.multiplier_update(P, lam, rho)
        else:
            # keep the accepted iterate but continue from the rejected one
            rho = min(rho * 10.0, 1e8)
            lam = tr.multiplier_update(P_new, lam, rho)
        if tr.excursion(P_new) > 0.0:
            mu = min(mu * 10.0, 1e9)
        cost = tr.cost(P_new)
        if viol_new == 0.0 and outer > 0 and abs(prev_cost - cost) <= settings.outer_tol * max(1.0, abs(cost)):
            break
        if viol > 0.0 and outer > 0:
            rho = min(rho * 10.0, 1e8)
        prev_cost = cost
    if tr.coop:
        # clear rounding-level excess in the mixing sum
        x = tr.project(x)
        P = tr.parts(x)
        viol = tr.violation(P)
    return x, P, viol, history, stalled and viol > 0.0


def solve_continuous(problem: OcpProblem, active_set: Sequence[int]) -> ContinuousSolution:
    """Best multi-start solution for one active subset over all station assignments.

    Raises :class:`Infeasible` if no start meets every constraint and
    :class:`BudgetExceeded` if every failing start stalled.
    """
    active_set = tuple(sorted(active_set))
    if not active_set:
        raise ValueError("active set must be nonempty")
    settings = problem.settings
    masks = coverage_masks(problem, active_set)
    best = None
    start_costs = []
    reasons = []
    for choice in station_assignments(problem, active_set):
        stations = [problem.agents[i].station_slots[c] for i, c in zip(active_set, choice)]
        tr = _Transcription(problem, active_set, stations, masks)
        for s in range(max(1, settings.multi_starts)):
            x0 = _initial_controls(tr, s, settings).ravel()
            if tr.coop:
                x0 = np.concatenate([x0, np.full(tr.m, 1.0 / tr.m)])
            x, P, viol, history, stalled = _solve_one(tr, x0, settings)
            if viol > 0.0:
                reasons.append(("stalled" if stalled else "infeasible", viol))
                continue
            cost = tr.cost(P)
            start_costs.append(cost)
            if best is None or cost < best[0]:
                best = (cost, tr, choice, P, history)
    if best is None:
        if reasons and all(r[0] == "stalled" for r in reasons):
            raise BudgetExceeded(f"inner solver stalled for subset {active_set}")
        worst = min(r[1] for r in reasons) if reasons else math.inf
        raise Infeasible(f"subset {active_set}: smallest constraint excess {worst:.3g}")
    cost, tr, choice, P, history = best
    trajs, ctrls = [], []
    for a, i in enumerate(active_set):
        ctrl = ControlSequence(P["U"][a], tr.dt)
        trajs.append(rollout(problem.agents[i].dynamics, problem.agents[i].start, ctrl, problem.t0))
        ctrls.append(ctrl)
    return ContinuousSolution(
        active_set=active_set, trajectories=trajs, controls=ctrls,
        mixing=np.array(P["delta"], dtype=float), metric=P["E"], cost=cost,
        effort=P["effort"], stations=[np.array(s) for s in tr.stations],
        terminal_assignments=tuple(choice), masks=masks,
        start_costs=start_costs, violation_history=history,
    )


def _try_subset(problem, subset):
    try:
        return subset, solve_continuous(problem, subset), None
    except (Infeasible, BudgetExceeded) as exc:
        return subset, None, exc


def _threads(settings: SolverSettings) -> int:
    if settings.threads is not None:
        return max(1, settings.threads)
    env = os.environ.get("ERGO_THREADS")
    return max(1, int(env)) if env else 1


def solve_horizon(problem: OcpProblem) -> HorizonPlan:
    """Minimum-cost plan over every battery-feasible active subset."""
    if not feasible_agents(problem):
        raise NoFeasibleAgent("no agent can fly a full horizon")
    subsets = enumerate_active_subsets(problem)
    if not subsets:
        raise NoFeasibleAgent(f"no subset satisfies {problem.cardinality} with battery-feasible agents")
    workers = _threads(problem.settings)
    if workers > 1 and len(subsets) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda s: _try_subset(problem, s), subsets))
    else:
        results = [_try_subset(problem, s) for s in subsets]
    best = None
    failures = []
    for subset, sol, exc in results:
        if sol is None:
            failures.append(f"{subset}: {exc}")
            continue
        if best is None or (sol.cost, sol.active_set) < (best.cost, best.active_set):
            best = sol
    if best is None:
        raise ErgodicityUnreachable("no active subset met every constraint: " + "; ".join(failures))
    return HorizonPlan(
        active_set=best.active_set, trajectories=best.trajectories, controls=best.controls,
        mixing=best.mixing, achieved_metric=best.metric, cost=best.cost,
        terminal_assignments=best.terminal_assignments, stations=best.stations,
        masks=best.masks, effort=best.effort, start_costs=best.start_costs,
        subset_costs={s: (sol.cost if sol is not None else None) for s, sol, _ in results},
    )


# ---------------------------------------------------------------------------
# independent certification
# ---------------------------------------------------------------------------

def check_plan(plan: HorizonPlan, problem: OcpProblem) -> list[Violation]:
    """Re-check every constraint of a plan from scratch; empty list certifies it."""
    out: list[Violation] = []
    s = problem.settings
    lo, hi = problem.workspace
    n_active = len(plan.active_set)
    if len(plan.trajectories) != n_active or len(plan.controls) != n_active:
        out.append(Violation("shape", float(abs(len(plan.trajectories) - n_active)),
                             detail="trajectory count differs from active set"))
        return out
    if n_active not in problem.cardinality.sizes(len(problem.agents)):
        out.append(Violation("cardinality", float(n_active), detail=str(problem.cardinality)))

    mixing = np.asarray(plan.mixing, dtype=float)
    if np.any(mixing < -1e-12) or mixing.sum() > 1.0 + 1e-9:
        out.append(Violation("mixing", float(max(-mixing.min(), mixing.sum() - 1.0, 0.0))))

    landed = []
    for row, i in enumerate(plan.active_set):
        agent = problem.agents[i]
        traj = plan.trajectories[row]
        ctrl = plan.controls[row]
        Q = traj.states
        if Q.shape[0] != problem.steps_N + 1:
            out.append(Violation("steps", float(abs(Q.shape[0] - problem.steps_N - 1)), i))
            continue
        start_err = float(np.linalg.norm(Q[0] - agent.start))
        if start_err > 1e-9:
            out.append(Violation("start", start_err, i))
        u = ctrl.controls
        excess_u = max(float(np.max(agent.dynamics.lower - u)), float(np.max(u - agent.dynamics.upper)), 0.0)
        if excess_u > 1e-9:
            out.append(Violation("control_bounds", excess_u, i))
        replay = agent.start + np.concatenate([np.zeros((1, 2)), np.cumsum(u * ctrl.dt, axis=0)])
        dyn_err = float(np.max(np.abs(replay - Q)))
        if dyn_err > 1e-9:
            out.append(Violation("dynamics", dyn_err, i))
        excursion = max(float(np.max(lo - Q)), float(np.max(Q - hi)), 0.0)
        if excursion > s.domain_tol:
            out.append(Violation("domain", excursion, i, f"max excursion {excursion:.4g} m"))
        slot = agent.station_slots[plan.terminal_assignments[row]]
        land_err = float(np.linalg.norm(Q[-1] - slot))
        if land_err > problem.epsilon:
            out.append(Violation("terminal", land_err - problem.epsilon, i,
                                 f"landed {land_err:.4g} m from station"))
        landed.append(tuple(np.round(slot, 9)))
        # battery, re-simulated step by step
        state = agent.battery
        try:
            for _ in range(problem.steps_N):
                state = bat.propagate(state, agent.params, agent.params.flight_current_I,
                                      problem.dt, problem.dt)
        except bat.Depleted as exc:
            out.append(Violation("battery", 1.0, i, str(exc)))
        else:
            if problem.enforce_b_f and state.soc > problem.b_f:
                out.append(Violation("b_f", state.soc - problem.b_f, i))
    clash = len(landed) - len(set(landed)) + len(_occupied(problem, plan.active_set).intersection(landed))
    if clash:
        out.append(Violation("station_collision", float(clash)))

    try:
        masks = coverage_masks(problem, plan.active_set)
    except Infeasible as exc:
        out.append(Violation("coverage", 1.0, detail=str(exc)))
        masks = plan.masks
    value = evaluate(plan.trajectories, problem.basis.with_mixing(mixing), masks).metric_value
    if value > problem.gamma + s.constraint_tol:
        out.append(Violation("ergodicity", value - problem.gamma, detail=f"metric {value:.6g}"))
    if abs(value - plan.achieved_metric) > 1e-9 * max(1.0, abs(value)):
        out.append(Violation("metric_mismatch", abs(value - plan.achieved_metric)))
    return out
