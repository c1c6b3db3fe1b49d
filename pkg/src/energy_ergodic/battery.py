"""Second-order RC equivalent-circuit battery model.

State is ``(v1, v2, soc)``: the voltages across the two RC elements and the
normalized state of charge. The model is linear time-invariant under a
piecewise-constant current, so every step below is the exact solution.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np

from . import _kernels

DEFAULT_OCV = ((0.0, 3.0), (0.5, 3.7), (1.0, 4.2))


class Depleted(RuntimeError):
    """State of charge left (0, 1]."""


class FitDiverged(RuntimeError):
    pass


@dataclass(frozen=True)
class BatteryParams:
    # placeholder values, not identified from hardware
    R: float = 0.05
    R1: float = 0.01
    C1: float = 500.0
    R2: float = 0.02
    C2: float = 3000.0
    capacity_Q: float = 0.25  # Ah
    zeta: float = 1.0
    ocv_curve: tuple = field(default=DEFAULT_OCV)
    recharge_eta: float = 0.95
    recharge_theta: float = 0.25
    flight_current_I: float = 1.0  # A

    def __post_init__(self):
        for name in ("R", "R1", "C1", "R2", "C2", "capacity_Q", "flight_current_I"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        curve = tuple((float(s), float(v)) for s, v in self.ocv_curve)
        if len(curve) < 2:
            raise ValueError("ocv_curve needs at least two points")
        socs = np.array([p[0] for p in curve])
        volts = np.array([p[1] for p in curve])
        if np.any(np.diff(socs) <= 0):
            raise ValueError("ocv_curve SoC breakpoints must be strictly increasing")
        if np.any(np.diff(volts) < 0):
            raise ValueError("ocv_curve must be nondecreasing")
        object.__setattr__(self, "ocv_curve", curve)
        eta, theta = self.recharge_eta, self.recharge_theta
        if not 0 < eta <= 1:
            raise ValueError("recharge_eta must lie in (0, 1]")
        # with the clamp at 1 this keeps the recharged soc inside (0, 1]
        if not 0.0 <= theta <= 1.0:
            raise ValueError("recharge_theta must lie in [0, 1]")

    @property
    def tau1(self) -> float:
        return self.R1 * self.C1

    @property
    def tau2(self) -> float:
        return self.R2 * self.C2

    def ocv(self, soc):
        socs, volts = zip(*self.ocv_curve)
        return np.interp(soc, socs, volts)

    def drain(self, current: float, duration: float) -> float:
        """SoC consumed by ``current`` amperes over ``duration`` seconds."""
        return self.zeta * current * duration / (self.capacity_Q * 3600.0)


@dataclass(frozen=True)
class BatteryState:
    v1: float = 0.0
    v2: float = 0.0
    soc: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.v1) and math.isfinite(self.v2)):
            raise ValueError("RC voltages must be finite")
        if not 0.0 < self.soc <= 1.0:
            raise Depleted(f"soc {self.soc} outside (0, 1]")


class FlightPrediction(NamedTuple):
    feasible: bool
    terminal_soc: float


def _rc_step(v, current, r, tau, h):
    a = math.exp(-h / tau)
    return a * v + (1.0 - a) * current * r


def propagate(state: BatteryState, params: BatteryParams, current: float,
              duration: float, dt: float) -> BatteryState:
    """Advance the battery under constant ``current`` for ``duration`` seconds."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if duration < 0:
        raise ValueError("duration must be nonnegative")
    v1, v2, soc = state.v1, state.v2, state.soc
    remaining = duration
    while remaining > 0:
        h = min(dt, remaining)
        if remaining - h < 1e-12 * max(duration, 1.0):
            h = remaining
        v1 = _rc_step(v1, current, params.R1, params.tau1, h)
        v2 = _rc_step(v2, current, params.R2, params.tau2, h)
        soc = soc - params.drain(current, h)
        if not 0.0 < soc <= 1.0:
            raise Depleted(f"soc reached {soc:.6f} after {duration - remaining + h:.3f} s")
        remaining -= h
    return BatteryState(v1, v2, soc)


def terminal_voltage(state: BatteryState, params: BatteryParams, current: float) -> float:
    if not 0.0 < state.soc <= 1.0:
        raise Depleted(f"soc {state.soc} outside (0, 1]")
    return float(params.ocv(state.soc)) - state.v1 - state.v2 - current * params.R


def recharge(state: BatteryState, params: BatteryParams, num_horizons: int = 1) -> BatteryState:
    """Apply ``soc <- min(eta * soc + theta, 1)`` once per grounded horizon."""
    if num_horizons < 1:
        raise ValueError("num_horizons must be positive")
    soc = state.soc
    for _ in range(num_horizons):
        soc = min(params.recharge_eta * soc + params.recharge_theta, 1.0)
    return BatteryState(0.0, 0.0, soc)


def predict_flight_feasible(state: BatteryState, params: BatteryParams, horizon: float,
                            b_f: float | None = None) -> FlightPrediction:
    """Whether one full horizon at flight current keeps soc in (0, 1].

    ``b_f``, when given, adds the literal terminal check ``soc(t_f) <= b_f``.
    """
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    terminal = state.soc - params.drain(params.flight_current_I, horizon)
    feasible = terminal > 0.0 and state.soc <= 1.0
    if b_f is not None:
        feasible = feasible and terminal <= b_f
    return FlightPrediction(bool(feasible), float(terminal))


# ---------------------------------------------------------------------------
# identification
# ---------------------------------------------------------------------------

FIT_FIELDS = ("R", "R1", "C1", "R2", "C2")


def simulate_voltage(times, amps, params: BatteryParams, initial: BatteryState | None = None) -> np.ndarray:
    """Terminal voltage at each sample under piecewise-constant current.

    ``amps[i]`` is held over ``[times[i], times[i+1])``.
    """
    initial = initial or BatteryState()
    times = np.asarray(times, dtype=float)
    amps = np.asarray(amps, dtype=float)
    v1, v2 = _kernels.rc_trace(times, amps, params.tau1, params.tau2, params.R1, params.R2,
                               initial.v1, initial.v2)
    charge = np.concatenate(([0.0], np.cumsum(amps[:-1] * np.diff(times))))
    soc = initial.soc - params.zeta * charge / (params.capacity_Q * 3600.0)
    return params.ocv(soc) - v1 - v2 - amps * params.R


def _sse(trace, params, initial):
    resid = simulate_voltage(trace[:, 0], trace[:, 2], params, initial) - trace[:, 1]
    return float(resid @ resid)


def identify_parameters(voltage_trace, initial_guess: BatteryParams,
                        initial_state: BatteryState | None = None,
                        max_sweeps: int = 2000, min_step: float = 1e-7) -> BatteryParams:
    """Fit R, R1, C1, R2, C2 to a ``(t, volts, amps)`` trace.

    A constant-current trace only pins R and R1 + R2 jointly; the fit still
    lowers the residual but the split is arbitrary.

    Coordinate descent in log-parameter space with multiplicative steps that
    halve whenever no coordinate move improves the squared residual.
    """
    trace = np.asarray(voltage_trace, dtype=float)
    if trace.ndim != 2 or trace.shape[1] != 3 or trace.shape[0] < 10:
        raise ValueError("trace must have at least 10 rows of (time, volts, amps)")
    initial_state = initial_state or BatteryState()

    x = np.log([getattr(initial_guess, f) for f in FIT_FIELDS])

    def cost(logp):
        return _sse(trace, replace(initial_guess, **dict(zip(FIT_FIELDS, np.exp(logp)))), initial_state)

    f0 = cost(x)
    if not math.isfinite(f0):
        raise FitDiverged("residual is not finite at the initial guess")
    best = f0
    steps = np.full(x.size, 0.5)
    for _ in range(max_sweeps):
        improved = False
        for i in range(x.size):
            for sign in (1.0, -1.0):
                trial = x.copy()
                trial[i] += sign * steps[i]
                f = cost(trial)
                if f < best:
                    # keep walking while it pays
                    while True:
                        ahead = trial.copy()
                        ahead[i] += sign * steps[i]
                        fa = cost(ahead)
                        if not fa < f:
                            break
                        trial, f = ahead, fa
                    x, best, improved = trial, f, True
                    break
        if not improved:
            steps *= 0.5
            if steps.max() < min_step:
                break
    if not math.isfinite(best) or best > f0:
        raise FitDiverged(f"residual {best} did not improve on {f0}")
    if best == f0 and f0 > 1e-20 * trace.shape[0]:
        raise FitDiverged("no coordinate move reduced the residual")
    return replace(initial_guess, **dict(zip(FIT_FIELDS, np.exp(x))))


def residual_rms(voltage_trace, params: BatteryParams, initial_state: BatteryState | None = None) -> float:
    trace = np.asarray(voltage_trace, dtype=float)
    return math.sqrt(_sse(trace, params, initial_state or BatteryState()) / trace.shape[0])


def load_voltage_trace(path) -> np.ndarray:
    """Read a ``t,volts,amps`` CSV into an (P, 3) array."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["t", "volts", "amps"]:
            raise ValueError(f"expected header 't,volts,amps', got {header}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise ValueError(f"line {lineno}: expected 3 fields, got {len(row)}")
            rows.append([float(v) for v in row])
    return np.array(rows, dtype=float).reshape(-1, 3)


def save_voltage_trace(path, trace) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write("t,volts,amps\n")
        for t, v, a in np.asarray(trace, dtype=float).tolist():
            fh.write(f"{t!r},{v!r},{a!r}\n")
