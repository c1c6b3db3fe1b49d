"""Agent motion models."""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .ergodic import Trajectory


class ControlOutOfBounds(ValueError):
    pass


class ModelKind(enum.Enum):
    SINGLE_INTEGRATOR_2D = "single_integrator_2d"


@dataclass(frozen=True)
class DynamicsModel:
    kind: ModelKind = ModelKind.SINGLE_INTEGRATOR_2D
    control_bounds: tuple = ((-1.0, 1.0), (-1.0, 1.0))  # m/s per axis

    def __post_init__(self):
        bounds = tuple((float(lo), float(hi)) for lo, hi in self.control_bounds)
        if len(bounds) != self.control_dim:
            raise ValueError(f"expected {self.control_dim} control bounds")
        for lo, hi in bounds:
            if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
                raise ValueError(f"invalid control bound ({lo}, {hi})")
        object.__setattr__(self, "control_bounds", bounds)

    @property
    def state_dim(self) -> int:
        return 2

    @property
    def control_dim(self) -> int:
        return 2

    @property
    def lower(self) -> np.ndarray:
        return np.array([b[0] for b in self.control_bounds])

    @property
    def upper(self) -> np.ndarray:
        return np.array([b[1] for b in self.control_bounds])

    def clip(self, u: np.ndarray) -> np.ndarray:
        return np.clip(u, self.lower, self.upper)


@dataclass(frozen=True)
class ControlSequence:
    controls: np.ndarray
    dt: float

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        object.__setattr__(self, "controls", np.asarray(self.controls, dtype=float).reshape(-1, 2))

    def __len__(self):
        return self.controls.shape[0]


def _check_bounds(model, u, tol=1e-12):
    if np.any(u < model.lower - tol) or np.any(u > model.upper + tol):
        raise ControlOutOfBounds(f"control {np.asarray(u).tolist()} outside {model.control_bounds}")


def step(model: DynamicsModel, q, u, dt: float) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    u = np.asarray(u, dtype=float)
    _check_bounds(model, u)
    return q + u * dt


def rollout(model: DynamicsModel, q0, controls: ControlSequence, t0: float = 0.0) -> Trajectory:
    q0 = np.asarray(q0, dtype=float)
    if not np.all(np.isfinite(q0)):
        raise ValueError("initial state must be finite")
    u = controls.controls
    if len(u):
        _check_bounds(model, u)
    states = np.empty((len(u) + 1, q0.size))
    states[0] = q0
    # sequential fold keeps rollout bit-identical to repeated step()
    for j in range(len(u)):
        states[j + 1] = states[j] + u[j] * controls.dt
    return Trajectory(states, controls.dt, t0)


def control_effort(controls: ControlSequence, penalty_R) -> tuple[float, np.ndarray]:
    """``sum_j u_j^T R u_j dt`` and its gradient ``2 R u_j dt``."""
    R = np.asarray(penalty_R, dtype=float)
    if R.ndim == 2:
        if np.any(R != np.diag(np.diag(R))):
            raise ValueError("penalty_R must be diagonal")
        R = np.diag(R)
    if np.any(R <= 0):
        raise ValueError("penalty_R entries must be positive")
    u = controls.controls
    value = float(np.sum(u * u * R) * controls.dt)
    return value, 2.0 * u * R * controls.dt
