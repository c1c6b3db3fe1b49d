"""Trajectory Fourier coefficients and the ergodic metric with analytic gradients."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _kernels
from .spatial import FourierIndexSet, SpectralBasis


class IndexSetMismatch(ValueError):
    pass


@dataclass(frozen=True)
class Trajectory:
    """Sampled states ``q_0 .. q_N`` spaced ``dt`` apart starting at ``t0``.

    Coefficients use the left-Riemann rule, so ``q_N`` only marks where the
    last interval ends.
    """

    states: np.ndarray
    dt: float
    t0: float = 0.0

    def __post_init__(self):
        states = np.atleast_2d(np.asarray(self.states, dtype=float))
        if states.shape[0] < 1:
            raise ValueError("trajectory needs at least one state")
        if not np.all(np.isfinite(states)):
            raise ValueError("trajectory states must be finite")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        object.__setattr__(self, "states", states)

    @property
    def num_steps(self) -> int:
        return self.states.shape[0] - 1

    @property
    def duration(self) -> float:
        return self.num_steps * self.dt

    @property
    def samples(self) -> np.ndarray:
        return self.states[:-1]


@dataclass(frozen=True)
class TrajectoryCoefficients:
    coeffs: np.ndarray
    index_set: FourierIndexSet
    period: float


@dataclass(frozen=True)
class ErgodicEvaluation:
    metric_value: float
    gradient_states: list
    gradient_mixing: np.ndarray


def basis_at(q, k, L: float) -> complex:
    q = np.asarray(q, dtype=float)
    k = np.asarray(k, dtype=float)
    psi = 2.0 * np.pi / L
    out = 1.0 / L ** q.size
    for qd, kd in zip(q, k):
        out *= complex(np.cos(kd * qd * psi), -np.sin(kd * qd * psi))
    return out


def _check_traj(traj: Trajectory, D: int):
    if traj.num_steps < 1:
        raise ValueError("trajectory needs at least two states")
    if traj.states.shape[1] != D:
        raise ValueError(f"trajectory dimension {traj.states.shape[1]} != {D}")


def trajectory_coefficients(traj: Trajectory, index_set: FourierIndexSet, L: float) -> TrajectoryCoefficients:
    _check_traj(traj, index_set.dimension)
    c = _kernels.fourier_coefficients(traj.samples, index_set.indices, 2.0 * np.pi / L, 1.0 / L ** index_set.dimension)
    return TrajectoryCoefficients(c, index_set, L)


def mirrored_coefficients(traj: Trajectory, index_set: FourierIndexSet, L: float) -> TrajectoryCoefficients:
    """Coefficients of the trajectory reflected across every axis.

    The workspace ``[0, L/2]^D`` is mirrored the same way the target mixture
    is, so the result is real: the time average of ``prod_d cos(k_d q_d psi) / L^D``.
    These are the coefficients the metric compares against the target.
    """
    _check_traj(traj, index_set.dimension)
    c = _kernels.mirrored_coefficients(traj.samples, index_set.indices, 2.0 * np.pi / L,
                                       1.0 / L ** index_set.dimension)
    return TrajectoryCoefficients(c, index_set, L)


def _check_basis(basis: SpectralBasis, coeffs_len: int):
    if coeffs_len != len(basis.index_set):
        raise IndexSetMismatch("coefficients and basis index sets differ")


def assignment_scales(masks, n_components: int) -> np.ndarray:
    """Per-agent multipliers on the mixing weights for coverage masks.

    Agent ``j`` sees Gaussian ``g`` with weight ``delta_g * n / count_g`` when
    ``g`` is in its mask, where ``count_g`` is how many agents share ``g``.
    The agents' targets then average back to the full mixture.
    """
    masks = np.asarray(masks, dtype=bool).reshape(-1, n_components)
    counts = masks.sum(axis=0)
    if np.any(counts == 0):
        missing = np.flatnonzero(counts == 0).tolist()
        raise ValueError(f"components {missing} are not covered by any agent")
    return masks * (masks.shape[0] / counts)[None, :]


def _residuals(coeffs, basis, scales):
    # value, per-agent residual c - phi, and d(value)/d(mixing)
    lam = basis.weights
    unit = basis.component_coeffs.real
    n = len(coeffs)
    if scales is None:
        r = sum(coeffs) / n - basis.distribution_coeffs.real
        value = 0.5 * float(np.sum(lam * r * r))
        return value, [r] * n, -(lam * r) @ unit
    if scales.shape[0] != n:
        raise ValueError("one mask per trajectory required")
    residuals = []
    value = 0.0
    gmix = np.zeros(unit.shape[1])
    for c, scale in zip(coeffs, scales):
        r = c - unit @ (basis.mixing * scale)
        residuals.append(r)
        value += 0.5 * float(np.sum(lam * r * r)) / n
        gmix -= scale * ((lam * r) @ unit) / n
    return value, residuals, gmix


def _consts(basis):
    L = basis.period
    return 2.0 * np.pi / L, 1.0 / L ** basis.dimension


def team_metric(samples, basis: SpectralBasis, scales=None):
    """Array-level team metric used by the solver's inner loop.

    ``samples`` is (n, N, D): the left-Riemann samples of each agent. Returns
    ``(value, grad_samples, grad_mixing)`` with ``grad_samples`` shaped like
    ``samples``. ``scales`` comes from :func:`assignment_scales`; ``None``
    means one shared time average against the full mixture.
    """
    samples = np.asarray(samples, dtype=float)
    n = samples.shape[0]
    if n == 0:
        raise ValueError("at least one trajectory required")
    psi, norm = _consts(basis)
    coeffs = [_kernels.mirrored_coefficients(samples[j], basis.kvecs, psi, norm) for j in range(n)]
    value, residuals, gmix = _residuals(coeffs, basis, scales)
    grads = np.empty_like(samples)
    for j in range(n):
        grads[j] = _kernels.mirrored_gradient(samples[j], basis.kvecs, psi, norm,
                                              basis.weights * residuals[j] / n)
    return value, grads, gmix


def _evaluate(trajs, basis, scales):
    if len(trajs) == 0:
        raise ValueError("at least one trajectory required")
    for traj in trajs:
        _check_traj(traj, basis.dimension)
    n_steps = {t.num_steps for t in trajs}
    if len(n_steps) != 1:
        raise ValueError("all trajectories must have the same number of steps")
    value, grads, gmix = team_metric(np.stack([t.samples for t in trajs]), basis, scales)
    full = []
    for t, g in zip(trajs, grads):
        out = np.zeros_like(t.states)
        out[:-1] = g
        full.append(out)
    return ErgodicEvaluation(value, full, gmix)


def evaluate(trajs: Sequence[Trajectory], basis: SpectralBasis, masks=None) -> ErgodicEvaluation:
    """Ergodic metric of a team, with gradients.

    Without ``masks`` all agents share one time average (team metric). With
    ``masks`` each agent is scored against its own assigned Gaussians and the
    per-agent metrics are averaged.
    """
    scales = None if masks is None else assignment_scales(masks, basis.component_coeffs.shape[1])
    return _evaluate(trajs, basis, scales)


def metric_multi(trajs: Sequence[Trajectory], basis: SpectralBasis) -> ErgodicEvaluation:
    return _evaluate(trajs, basis, None)


def metric_single(traj: Trajectory, basis: SpectralBasis) -> ErgodicEvaluation:
    return _evaluate([traj], basis, None)


def metric_from_coeffs(coeffs: TrajectoryCoefficients, basis: SpectralBasis) -> float:
    """``0.5 * sum Lambda_k |c_k - phi_k|^2`` for precomputed coefficients."""
    _check_basis(basis, len(coeffs.coeffs))
    r = coeffs.coeffs - basis.distribution_coeffs
    return 0.5 * float(np.sum(basis.weights * np.abs(r) ** 2))


def prefix_metrics(trajs: Sequence[Trajectory], basis: SpectralBasis, masks=None) -> np.ndarray:
    """Metric of every common prefix ``q_0..q_j`` (j = 0..N-1) of the team."""
    n = len(trajs)
    if n == 0:
        raise ValueError("at least one trajectory required")
    psi, norm = _consts(basis)
    prefixes = [_kernels.mirrored_prefix(t.samples, basis.kvecs, psi, norm) for t in trajs]
    lam = basis.weights
    unit = basis.component_coeffs.real
    if masks is None:
        r = sum(prefixes) / n - basis.distribution_coeffs.real
        return 0.5 * np.sum(lam * r * r, axis=1)
    scales = assignment_scales(masks, unit.shape[1])
    out = np.zeros(prefixes[0].shape[0])
    for pc, scale in zip(prefixes, scales):
        r = pc - unit @ (basis.mixing * scale)
        out += 0.5 * np.sum(lam * r * r, axis=1) / n
    return out


def reconstruct_time_average(coeffs: TrajectoryCoefficients, grid) -> np.ndarray:
    """Real part of the truncated spectral reconstruction of the time-average density."""
    grid = np.atleast_2d(np.asarray(grid, dtype=float))
    L = coeffs.period
    psi = 2.0 * np.pi / L
    phase = psi * grid @ coeffs.index_set.indices.T
    return np.real(np.exp(1j * phase) @ coeffs.coeffs)
