"""Gaussian-mixture information maps and their Fourier decomposition."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

SYMMETRY_TOL = 1e-9
PIVOT_TOL = 1e-12


class NotSPDError(ValueError):
    """A covariance matrix failed Cholesky factorization."""


def _cholesky(cov: np.ndarray) -> np.ndarray:
    if not np.allclose(cov, cov.T, rtol=0.0, atol=1e-12):
        raise NotSPDError("covariance is not symmetric")
    try:
        chol = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:
        raise NotSPDError(f"covariance is not positive definite: {exc}") from None
    if np.min(np.diag(chol)) ** 2 <= PIVOT_TOL:
        raise NotSPDError("covariance is numerically singular")
    return chol


@dataclass(frozen=True)
class GaussianComponent:
    center: np.ndarray
    covariance: np.ndarray
    mixing_weight: float

    def __post_init__(self):
        center = np.asarray(self.center, dtype=float).reshape(-1)
        cov = np.asarray(self.covariance, dtype=float)
        if cov.shape != (center.size, center.size):
            raise ValueError(f"covariance shape {cov.shape} does not match center dimension {center.size}")
        if not np.all(np.isfinite(center)):
            raise ValueError("center must be finite")
        if self.mixing_weight < 0:
            raise ValueError("mixing weight must be nonnegative")
        _cholesky(cov)
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "covariance", cov)
        object.__setattr__(self, "mixing_weight", float(self.mixing_weight))

    @property
    def dimension(self) -> int:
        return self.center.size


@dataclass(frozen=True)
class SpatialDistribution:
    """Weighted Gaussian mixture over a box workspace.

    The physical workspace is ``[0, L/2]^D``. After :func:`symmetrize` the
    mixture lives on ``[-L/2, L/2]^D`` and ``symmetric`` is set.
    """

    components: tuple[GaussianComponent, ...]
    dimension: int
    period: float
    symmetric: bool = False

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        if self.dimension < 1:
            raise ValueError("dimension must be >= 1")
        if not self.period > 0:
            raise ValueError("period must be positive")
        for comp in self.components:
            if comp.dimension != self.dimension:
                raise ValueError("component dimension does not match distribution dimension")
            lo, hi = self.workspace
            if np.any(comp.center < lo) or np.any(comp.center > hi):
                raise ValueError(f"component center {comp.center.tolist()} lies outside the workspace")
        if self.total_weight > 1.0 + 1e-12:
            raise ValueError(f"mixing weights sum to {self.total_weight} > 1")

    @property
    def workspace(self) -> tuple[float, float]:
        half = self.period / 2.0
        return (-half if self.symmetric else 0.0, half)

    @property
    def weights(self) -> np.ndarray:
        return np.array([c.mixing_weight for c in self.components])

    @property
    def total_weight(self) -> float:
        return float(sum(c.mixing_weight for c in self.components))

    def with_weights(self, weights: Sequence[float]) -> "SpatialDistribution":
        weights = np.asarray(weights, dtype=float)
        if weights.shape != (len(self.components),):
            raise ValueError("one weight per component required")
        comps = [GaussianComponent(c.center, c.covariance, w) for c, w in zip(self.components, weights)]
        return SpatialDistribution(comps, self.dimension, self.period, self.symmetric)


@dataclass(frozen=True)
class FourierIndexSet:
    frequencies_per_axis: int
    dimension: int
    indices: np.ndarray = field(repr=False)

    def __len__(self):
        return self.indices.shape[0]


@dataclass(frozen=True)
class SpectralBasis:
    """Index set, weights and distribution coefficients for one period.

    ``component_coeffs[:, g]`` holds the coefficients of Gaussian ``g`` with
    unit weight (symmetrized), so ``distribution_coeffs == component_coeffs @ mixing``.
    """

    index_set: FourierIndexSet
    weights: np.ndarray
    distribution_coeffs: np.ndarray
    period: float
    component_coeffs: np.ndarray
    mixing: np.ndarray

    def __post_init__(self):
        n = len(self.index_set)
        if self.weights.shape != (n,) or self.distribution_coeffs.shape != (n,):
            raise ValueError("basis arrays must align with the index set")

    @property
    def dimension(self) -> int:
        return self.index_set.dimension

    @property
    def kvecs(self) -> np.ndarray:
        return self.index_set.indices

    def with_mixing(self, mixing: Sequence[float]) -> "SpectralBasis":
        mixing = np.asarray(mixing, dtype=float)
        return SpectralBasis(self.index_set, self.weights, self.component_coeffs @ mixing,
                             self.period, self.component_coeffs, mixing)


def build_index_set(K: int, D: int) -> FourierIndexSet:
    """All D-tuples over ``{0, ..., K-1}`` in lexicographic order."""
    if K < 1 or D < 1:
        raise ValueError(f"K and D must be positive, got K={K}, D={D}")
    idx = np.array(list(itertools.product(range(K), repeat=D)), dtype=float).reshape(-1, D)
    idx.setflags(write=False)
    return FourierIndexSet(K, D, idx)


def weight(k: Sequence[float], D: int) -> float:
    k = np.asarray(k, dtype=float)
    return float((1.0 + k @ k) ** ((-D - 1) / 2.0))


def weights(index_set: FourierIndexSet) -> np.ndarray:
    sq = np.sum(index_set.indices ** 2, axis=1)
    return (1.0 + sq) ** ((-index_set.dimension - 1) / 2.0)


def sign_patterns(D: int) -> np.ndarray:
    return np.array(list(itertools.product((-1.0, 1.0), repeat=D)))


def symmetrize(dist: SpatialDistribution) -> SpatialDistribution:
    """Mirror the mixture into all ``2^D`` orthants of ``[-L/2, L/2]^D``."""
    if dist.symmetric:
        return dist
    D = dist.dimension
    comps = []
    for comp in dist.components:
        for s in sign_patterns(D):
            A = np.diag(s)
            comps.append(GaussianComponent(A @ comp.center, A @ comp.covariance @ A.T,
                                           comp.mixing_weight / 2 ** D))
    return SpatialDistribution(comps, D, dist.period, symmetric=True)


def _char_coeffs(centers, covs, kvecs, period):
    # closed-form Fourier coefficient of each unit-weight Gaussian, shape (M, m)
    D = kvecs.shape[1]
    psi = 2.0 * np.pi / period
    if len(centers) == 0:
        return np.zeros((kvecs.shape[0], 0), dtype=complex)
    centers = np.asarray(centers)
    covs = np.asarray(covs)
    phase = psi * kvecs @ centers.T
    quad = np.einsum("ka,gab,kb->kg", kvecs, covs, kvecs)
    return np.exp(-1j * phase - 0.5 * psi ** 2 * quad) / period ** D


def component_coefficients(dist: SpatialDistribution, index_set: FourierIndexSet) -> np.ndarray:
    """Unit-weight coefficients of each (original) component after mirroring, shape (M, m)."""
    if dist.dimension != index_set.dimension:
        raise ValueError("index set dimension does not match distribution")
    if dist.symmetric:
        return _char_coeffs([c.center for c in dist.components],
                            [c.covariance for c in dist.components],
                            index_set.indices, dist.period)
    D = dist.dimension
    signs = sign_patterns(D)
    out = np.zeros((len(index_set), len(dist.components)), dtype=complex)
    for g, comp in enumerate(dist.components):
        centers = signs * comp.center
        covs = [np.diag(s) @ comp.covariance @ np.diag(s) for s in signs]
        out[:, g] = _char_coeffs(centers, covs, index_set.indices, dist.period).mean(axis=1)
    return out


def distribution_coefficients(dist: SpatialDistribution, index_set: FourierIndexSet) -> np.ndarray:
    """Fourier coefficients of the (symmetrized) mixture via the Gaussian characteristic function.

    Unsymmetrized input is mirrored first. Mass outside ``[-L/2, L/2]^D`` is
    included, which is the only departure from the bounded-domain integral.
    """
    if not dist.symmetric:
        dist = symmetrize(dist)
    unit = component_coefficients(dist, index_set)
    return unit @ dist.weights


def make_basis(dist: SpatialDistribution, K: int) -> SpectralBasis:
    index_set = build_index_set(K, dist.dimension)
    unit = component_coefficients(dist, index_set)
    if not dist.symmetric:
        # mirrored coefficients are real up to rounding
        unit = unit.real.astype(complex)
    mixing = dist.weights
    return SpectralBasis(index_set, weights(index_set), unit @ mixing, dist.period, unit, mixing)


def evaluate_density(dist: SpatialDistribution, q) -> np.ndarray | float:
    """Mixture density at one point (D,) or many points (P, D)."""
    q = np.asarray(q, dtype=float)
    single = q.ndim == 1
    pts = np.atleast_2d(q)
    D = dist.dimension
    total = np.zeros(pts.shape[0])
    for comp in dist.components:
        chol = _cholesky(comp.covariance)
        z = np.linalg.solve(chol, (pts - comp.center).T)
        logdet = 2.0 * np.sum(np.log(np.diag(chol)))
        total += comp.mixing_weight * np.exp(-0.5 * np.sum(z * z, axis=0)
                                             - 0.5 * (D * np.log(2 * np.pi) + logdet))
    return float(total[0]) if single else total
