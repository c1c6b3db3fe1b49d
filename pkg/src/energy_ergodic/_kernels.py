"""Hot numeric kernels.

Every kernel exists twice: a numba ``@njit`` version and a pure-numpy
version with identical semantics. The numba path is used when numba imports
and ``ERGO_DISABLE_NUMBA`` is unset (or ``0``); set ``ERGO_DISABLE_NUMBA=1``
to force the numpy path.

"Mirrored" kernels average the Fourier basis over the ``2^D`` axis
reflections of each sample, which turns ``prod_d exp(-i k_d q_d psi)`` into
the real ``prod_d cos(k_d q_d psi)``.
"""
import os

import numpy as np

try:
    import numba
    from numba import njit
except ImportError:  # pragma: no cover
    numba = None

_disabled = os.environ.get("ERGO_DISABLE_NUMBA", "0").strip().lower() not in ("", "0", "false", "no")
USE_NUMBA = numba is not None and not _disabled


# --------------------------------------------------------------------------
# numpy implementations
# --------------------------------------------------------------------------

def _coefficients_np(states, kvecs, psi, norm):
    phase = psi * (states @ kvecs.T)
    basis = np.cos(phase) - 1j * np.sin(phase)
    return norm * basis.mean(axis=0)


def _cos_tables_np(states, kint, psi):
    kmax = int(kint.max()) + 1 if kint.size else 1
    ang = psi * states[:, :, None] * np.arange(kmax)[None, None, :]
    return np.cos(ang), np.sin(ang)


def _mirrored_basis_np(states, kint, psi):
    cos_t, _ = _cos_tables_np(states, kint, psi)
    n, d = states.shape
    out = np.ones((n, kint.shape[0]))
    for a in range(d):
        out *= cos_t[:, a, kint[:, a]]
    return out


def _mirrored_coefficients_np(states, kint, psi, norm):
    return norm * _mirrored_basis_np(states, kint, psi).mean(axis=0)


def _mirrored_prefix_np(states, kint, psi, norm):
    basis = _mirrored_basis_np(states, kint, psi)
    counts = np.arange(1, states.shape[0] + 1)[:, None]
    return norm * np.cumsum(basis, axis=0) / counts


def _mirrored_gradient_np(states, kint, psi, norm, wres):
    cos_t, sin_t = _cos_tables_np(states, kint, psi)
    n, d = states.shape
    factors = np.stack([cos_t[:, a, kint[:, a]] for a in range(d)])  # (d, n, M)
    grad = np.empty((n, d))
    for a in range(d):
        others = np.ones((n, kint.shape[0]))
        for b in range(d):
            if b != a:
                others *= factors[b]
        dcos = -kint[:, a] * psi * sin_t[:, a, kint[:, a]]
        grad[:, a] = (dcos * others) @ wres
    return grad * (norm / n)


def _rc_trace_np(times, amps, tau1, tau2, r1, r2, v1, v2):
    n = times.shape[0]
    out1 = np.empty(n)
    out2 = np.empty(n)
    for i in range(n):
        out1[i] = v1
        out2[i] = v2
        if i + 1 < n:
            h = times[i + 1] - times[i]
            a1 = np.exp(-h / tau1)
            a2 = np.exp(-h / tau2)
            v1 = a1 * v1 + (1.0 - a1) * amps[i] * r1
            v2 = a2 * v2 + (1.0 - a2) * amps[i] * r2
    return out1, out2


# --------------------------------------------------------------------------
# numba implementations
# --------------------------------------------------------------------------

if numba is not None:

    @njit(cache=True, nogil=True)
    def _coefficients_nb(states, kvecs, psi, norm):
        n, d = states.shape
        m = kvecs.shape[0]
        re = np.zeros(m)
        im = np.zeros(m)
        for j in range(n):
            for k in range(m):
                ph = 0.0
                for a in range(d):
                    ph += kvecs[k, a] * states[j, a]
                ph *= psi
                re[k] += np.cos(ph)
                im[k] -= np.sin(ph)
        out = np.empty(m, dtype=np.complex128)
        scale = norm / n
        for k in range(m):
            out[k] = complex(re[k] * scale, im[k] * scale)
        return out

    @njit(cache=True, nogil=True)
    def _tables_nb(q, kmax, psi, cos_t, sin_t):
        # cos/sin of k * q_a * psi for k = 0..kmax-1, one row per axis
        d = q.shape[0]
        for a in range(d):
            for k in range(kmax):
                ang = k * q[a] * psi
                cos_t[a, k] = np.cos(ang)
                sin_t[a, k] = np.sin(ang)

    @njit(cache=True, nogil=True)
    def _mirrored_coefficients_nb(states, kint, psi, norm):
        n, d = states.shape
        m = kint.shape[0]
        kmax = 1
        for k in range(m):
            for a in range(d):
                if kint[k, a] + 1 > kmax:
                    kmax = kint[k, a] + 1
        cos_t = np.empty((d, kmax))
        sin_t = np.empty((d, kmax))
        acc = np.zeros(m)
        for j in range(n):
            _tables_nb(states[j], kmax, psi, cos_t, sin_t)
            for k in range(m):
                prod = 1.0
                for a in range(d):
                    prod *= cos_t[a, kint[k, a]]
                acc[k] += prod
        scale = norm / n
        for k in range(m):
            acc[k] *= scale
        return acc

    @njit(cache=True, nogil=True)
    def _mirrored_prefix_nb(states, kint, psi, norm):
        n, d = states.shape
        m = kint.shape[0]
        kmax = 1
        for k in range(m):
            for a in range(d):
                if kint[k, a] + 1 > kmax:
                    kmax = kint[k, a] + 1
        cos_t = np.empty((d, kmax))
        sin_t = np.empty((d, kmax))
        acc = np.zeros(m)
        out = np.empty((n, m))
        for j in range(n):
            _tables_nb(states[j], kmax, psi, cos_t, sin_t)
            scale = norm / (j + 1)
            for k in range(m):
                prod = 1.0
                for a in range(d):
                    prod *= cos_t[a, kint[k, a]]
                acc[k] += prod
                out[j, k] = acc[k] * scale
        return out

    @njit(cache=True, nogil=True)
    def _mirrored_gradient_nb(states, kint, psi, norm, wres):
        n, d = states.shape
        m = kint.shape[0]
        kmax = 1
        for k in range(m):
            for a in range(d):
                if kint[k, a] + 1 > kmax:
                    kmax = kint[k, a] + 1
        cos_t = np.empty((d, kmax))
        sin_t = np.empty((d, kmax))
        grad = np.zeros((n, d))
        scale = norm / n
        for j in range(n):
            _tables_nb(states[j], kmax, psi, cos_t, sin_t)
            for k in range(m):
                w = wres[k]
                for a in range(d):
                    ka = kint[k, a]
                    if ka == 0:
                        continue
                    prod = -ka * psi * sin_t[a, ka]
                    for b in range(d):
                        if b != a:
                            prod *= cos_t[b, kint[k, b]]
                    grad[j, a] += w * prod
            for a in range(d):
                grad[j, a] *= scale
        return grad

    @njit(cache=True, nogil=True)
    def _rc_trace_nb(times, amps, tau1, tau2, r1, r2, v1, v2):
        n = times.shape[0]
        out1 = np.empty(n)
        out2 = np.empty(n)
        for i in range(n):
            out1[i] = v1
            out2[i] = v2
            if i + 1 < n:
                h = times[i + 1] - times[i]
                a1 = np.exp(-h / tau1)
                a2 = np.exp(-h / tau2)
                v1 = a1 * v1 + (1.0 - a1) * amps[i] * r1
                v2 = a2 * v2 + (1.0 - a2) * amps[i] * r2
        return out1, out2


IMPLEMENTATIONS = {
    "numpy": {
        "coefficients": _coefficients_np,
        "mirrored_coefficients": _mirrored_coefficients_np,
        "mirrored_prefix": _mirrored_prefix_np,
        "mirrored_gradient": _mirrored_gradient_np,
        "rc_trace": _rc_trace_np,
    },
}
if numba is not None:
    IMPLEMENTATIONS["numba"] = {
        "coefficients": _coefficients_nb,
        "mirrored_coefficients": _mirrored_coefficients_nb,
        "mirrored_prefix": _mirrored_prefix_nb,
        "mirrored_gradient": _mirrored_gradient_nb,
        "rc_trace": _rc_trace_nb,
    }

_impl = IMPLEMENTATIONS["numba" if USE_NUMBA else "numpy"]


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"


def _f64(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def _kint(kvecs):
    return np.ascontiguousarray(np.rint(kvecs), dtype=np.int64)


def fourier_coefficients(states, kvecs, psi, norm):
    """Time-averaged complex Fourier coefficients of samples (N, D); returns (M,)."""
    return _impl["coefficients"](_f64(states), _f64(kvecs), float(psi), float(norm))


def mirrored_coefficients(states, kvecs, psi, norm):
    """Time average of ``norm * prod_d cos(k_d q_d psi)``; returns real (M,)."""
    return _impl["mirrored_coefficients"](_f64(states), _kint(kvecs), float(psi), float(norm))


def mirrored_prefix(states, kvecs, psi, norm):
    """Mirrored coefficients of every prefix ``q_0..q_j``; shape (N, M)."""
    return _impl["mirrored_prefix"](_f64(states), _kint(kvecs), float(psi), float(norm))


def mirrored_gradient(states, kvecs, psi, norm, wres):
    """``d/dq_j sum_m wres_m c_m`` for mirrored coefficients; shape (N, D)."""
    return _impl["mirrored_gradient"](_f64(states), _kint(kvecs), float(psi), float(norm), _f64(wres))


def rc_trace(times, amps, tau1, tau2, r1, r2, v1=0.0, v2=0.0):
    """RC element voltages at each sample time under piecewise-constant current."""
    return _impl["rc_trace"](_f64(times), _f64(amps), float(tau1), float(tau2),
                             float(r1), float(r2), float(v1), float(v2))
