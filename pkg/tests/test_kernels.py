import os
import subprocess
import sys

import numpy as np
import pytest

from energy_ergodic import _kernels, build_index_set

needs_numba = pytest.mark.skipif("numba" not in _kernels.IMPLEMENTATIONS, reason="numba not installed")


@pytest.fixture
def data(rng):
    states = rng.uniform(-0.5, 3.5, size=(40, 2))
    kvecs = build_index_set(6, 2).indices
    return states, kvecs, 2 * np.pi / 6.0, 1 / 36.0


def _call(impl, name, *args):
    fn = _kernels.IMPLEMENTATIONS[impl][name]
    if name in ("mirrored_coefficients", "mirrored_prefix", "mirrored_gradient"):
        args = (args[0], _kernels._kint(args[1])) + args[2:]
    return fn(*args)


@needs_numba
@pytest.mark.parametrize("name", ["coefficients", "mirrored_coefficients", "mirrored_prefix"])
def test_backends_agree(data, name):
    a = _call("numpy", name, *data)
    b = _call("numba", name, *data)
    assert a.shape == b.shape
    assert np.allclose(a, b, rtol=1e-12, atol=1e-16)


@needs_numba
def test_gradient_backends_agree(data, rng):
    wres = rng.normal(size=data[1].shape[0])
    a = _call("numpy", "mirrored_gradient", *data, wres)
    b = _call("numba", "mirrored_gradient", *data, wres)
    assert np.allclose(a, b, rtol=1e-12, atol=1e-16)


@needs_numba
def test_rc_backends_agree(rng):
    times = np.cumsum(rng.uniform(0.5, 2.0, 200))
    amps = rng.uniform(0, 3, 200)
    args = (times, amps, 5.0, 60.0, 0.01, 0.02, 0.001, -0.002)
    for x, y in zip(_kernels.IMPLEMENTATIONS["numpy"]["rc_trace"](*args),
                    _kernels.IMPLEMENTATIONS["numba"]["rc_trace"](*args)):
        assert np.allclose(x, y, rtol=1e-12, atol=1e-16)


def test_prefix_last_row_is_full_average(data):
    states, kvecs, psi, norm = data
    prefix = _kernels.mirrored_prefix(states, kvecs, psi, norm)
    assert np.allclose(prefix[-1], _kernels.mirrored_coefficients(states, kvecs, psi, norm), rtol=1e-13)


def test_env_flag_selects_numpy():
    env = dict(os.environ, ERGO_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", "from energy_ergodic import _kernels; print(_kernels.backend())"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"
