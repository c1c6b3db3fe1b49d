"""Time the numba kernels against their numpy fallbacks.

    python3 benchmarks/bench_kernels.py [--repeat 20]
"""
import argparse
import timeit

import numpy as np

from energy_ergodic import _kernels
from energy_ergodic.spatial import build_index_set


def cases(rng):
    L = 6.0
    states = rng.uniform(0.0, 3.0, (301, 2))
    kint = np.ascontiguousarray(build_index_set(10, 2).indices, dtype=np.int64)
    kflt = kint.astype(np.float64)
    psi, norm = 2 * np.pi / L, 1.0 / L ** 2
    wres = rng.standard_normal(len(kint))
    times = np.arange(4000) * 1.5
    amps = np.repeat(rng.uniform(0.0, 2.5, 200), 20)
    return {
        "coefficients": (states, kflt, psi, norm),
        "mirrored_coefficients": (states, kint, psi, norm),
        "mirrored_prefix": (states, kint, psi, norm),
        "mirrored_gradient": (states, kint, psi, norm, wres),
        "rc_trace": (times, amps, 10.0, 400.0, 0.015, 0.02, 0.0, 0.0),
    }


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=20)
    args = parser.parse_args(argv)
    inputs = cases(np.random.default_rng(0))
    backends = list(_kernels.IMPLEMENTATIONS)
    print(f"{'kernel':<24}" + "".join(f"{b + ' [ms]':>14}" for b in backends)
          + ("      speedup" if "numba" in backends else ""))
    for name, call_args in inputs.items():
        timings = {}
        for backend in backends:
            fn = _kernels.IMPLEMENTATIONS[backend][name]
            fn(*call_args)  # warm-up, includes JIT compilation
            timings[backend] = 1e3 * min(timeit.repeat(lambda: fn(*call_args), number=1, repeat=args.repeat))
        row = f"{name:<24}" + "".join(f"{timings[b]:>14.3f}" for b in backends)
        if "numba" in timings:
            row += f"{timings['numpy'] / timings['numba']:>12.1f}x"
        print(row)


if __name__ == "__main__":
    main()
