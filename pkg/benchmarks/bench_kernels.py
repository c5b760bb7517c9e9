"""Time the compiled kernels against the pure-Python fallback.

Usage: python benchmarks/bench_kernels.py [--repeat 3]
"""

import argparse
import time

import numpy as np

from snowdyn import _pykernels, builtin, config
from snowdyn import snowcomb as sc
from snowdyn.ergodic import critical_pairs
from snowdyn.sphere import sample_sphere

try:
    from snowdyn import _kernels
except ImportError:
    _kernels = None


def cases():
    rhat = builtin("rhat")
    crit = critical_pairs(rhat)
    za, zb = (complex(v) for v in sample_sphere(np.random.default_rng(0), 1)[0])
    coeffs = np.random.default_rng(1).normal(size=61) + 0j
    gen = sc.build_generator(sc.load_generator_spec("main_29"))
    cx = sc.subdivide(gen, 2)
    ij, xj = cx.adjacency(1)
    ic, xc = cx.adjacency(2)
    return {
        "rat_eval x1000": lambda k: [k.rat_eval(rhat.num_h, rhat.den_h, za, zb) for _ in range(1000)],
        "lyapunov_orbit n=2000": lambda k: k.lyapunov_orbit(rhat.num_h, rhat.den_h, crit, za, zb, 2000, 1e-12),
        "aberth deg 60": lambda k: k.aberth(coeffs, 1e-14, 200),
        "kappa_tree j=1": lambda k: k.kappa_tree(rhat.num_h, rhat.den_h, za, zb, 1, config.ROOT_TOL, config.ROOT_MAX_ITER),
        "bfs_distance level 2": lambda k: k.bfs_distance(ic, xc, 0, cx.count(2) - 1),
        "annulus_min level 1": lambda k: k.annulus_min(ij, xj, ic, xc, cx.M),
    }


def best_time(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args()
    if _kernels is None:
        print("compiled extension not built; run `pip install --no-build-isolation -e .`")
        return
    print(f"{'kernel':<24}{'python s':>12}{'cython s':>12}{'speedup':>10}")
    for name, fn in cases().items():
        tp = best_time(lambda: fn(_pykernels), args.repeat)
        tc = best_time(lambda: fn(_kernels), args.repeat)
        print(f"{name:<24}{tp:>12.4f}{tc:>12.5f}{tp / tc:>10.1f}")


if __name__ == "__main__":
    main()
