"""Compiled vs pure-Python kernels on a measured-counts fixture.

Usage: python benchmarks/bench_kernels.py [--repeat N] [--fixture NAME]
"""
import argparse
import time

import numpy as np

from decoyrate import _pykernels
from decoyrate.decoy import Observations, axis_params, rectangle_for
from decoyrate.io import parse_config, parse_counts
from decoyrate.model import Basis

try:
    from decoyrate import _kernels
except ImportError:
    _kernels = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--fixture", default="87km-4int")
    args = ap.parse_args()

    cfg, sys_model = parse_config(f"fixtures/s1-{args.fixture}.toml")
    counts = parse_counts(f"fixtures/s2-{args.fixture}.csv")
    obs = Observations(counts, cfg, sys_model.eps)
    rect = rectangle_for(obs)
    pz, px = axis_params(obs, Basis.Z), axis_params(obs, Basis.X)

    backends = [("python", _pykernels)]
    if _kernels is not None:
        backends.append(("compiled", _kernels))
    else:
        print("compiled kernels not built; timing the Python fallback only")

    cases = {}
    for n in (33, 513):
        zs = np.linspace(rect.s0z_lower, rect.s0z_upper, n)
        xs = np.linspace(rect.s0x_lower, rect.s0x_upper, n)

        def grid(k, zs=zs, xs=xs):
            kz, pzv, _ = k.axis_terms(pz, zs)
            kx, pxv, _ = k.axis_terms(px, xs)
            return k.grid_min(kz, pzv, kx, pxv, 0.0)

        cases[f"axis terms + grid min {n}x{n}"] = grid
    lo, hi = rect.s0z_lower, rect.s0z_upper
    cases["golden section, 80 steps"] = lambda k: k.golden_axis(pz, lo, hi, 1e-4, 0.5, 0.0, 80, 0.0)

    print(f"{'kernel':34s} {'python [ms]':>12s} {'compiled [ms]':>14s} {'speed-up':>9s}")
    for name, fn in cases.items():
        t = {b: best_of(lambda k=k: fn(k), args.repeat) for b, k in backends}
        results = [fn(k) for _, k in backends]
        if len(results) == 2:
            a, b = results
            assert np.allclose(a[0], b[0], rtol=1e-12, atol=0), (name, a, b)
        tc = t.get("compiled")
        cols = f"{t['python'] * 1e3:12.3f} " + (f"{tc * 1e3:14.3f} {t['python'] / tc:8.1f}x" if tc else f"{'-':>14s}")
        print(f"{name:34s} {cols}")


if __name__ == "__main__":
    main()
