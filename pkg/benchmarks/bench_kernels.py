"""Time the numba and pure-numpy Verlet kernels on the same workload.

    python3 benchmarks/bench_kernels.py [--rays 3] [--len 4000] [--steps 2000] [--repeat 3]
"""

import argparse
import time

import numpy as np

from starwave import _kernels


def bench(fn, args, repeat):
    best = float("inf")
    for _ in range(repeat):
        u, u_dot, phi, phi_dot, *rest = args
        phi, phi_dot = phi.copy(), phi_dot.copy()
        t0 = time.perf_counter()
        fn(u, u_dot, phi, phi_dot, *rest)
        best = min(best, time.perf_counter() - t0)
    return best, phi


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rays", type=int, default=3)
    ap.add_argument("--len", type=int, default=4000)
    ap.add_argument("--steps", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    rng = np.random.default_rng(0)
    phi = rng.standard_normal((args.rays, args.len))
    phi_dot = rng.standard_normal((args.rays, args.len))
    work = (0.1, -0.2, phi, phi_dot, 0.1, args.steps, 1.0, 0.0, 1.0)
    sites = args.rays * args.len * args.steps

    paths = [("numpy", _kernels.verlet_numpy)]
    if _kernels.HAVE_NUMBA:
        _kernels.verlet_numba(0.0, 0.0, phi[:, :4].copy(), phi_dot[:, :4].copy(), 0.1, 1, 1.0, 0.0, 1.0)
        paths.append(("numba", _kernels.verlet_numba))

    results = {}
    for name, fn in paths:
        secs, out = bench(fn, work, args.repeat)
        results[name] = (secs, out)
        print(f"{name:6s} {secs:8.4f} s  {sites / secs / 1e6:8.1f} Msite-steps/s")
    if len(results) == 2:
        speedup = results["numpy"][0] / results["numba"][0]
        diff = np.max(np.abs(results["numpy"][1] - results["numba"][1]))
        print(f"speedup {speedup:.1f}x, max |numpy - numba| = {diff:.1e}")
    print(f"default backend: {_kernels.BACKEND}")


if __name__ == "__main__":
    main()
