"""Time the numba and numpy kernel paths on a 300k-particle ensemble.

    python benchmarks/bench_kernels.py [--particles N] [--repeat R]

Both kernel tables are imported directly, so the DRASYM_NUMBA flag only
decides which one the library itself uses. Also times one full predictor
run with the active path.
"""

import argparse
import timeit

import numpy as np

from drasym import _kernels
from drasym.model import SystemConfig
from drasym.state_evolution import se_run

ARGS = dict(alpha=0.05, beta=0.3, sqrt_delta=0.7 ** 0.5, gamma=10.0)


def cases(x, h, z):
    a = ARGS
    return {
        "soft_threshold": lambda k: k["soft_threshold"](z, 0.23),
        "ensemble_moments": lambda k: k["ensemble_moments"](x, z, h),
        "mean_j": lambda k: k["mean_j"](a["alpha"], a["beta"], a["sqrt_delta"], a["gamma"], x, h, z),
        "advance_particles": lambda k: k["advance_particles"](
            a["alpha"], a["beta"], a["sqrt_delta"], a["gamma"], 0.23, 1.0, x, h, z),
    }


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--particles", type=int, default=300_000)
    p.add_argument("--repeat", type=int, default=20)
    args = p.parse_args()

    rng = np.random.default_rng(0)
    n = args.particles
    x = np.where(rng.random(n) < 0.9, 0.0, rng.standard_normal(n))
    h = rng.standard_normal(n)
    z = x + 0.1 * rng.standard_normal(n)

    tables = {"numpy": _kernels.numpy_kernels}
    if _kernels.numba_kernels is not None:
        tables["numba"] = _kernels.numba_kernels
    else:
        print("numba unavailable; timing the numpy path only")

    print(f"{'kernel':<20}" + "".join(f"{name:>12}" for name in tables) + f"{'speedup':>10}")
    for label, fn in cases(x, h, z).items():
        times = {}
        for name, table in tables.items():
            fn(table)  # compile / warm up
            times[name] = min(timeit.repeat(lambda: fn(table), number=1, repeat=args.repeat))
        row = f"{label:<20}" + "".join(f"{times[nm] * 1e3:>10.2f}ms" for nm in tables)
        if "numba" in times:
            row += f"{times['numpy'] / times['numba']:>9.1f}x"
        print(row)

    cfg = SystemConfig(mc_particles=n, iterations=100)
    se_run(cfg, 2)
    t = min(timeit.repeat(lambda: se_run(cfg), number=1, repeat=3))
    active = "numba" if _kernels.USE_NUMBA else "numpy"
    print(f"\npredictor, K=100, {n} particles ({active} kernels): {t:.2f}s")


if __name__ == "__main__":
    main()
