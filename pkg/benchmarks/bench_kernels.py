"""Compare the numba kernels against the pure-numpy fallbacks.

Times the Voronoi-cell quadrature and the Dirichlet fixed-point MLE on the
same inputs through both code paths and reports the largest disagreement.

    python benchmarks/bench_kernels.py [--repeat N] [--seed S]

The numba path is unavailable when PERCEPTRISK_DISABLE_NUMBA=1 is set; the
script then only times the numpy path.
"""
import argparse
import time

import numpy as np

from perceptrisk import _accel
from perceptrisk._quadrature import GL_NODES, GL_WEIGHTS, exceedance_numba, exceedance_numpy
from perceptrisk.dirichlet import (
    DirichletParams,
    _fixed_point_numba,
    _fixed_point_numpy,
    moment_initializer,
    sample,
)
from perceptrisk.verify import random_alphas


def best_of(fn, repeat):
    times = []
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def bench_quadrature(alphas, repeat):
    def run(kernel):
        return [kernel(a, 1e-8, GL_NODES, GL_WEIGHTS)[0] for a in alphas]

    rows = {}
    if _accel.USE_NUMBA:
        t0 = time.perf_counter()
        exceedance_numba(np.array([1.0, 2.0]), 1e-8, GL_NODES, GL_WEIGHTS)
        rows["compile"] = time.perf_counter() - t0
        rows["numba"] = best_of(lambda: run(exceedance_numba), repeat)
    rows["numpy"] = best_of(lambda: run(exceedance_numpy), repeat)
    return rows


def bench_mle(batches, repeat):
    inputs = [(moment_initializer(b), np.log(b).mean(axis=0)) for b in batches]

    def run(kernel):
        return [kernel(a0, ml, 1e-10, 100_000)[0] for a0, ml in inputs]

    rows = {}
    if _accel.USE_NUMBA:
        a0, ml = inputs[0]
        t0 = time.perf_counter()
        _fixed_point_numba(a0, ml, 1e-10, 10)
        rows["compile"] = time.perf_counter() - t0
        rows["numba"] = best_of(lambda: run(_fixed_point_numba), repeat)
    rows["numpy"] = best_of(lambda: run(_fixed_point_numpy), repeat)
    return rows


def report(name, rows):
    print(f"{name}")
    if "compile" in rows:
        print(f"  numba first call (compile or cache load): {rows['compile']:.3f} s")
    for key in ("numba", "numpy"):
        if key in rows:
            print(f"  {key:5s}: {rows[key][0] * 1e3:9.2f} ms")
    if "numba" in rows:
        diff = max(
            float(np.max(np.abs(np.asarray(a) - np.asarray(b))))
            for a, b in zip(rows["numba"][1], rows["numpy"][1])
        )
        print(f"  speedup x{rows['numpy'][0] / rows['numba'][0]:.1f}, max |numba - numpy| = {diff:.2e}")


def main():
    parser = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--cases", type=int, default=20)
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    alphas = random_alphas(rng, args.cases)
    batches = [sample(DirichletParams(a), rng, 200) for a in alphas]

    print(f"backend: {_accel.backend()}, {args.cases} cases, best of {args.repeat}")
    report("exceedance quadrature", bench_quadrature(alphas, args.repeat))
    report("Dirichlet MLE fixed point", bench_mle(batches, args.repeat))


if __name__ == "__main__":
    main()
