"""Timing comparison of the numba kernels against the numpy fallback.

Runs each hot kernel on workloads shaped like the real call sites
(interpolation point batches, quadrature-sized noise products) and prints
the per-call time of both implementations plus the speedup.  Invoke from
the repository root::

    python benchmarks/bench_kernels.py [--points N] [--repeats R]

The numpy path is always measured; the numba path only when numba imported
successfully and ``STOCH_STOKES_NO_NUMBA`` is unset.
"""

import argparse
import time

import numpy as np

from stochstokes import kernels
from stochstokes.femspace import TaylorHoodSpace
from stochstokes.mesh import build_structured_mesh


def best_of(func, repeats, loops):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        for _ in range(loops):
            func()
        best = min(best, (time.perf_counter() - t0) / loops)
    return best


def build_cases(n_points):
    mesh = build_structured_mesh((-1.0, 1.0, -1.0, 1.0), 16)
    space = TaylorHoodSpace(mesh)
    rng = np.random.default_rng(1234)
    pts = np.column_stack(
        [
            rng.uniform(-1.0, 1.0, n_points),
            rng.uniform(-1.0, 1.0, n_points),
        ]
    )
    x0, _, y0, _ = mesh.bounds
    inv_h = float(mesh.n)
    tri, lam = kernels._locate_points_numpy(pts, x0, y0, inv_h, mesh.nx, mesh.ny)
    p2_coeffs = rng.standard_normal(space.n_scalar)
    p1_coeffs = rng.standard_normal(space.n_pressure)
    u = rng.standard_normal((n_points, 2))
    dw = rng.standard_normal((n_points, 2))

    return {
        "locate_points": (
            lambda f: f(pts, x0, y0, inv_h, mesh.nx, mesh.ny),
            kernels._locate_points_numpy,
            getattr(kernels, "_locate_points_numba", None),
        ),
        "eval_p2": (
            lambda f: f(tri, lam, space.cell_scalar_dofs, p2_coeffs),
            kernels._eval_p2_numpy,
            getattr(kernels, "_eval_p2_numba", None),
        ),
        "eval_p1": (
            lambda f: f(tri, lam, mesh.triangles, p1_coeffs),
            kernels._eval_p1_numpy,
            getattr(kernels, "_eval_p1_numba", None),
        ),
        "noise_product": (
            lambda f: f(kernels.NOISE_SQRT_U2_PLUS_1, u, dw),
            kernels._noise_product_numpy,
            getattr(kernels, "_noise_product_numba", None),
        ),
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--points", type=int, default=100_000)
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--loops", type=int, default=10)
    args = parser.parse_args()

    print(f"numba backend active: {kernels.USING_NUMBA}")
    print(f"workload: {args.points} points, best of {args.repeats} x {args.loops}")
    print(f"{'kernel':<16}{'numpy ms':>12}{'numba ms':>12}{'speedup':>10}")

    for name, (call, numpy_impl, numba_impl) in build_cases(args.points).items():
        t_numpy = best_of(lambda: call(numpy_impl), args.repeats, args.loops)
        if numba_impl is None:
            print(f"{name:<16}{1e3 * t_numpy:>12.3f}{'n/a':>12}{'n/a':>10}")
            continue
        call(numba_impl)  # compile before timing
        t_numba = best_of(lambda: call(numba_impl), args.repeats, args.loops)
        print(
            f"{name:<16}{1e3 * t_numpy:>12.3f}{1e3 * t_numba:>12.3f}"
            f"{t_numpy / t_numba:>10.2f}"
        )


if __name__ == "__main__":
    main()
