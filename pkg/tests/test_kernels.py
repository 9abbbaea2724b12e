"""Accelerated kernels against their pure-numpy fallbacks."""

import os
import subprocess
import sys

import numpy as np
import pytest

from stochstokes import kernels
from stochstokes.mesh import build_structured_mesh
from stochstokes.femspace import TaylorHoodSpace
from stochstokes.stochastic import NOISE_KIND_CODES

HAVE_NUMBA = kernels.USING_NUMBA


@pytest.fixture(scope="module")
def space():
    return TaylorHoodSpace(build_structured_mesh((0.0, 1.0, 0.0, 1.0), 3))


def _random_points(rng, n):
    return rng.uniform(0.02, 0.98, size=(n, 2))


@pytest.mark.skipif(not HAVE_NUMBA, reason="numba backend not active")
def test_locate_points_parity(space):
    mesh = space.mesh
    rng = np.random.default_rng(0)
    pts = _random_points(rng, 200)
    x0, _, y0, _ = mesh.bounds
    inv_h = 1.0 / mesh.h_grid
    a = kernels._locate_points_numpy(pts, x0, y0, inv_h, mesh.nx, mesh.ny)
    b = kernels._locate_points_numba(pts, x0, y0, inv_h, mesh.nx, mesh.ny)
    for x, y in zip(a, b):
        assert np.array_equal(np.asarray(x), np.asarray(y))


@pytest.mark.skipif(not HAVE_NUMBA, reason="numba backend not active")
def test_eval_p2_parity(space):
    mesh = space.mesh
    rng = np.random.default_rng(1)
    pts = _random_points(rng, 150)
    x0, _, y0, _ = mesh.bounds
    tri, lam = kernels._locate_points_numpy(
        pts, x0, y0, 1.0 / mesh.h_grid, mesh.nx, mesh.ny
    )
    coeffs = rng.standard_normal(space.n_scalar)
    a = kernels._eval_p2_numpy(tri, lam, space.cell_scalar_dofs, coeffs)
    b = kernels._eval_p2_numba(tri, lam, space.cell_scalar_dofs, coeffs)
    assert np.allclose(a, b, atol=1e-14, rtol=0.0)


@pytest.mark.skipif(not HAVE_NUMBA, reason="numba backend not active")
def test_eval_p1_parity(space):
    mesh = space.mesh
    rng = np.random.default_rng(2)
    pts = _random_points(rng, 150)
    x0, _, y0, _ = mesh.bounds
    tri, lam = kernels._locate_points_numpy(
        pts, x0, y0, 1.0 / mesh.h_grid, mesh.nx, mesh.ny
    )
    coeffs = rng.standard_normal(mesh.n_vertices)
    a = kernels._eval_p1_numpy(tri, lam, mesh.triangles, coeffs)
    b = kernels._eval_p1_numba(tri, lam, mesh.triangles, coeffs)
    assert np.allclose(a, b, atol=1e-14, rtol=0.0)


@pytest.mark.skipif(not HAVE_NUMBA, reason="numba backend not active")
@pytest.mark.parametrize("kind", sorted(NOISE_KIND_CODES))
def test_noise_product_parity(kind):
    rng = np.random.default_rng(3)
    code = NOISE_KIND_CODES[kind]
    u = rng.standard_normal((80, 2))
    dw = rng.standard_normal((80, 2))
    a = kernels._noise_product_numpy(code, u, dw)
    b = kernels._noise_product_numba(code, u, dw)
    assert np.allclose(a, b, atol=1e-14, rtol=0.0)


def test_noise_product_formulas():
    rng = np.random.default_rng(4)
    u = rng.standard_normal((50, 2))
    dw = rng.standard_normal((50, 2))
    zero = kernels.noise_product(NOISE_KIND_CODES["zero"], u, dw)
    assert np.all(zero == 0.0)
    additive = kernels.noise_product(NOISE_KIND_CODES["additive_one"], u, dw)
    assert np.allclose(additive, dw, atol=1e-15)
    sqrt_kind = kernels.noise_product(NOISE_KIND_CODES["sqrt_u2_plus_1"], u, dw)
    assert np.allclose(sqrt_kind, np.sqrt(u**2 + 1.0) * dw, atol=1e-14)
    linear = kernels.noise_product(NOISE_KIND_CODES["linear_u"], u, dw)
    assert np.allclose(linear, u * dw, atol=1e-15)


def test_env_flag_disables_numba():
    code = "import stochstokes.kernels as k; print(k.USING_NUMBA)"
    env = dict(os.environ, STOCH_STOKES_NO_NUMBA="1")
    out = subprocess.run(
        [sys.executable, "-c", code],
        capture_output=True,
        text=True,
        env=env,
        check=True,
    )
    assert out.stdout.strip() == "False"


def test_fallback_matches_dispatch(space):
    # public dispatchers agree with the numpy reference regardless of backend
    mesh = space.mesh
    rng = np.random.default_rng(9)
    pts = _random_points(rng, 120)
    x0, _, y0, _ = mesh.bounds
    inv_h = 1.0 / mesh.h_grid
    tri, lam = kernels.locate_points(pts, x0, y0, inv_h, mesh.nx, mesh.ny)
    tri_ref, lam_ref = kernels._locate_points_numpy(pts, x0, y0, inv_h, mesh.nx, mesh.ny)
    assert np.array_equal(np.asarray(tri), np.asarray(tri_ref))
    assert np.allclose(np.asarray(lam), np.asarray(lam_ref), atol=1e-14, rtol=0.0)
    coeffs = rng.standard_normal(space.n_scalar)
    a = kernels.eval_p2(tri, lam, space.cell_scalar_dofs, coeffs)
    b = kernels._eval_p2_numpy(tri_ref, lam_ref, space.cell_scalar_dofs, coeffs)
    assert np.allclose(a, b, atol=1e-14, rtol=0.0)
