"""Hot numeric kernels, numba-accelerated with a pure-numpy fallback.

The numba path is the default.  Setting the environment variable
``STOCH_STOKES_NO_NUMBA=1`` before import selects the numpy implementations,
which produce identical results (same operations, vectorized).  The kernels
cover the per-point work that dominates cross-mesh interpolation and the
per-step noise evaluation; everything matrix-shaped goes through scipy
sparse instead.

Point location exploits the structured layout: cell indices come from
integer division by the grid spacing and the diagonal test picks the lower
triangle when ``xi >= eta`` (ties go to the lower triangle).
"""

from __future__ import annotations

import os
import warnings

import numpy as np

_DISABLE_ENV = "STOCH_STOKES_NO_NUMBA"

NOISE_ZERO = 0
NOISE_ADDITIVE_ONE = 1
NOISE_SQRT_U2_PLUS_1 = 2
NOISE_LINEAR_U = 3


def _numba_disabled():
    return os.environ.get(_DISABLE_ENV, "").strip().lower() in ("1", "true", "yes")


# ---------------------------------------------------------------------------
# numpy implementations (reference path)
# ---------------------------------------------------------------------------


def _locate_points_numpy(points, x0, y0, inv_h, nx, ny):
    """Map points to (triangle index, barycentric coordinates).

    Returns ``tri`` (int64) and ``lam`` with columns ordered like the
    triangle's vertices.  Points outside the rectangle are clamped to the
    nearest boundary cell, which keeps evaluation well defined for
    coordinates perturbed by roundoff.
    """
    x = (points[:, 0] - x0) * inv_h
    y = (points[:, 1] - y0) * inv_h
    i = np.clip(np.floor(x).astype(np.int64), 0, nx - 1)
    j = np.clip(np.floor(y).astype(np.int64), 0, ny - 1)
    xi = x - i
    eta = y - j
    lower = xi >= eta
    tri = 2 * (j * nx + i) + np.where(lower, 0, 1)
    lam = np.empty((points.shape[0], 3))
    # lower triangle (v00, v10, v11): lam = (1 - xi, xi - eta, eta)
    # upper triangle (v00, v11, v01): lam = (1 - eta, xi, eta - xi)
    lam[:, 0] = np.where(lower, 1.0 - xi, 1.0 - eta)
    lam[:, 1] = np.where(lower, xi - eta, xi)
    lam[:, 2] = np.where(lower, eta, eta - xi)
    return tri, lam


def _p2_values_numpy(lam):
    """P2 shape values per point, ordered vertices then edge midpoints."""
    l0, l1, l2 = lam[:, 0], lam[:, 1], lam[:, 2]
    out = np.empty((lam.shape[0], 6))
    out[:, 0] = l0 * (2.0 * l0 - 1.0)
    out[:, 1] = l1 * (2.0 * l1 - 1.0)
    out[:, 2] = l2 * (2.0 * l2 - 1.0)
    out[:, 3] = 4.0 * l0 * l1
    out[:, 4] = 4.0 * l1 * l2
    out[:, 5] = 4.0 * l2 * l0
    return out


def _eval_p2_numpy(tri, lam, cell_dofs, coeffs):
    phi = _p2_values_numpy(lam)
    gathered = coeffs[cell_dofs[tri]]
    return np.einsum("pb,pb->p", phi, gathered)


def _eval_p1_numpy(tri, lam, triangles, coeffs):
    gathered = coeffs[triangles[tri]]
    return np.einsum("pb,pb->p", lam, gathered)


def _noise_product_numpy(kind, u, dw):
    """Pointwise ``B(u) * dw`` for the supported noise kinds."""
    if kind == NOISE_ZERO:
        return np.zeros_like(dw)
    if kind == NOISE_ADDITIVE_ONE:
        return dw.copy()
    if kind == NOISE_SQRT_U2_PLUS_1:
        return np.sqrt(u * u + 1.0) * dw
    if kind == NOISE_LINEAR_U:
        return u * dw
    raise ValueError(f"unknown noise kind code {kind}")


# ---------------------------------------------------------------------------
# numba implementations
# ---------------------------------------------------------------------------

USING_NUMBA = False

if not _numba_disabled():
    try:
        from numba import njit

        USING_NUMBA = True
    except ImportError:  # pragma: no cover - exercised via the env flag instead
        warnings.warn("numba unavailable, falling back to numpy kernels")

if USING_NUMBA:

    @njit(cache=True)
    def _locate_points_numba(points, x0, y0, inv_h, nx, ny):
        n = points.shape[0]
        tri = np.empty(n, dtype=np.int64)
        lam = np.empty((n, 3))
        for p in range(n):
            x = (points[p, 0] - x0) * inv_h
            y = (points[p, 1] - y0) * inv_h
            i = int(np.floor(x))
            if i < 0:
                i = 0
            elif i > nx - 1:
                i = nx - 1
            j = int(np.floor(y))
            if j < 0:
                j = 0
            elif j > ny - 1:
                j = ny - 1
            xi = x - i
            eta = y - j
            base = 2 * (j * nx + i)
            if xi >= eta:
                tri[p] = base
                lam[p, 0] = 1.0 - xi
                lam[p, 1] = xi - eta
                lam[p, 2] = eta
            else:
                tri[p] = base + 1
                lam[p, 0] = 1.0 - eta
                lam[p, 1] = xi
                lam[p, 2] = eta - xi
        return tri, lam

    @njit(cache=True)
    def _eval_p2_numba(tri, lam, cell_dofs, coeffs):
        n = tri.shape[0]
        out = np.empty(n)
        for p in range(n):
            l0 = lam[p, 0]
            l1 = lam[p, 1]
            l2 = lam[p, 2]
            t = tri[p]
            out[p] = (
                coeffs[cell_dofs[t, 0]] * l0 * (2.0 * l0 - 1.0)
                + coeffs[cell_dofs[t, 1]] * l1 * (2.0 * l1 - 1.0)
                + coeffs[cell_dofs[t, 2]] * l2 * (2.0 * l2 - 1.0)
                + coeffs[cell_dofs[t, 3]] * 4.0 * l0 * l1
                + coeffs[cell_dofs[t, 4]] * 4.0 * l1 * l2
                + coeffs[cell_dofs[t, 5]] * 4.0 * l2 * l0
            )
        return out

    @njit(cache=True)
    def _eval_p1_numba(tri, lam, triangles, coeffs):
        n = tri.shape[0]
        out = np.empty(n)
        for p in range(n):
            t = tri[p]
            out[p] = (
                coeffs[triangles[t, 0]] * lam[p, 0]
                + coeffs[triangles[t, 1]] * lam[p, 1]
                + coeffs[triangles[t, 2]] * lam[p, 2]
            )
        return out

    @njit(cache=True)
    def _noise_product_numba(kind, u, dw):
        out = np.empty_like(dw)
        flat_u = u.ravel()
        flat_dw = dw.ravel()
        flat_out = out.ravel()
        if kind == 0:
            flat_out[:] = 0.0
        elif kind == 1:
            flat_out[:] = flat_dw
        elif kind == 2:
            for p in range(flat_u.shape[0]):
                v = flat_u[p]
                flat_out[p] = np.sqrt(v * v + 1.0) * flat_dw[p]
        elif kind == 3:
            for p in range(flat_u.shape[0]):
                flat_out[p] = flat_u[p] * flat_dw[p]
        else:
            raise ValueError("unknown noise kind code")
        return out


def locate_points(points, x0, y0, inv_h, nx, ny):
    points = np.ascontiguousarray(points, dtype=np.float64)
    if USING_NUMBA:
        return _locate_points_numba(points, x0, y0, inv_h, nx, ny)
    return _locate_points_numpy(points, x0, y0, inv_h, nx, ny)


def eval_p2(tri, lam, cell_dofs, coeffs):
    if USING_NUMBA:
        return _eval_p2_numba(tri, lam, cell_dofs, np.ascontiguousarray(coeffs))
    return _eval_p2_numpy(tri, lam, cell_dofs, coeffs)


def eval_p1(tri, lam, triangles, coeffs):
    if USING_NUMBA:
        return _eval_p1_numba(tri, lam, triangles, np.ascontiguousarray(coeffs))
    return _eval_p1_numpy(tri, lam, triangles, coeffs)


def noise_product(kind, u, dw):
    if USING_NUMBA:
        return _noise_product_numba(kind, u, dw)
    return _noise_product_numpy(kind, u, dw)
