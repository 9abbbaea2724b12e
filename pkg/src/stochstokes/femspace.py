"""Taylor-Hood (P2-P1) finite element space on a structured triangle mesh.

Scalar P2 degrees of freedom are ordered vertices first, then edge
midpoints, so the scalar dimension is ``n_vertices + n_edges``.  Velocity
fields store the two components in blocks: dof ``comp * n_scalar + s``
holds component ``comp`` of scalar dof ``s``.  Pressure is P1 on the
vertices.  The pressure constant mode is fixed with a Lagrange multiplier
during solves (see the assembly module); the space records that convention.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .mesh import BOUNDARY_MARKERS, Mesh

#: Local P2 basis order: vertex 0, 1, 2, then midpoints of edges
#: (0,1), (1,2), (2,0).
P2_LOCAL_EDGES = ((0, 1), (1, 2), (2, 0))


@dataclass
class QuadratureRule:
    """Symmetric quadrature on the reference triangle ``(0,0),(1,0),(0,1)``.

    Points are barycentric, weights sum to the reference area 1/2 so that
    ``integral = sum(w * f(points))`` without extra factors.
    """

    name: str
    points: np.ndarray
    weights: np.ndarray
    degree: int


def default_quadrature():
    """Six-point rule, exact for polynomials of total degree 4."""
    a = 0.445948490915965
    b = 0.091576213509771
    wa = 0.111690794839005
    wb = 0.054975871827661
    pts = np.array(
        [
            [1.0 - 2 * a, a, a],
            [a, 1.0 - 2 * a, a],
            [a, a, 1.0 - 2 * a],
            [1.0 - 2 * b, b, b],
            [b, 1.0 - 2 * b, b],
            [b, b, 1.0 - 2 * b],
        ]
    )
    w = np.array([wa, wa, wa, wb, wb, wb])
    return QuadratureRule(name="dunavant4", points=pts, weights=w, degree=4)


def eval_basis(kind, bary):
    """Shape function values at barycentric points.

    Parameters
    ----------
    kind : str
        ``"p2"`` (6 functions) or ``"p1"`` (3 functions).
    bary : (n, 3) array
        Barycentric coordinates.

    Returns
    -------
    (n, n_basis) array
    """
    bary = np.atleast_2d(np.asarray(bary, dtype=np.float64))
    if kind == "p1":
        return bary.copy()
    if kind == "p2":
        return kernels._p2_values_numpy(bary)
    raise ValueError(f"unknown basis kind {kind!r}")


def eval_basis_gradients(kind, bary):
    """Reference gradients d/d(xi, eta) with ``lambda = (1-xi-eta, xi, eta)``.

    Returns an ``(n, n_basis, 2)`` array.
    """
    bary = np.atleast_2d(np.asarray(bary, dtype=np.float64))
    n = bary.shape[0]
    if kind == "p1":
        g = np.empty((n, 3, 2))
        g[:, 0] = (-1.0, -1.0)
        g[:, 1] = (1.0, 0.0)
        g[:, 2] = (0.0, 1.0)
        return g
    if kind != "p2":
        raise ValueError(f"unknown basis kind {kind!r}")
    l0, l1, l2 = bary[:, 0], bary[:, 1], bary[:, 2]
    g = np.empty((n, 6, 2))
    g[:, 0, 0] = -(4.0 * l0 - 1.0)
    g[:, 0, 1] = -(4.0 * l0 - 1.0)
    g[:, 1, 0] = 4.0 * l1 - 1.0
    g[:, 1, 1] = 0.0
    g[:, 2, 0] = 0.0
    g[:, 2, 1] = 4.0 * l2 - 1.0
    g[:, 3, 0] = 4.0 * (l0 - l1)
    g[:, 3, 1] = -4.0 * l1
    g[:, 4, 0] = 4.0 * l2
    g[:, 4, 1] = 4.0 * l1
    g[:, 5, 0] = -4.0 * l2
    g[:, 5, 1] = 4.0 * (l0 - l2)
    return g


def _as_point_function(value):
    """Wrap constants / tuples so they evaluate like vector functions."""
    if callable(value):
        return value
    arr = np.asarray(value, dtype=np.float64)

    def wrapped(points):
        return np.broadcast_to(arr, (points.shape[0],) + arr.shape).copy()

    return wrapped


@dataclass
class TaylorHoodSpace:
    """P2 velocity / P1 pressure space over one mesh."""

    mesh: Mesh
    quadrature: QuadratureRule = field(default_factory=default_quadrature)
    pressure_mean_handling: str = "lagrange_multiplier"

    def __post_init__(self):
        mesh = self.mesh
        self.n_scalar = mesh.n_vertices + mesh.n_edges
        self.n_velocity = 2 * self.n_scalar
        self.n_pressure = mesh.n_vertices
        self.cell_scalar_dofs = np.column_stack(
            [mesh.triangles, mesh.n_vertices + mesh.triangle_edges]
        )
        self.dof_points = np.concatenate([mesh.nodes, mesh.edge_midpoints()], axis=0)

    # -- dof bookkeeping ---------------------------------------------------

    def velocity_dof(self, scalar_dof, comp):
        return comp * self.n_scalar + scalar_dof

    def velocity_components(self, coeffs):
        """View a velocity coefficient vector as a (2, n_scalar) array."""
        return np.asarray(coeffs).reshape(2, self.n_scalar)

    def boundary_scalar_dofs(self, marker):
        """Scalar dofs supported on one boundary side (vertices + midpoints)."""
        mesh = self.mesh
        verts = mesh.boundary_vertices(marker)
        mids = mesh.n_vertices + mesh.boundary_edges[marker]
        return np.concatenate([verts, mids])

    def dirichlet_velocity(self, bc):
        """Constrained velocity dofs and their values.

        Parameters
        ----------
        bc : dict
            Marker name -> vector value, as a constant pair or a callable
            mapping an ``(n, 2)`` point array to ``(n, 2)`` values.
            Markers are applied in the fixed order bottom, right, top,
            left; at shared corner dofs the last marker written wins.

        Returns
        -------
        dofs : (m,) int array, sorted
        values : (m,) float array
        """
        for marker in bc:
            if marker not in BOUNDARY_MARKERS:
                raise ValueError(
                    f"unknown boundary marker {marker!r}; expected one of "
                    f"{BOUNDARY_MARKERS}"
                )
        assigned = {}
        for marker in BOUNDARY_MARKERS:
            if marker not in bc:
                continue
            func = _as_point_function(bc[marker])
            sdofs = self.boundary_scalar_dofs(marker)
            vals = np.asarray(func(self.dof_points[sdofs]), dtype=np.float64)
            for s, v in zip(sdofs, vals):
                assigned[int(s)] = (float(v[0]), float(v[1]))
        if not assigned:
            return np.empty(0, dtype=np.int64), np.empty(0)
        scalar = np.array(sorted(assigned), dtype=np.int64)
        pair_vals = np.array([assigned[int(s)] for s in scalar])
        dofs = np.concatenate([scalar, self.n_scalar + scalar])
        values = np.concatenate([pair_vals[:, 0], pair_vals[:, 1]])
        return dofs, values

    # -- interpolation and evaluation --------------------------------------

    def interpolate_velocity(self, func):
        """Nodal interpolation of a vector field into the P2 space.

        Exact for polynomial components of degree <= 2.
        """
        func = _as_point_function(func)
        vals = np.asarray(func(self.dof_points), dtype=np.float64)
        if vals.shape != (self.n_scalar, 2):
            raise ValueError(
                f"velocity function returned shape {vals.shape}, expected "
                f"{(self.n_scalar, 2)}"
            )
        return vals.T.reshape(-1).copy()

    def interpolate_pressure(self, func):
        """Nodal interpolation into P1; exact for polynomials of degree <= 1."""
        func = _as_point_function(func)
        pts = self.mesh.nodes
        vals = np.asarray(func(pts), dtype=np.float64)
        if vals.shape != (self.n_pressure,):
            raise ValueError(
                f"pressure function returned shape {vals.shape}, expected "
                f"{(self.n_pressure,)}"
            )
        return vals.copy()

    def _locate(self, points):
        mesh = self.mesh
        x0, _, y0, _ = mesh.bounds
        return kernels.locate_points(
            np.asarray(points, dtype=np.float64),
            x0,
            y0,
            float(mesh.n),
            mesh.nx,
            mesh.ny,
        )

    def evaluate_velocity(self, coeffs, points):
        """Evaluate a velocity coefficient field at arbitrary points."""
        tri, lam = self._locate(points)
        comps = self.velocity_components(coeffs)
        out = np.empty((len(tri), 2))
        for c in range(2):
            out[:, c] = kernels.eval_p2(tri, lam, self.cell_scalar_dofs, comps[c])
        return out

    def evaluate_pressure(self, coeffs, points):
        tri, lam = self._locate(points)
        return kernels.eval_p1(tri, lam, self.mesh.triangles, np.asarray(coeffs))

    def interpolate_velocity_from(self, other, coeffs):
        """Interpolate a velocity field from another (coarser) space.

        Evaluates the source field at this space's dof support points; on
        nested structured meshes this is the exact embedding.
        """
        vals = other.evaluate_velocity(coeffs, self.dof_points)
        return vals.T.reshape(-1).copy()

    def interpolate_pressure_from(self, other, coeffs):
        return other.evaluate_pressure(coeffs, self.mesh.nodes)
