"""Operator assembly and saddle-point solves for the P2-P1 pair.

Assembled operators (all scipy CSR in canonical form, deterministic entry
order):

- ``M``   vector mass matrix, ``(2S, 2S)`` with ``S`` scalar P2 dofs,
- ``A``   vector stiffness matrix for ``(grad v, grad w)``,
- ``D``   divergence matrix for ``(div v, q)``, shape ``(P, 2S)``,
- ``Mp``  P1 pressure mass matrix.

Boundary conditions are imposed by row/column elimination onto the free
dofs with the matching right-hand side correction, and the pressure
constant mode is pinned by one Lagrange multiplier row/column carrying the
pressure mass row sums; the weighted mean is additionally subtracted from
every returned pressure as a cross-check of the multiplier.
"""

from __future__ import annotations

import inspect
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .femspace import TaylorHoodSpace, eval_basis, eval_basis_gradients

DEFAULT_SOLVER_TOL = 1e-10
SOLVER_STRATEGIES = ("direct_sparse", "uzawa_cg", "artificial_compressibility")


# ---------------------------------------------------------------------------
# geometry and element tensors
# ---------------------------------------------------------------------------


def triangle_geometry(mesh):
    """Jacobian determinant and inverse-transpose per triangle.

    The affine map sends the reference triangle (0,0),(1,0),(0,1) to the
    physical one; ``detj > 0`` for counterclockwise triangles.
    """
    v0 = mesh.nodes[mesh.triangles[:, 0]]
    v1 = mesh.nodes[mesh.triangles[:, 1]]
    v2 = mesh.nodes[mesh.triangles[:, 2]]
    j00 = v1[:, 0] - v0[:, 0]
    j10 = v1[:, 1] - v0[:, 1]
    j01 = v2[:, 0] - v0[:, 0]
    j11 = v2[:, 1] - v0[:, 1]
    detj = j00 * j11 - j01 * j10
    inv_t = np.empty((mesh.n_triangles, 2, 2))
    inv_t[:, 0, 0] = j11 / detj
    inv_t[:, 0, 1] = -j10 / detj
    inv_t[:, 1, 0] = -j01 / detj
    inv_t[:, 1, 1] = j00 / detj
    return detj, inv_t


def _reference_tensors(quad):
    """Quadrature-evaluated reference-element tensors."""
    phi = eval_basis("p2", quad.points)
    psi = eval_basis("p1", quad.points)
    gphi = eval_basis_gradients("p2", quad.points)
    w = quad.weights
    mass_p2 = np.einsum("q,qi,qj->ij", w, phi, phi)
    mass_p1 = np.einsum("q,qi,qj->ij", w, psi, psi)
    stiff = np.einsum("q,qia,qjb->abij", w, gphi, gphi)
    div = np.einsum("q,qp,qba->apb", w, psi, gphi)
    return phi, psi, mass_p2, mass_p1, stiff, div


def _scatter(rows, cols, vals, shape):
    mat = sp.coo_matrix(
        (vals.ravel(), (rows.ravel(), cols.ravel())), shape=shape
    ).tocsr()
    mat.sum_duplicates()
    mat.sort_indices()
    return mat


def p1_element_stiffness(v0, v1, v2):
    """P1 stiffness matrix of a single triangle, for cross-checks."""
    verts = np.array([v0, v1, v2], dtype=np.float64)
    j = np.column_stack([verts[1] - verts[0], verts[2] - verts[0]])
    detj = np.linalg.det(j)
    inv_t = np.linalg.inv(j).T
    grads_ref = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])
    grads = grads_ref @ inv_t.T
    return 0.5 * abs(detj) * (grads @ grads.T)


def symmetry_error(mat):
    """Largest absolute entry of ``mat - mat.T``."""
    diff = (mat - mat.T).tocoo()
    return 0.0 if diff.nnz == 0 else float(np.max(np.abs(diff.data)))


@dataclass
class AssembledSystem:
    """Global operators of the discrete Stokes pair plus the viscosity."""

    M: sp.csr_matrix
    A: sp.csr_matrix
    D: sp.csr_matrix
    Mp: sp.csr_matrix
    nu: float

    def stability_energy(self, u):
        """H1 seminorm square ``u^T A u`` used by the energy diagnostics."""
        return float(u @ (self.A @ u))

    def velocity_norm_l2(self, u):
        return float(np.sqrt(max(u @ (self.M @ u), 0.0)))

    def pressure_norm_l2(self, p):
        return float(np.sqrt(max(p @ (self.Mp @ p), 0.0)))


def assemble_system(space: TaylorHoodSpace, nu: float) -> AssembledSystem:
    """Assemble mass, stiffness, divergence and pressure-mass operators."""
    mesh = space.mesh
    detj, inv_t = triangle_geometry(mesh)
    _, _, mass_p2, mass_p1, stiff, div = _reference_tensors(space.quadrature)

    # metric tensor C = Jinv Jinv^T per element, contracted with the
    # reference stiffness blocks
    c = np.einsum("tba,tbc->tac", inv_t, inv_t)
    ke = detj[:, None, None] * np.einsum("tab,abij->tij", c, stiff)
    me = detj[:, None, None] * mass_p2[None, :, :]
    mpe = detj[:, None, None] * mass_p1[None, :, :]
    # de[t, comp, p, b] = detj * sum_a inv_t[comp, a] * div[a, p, b]
    de = detj[:, None, None, None] * np.einsum("tca,apb->tcpb", inv_t, div)

    sdofs = space.cell_scalar_dofs
    n_s = space.n_scalar
    rows6 = np.repeat(sdofs[:, :, None], 6, axis=2)
    cols6 = np.repeat(sdofs[:, None, :], 6, axis=1)
    mass_s = _scatter(rows6, cols6, me, (n_s, n_s))
    stiff_s = _scatter(rows6, cols6, ke, (n_s, n_s))

    tris = mesh.triangles
    rows3 = np.repeat(tris[:, :, None], 3, axis=2)
    cols3 = np.repeat(tris[:, None, :], 3, axis=1)
    mp = _scatter(rows3, cols3, mpe, (space.n_pressure, space.n_pressure))

    rows_d = np.repeat(tris[:, :, None], 6, axis=2)
    cols_d = np.repeat(sdofs[:, None, :], 3, axis=1)
    dx = _scatter(rows_d, cols_d, de[:, 0], (space.n_pressure, n_s))
    dy = _scatter(rows_d, cols_d, de[:, 1], (space.n_pressure, n_s))

    mass_v = sp.block_diag([mass_s, mass_s], format="csr")
    stiff_v = sp.block_diag([stiff_s, stiff_s], format="csr")
    d = sp.hstack([dx, dy], format="csr")
    for mat in (mass_v, stiff_v, d, mp):
        mat.sum_duplicates()
        mat.sort_indices()
    return AssembledSystem(M=mass_v, A=stiff_v, D=d, Mp=mp, nu=float(nu))


def dump_operators(system: AssembledSystem, directory):
    """Write the four operators in Matrix Market exchange format."""
    import os

    import scipy.io

    os.makedirs(directory, exist_ok=True)
    names = {
        "mass": system.M,
        "stiffness": system.A,
        "divergence": system.D,
        "pressure_mass": system.Mp,
    }
    paths = {}
    for name, mat in names.items():
        path = os.path.join(directory, f"{name}.mtx")
        scipy.io.mmwrite(path, mat)
        paths[name] = path
    return paths


# ---------------------------------------------------------------------------
# quadrature evaluation operators
# ---------------------------------------------------------------------------


class QuadratureEvaluation:
    """Precomputed gather/scatter between dof vectors and quadrature points.

    ``points`` lists the physical quadrature points of all triangles in one
    flat array; fields are moved there with one sparse matvec, and
    quadrature-weighted loads come back the same way.  These operators
    carry the load assembly and all function-space norms of analytic
    fields.
    """

    def __init__(self, space: TaylorHoodSpace):
        self.space = space
        mesh = space.mesh
        quad = space.quadrature
        detj, _ = triangle_geometry(mesh)
        phi = eval_basis("p2", quad.points)
        psi = eval_basis("p1", quad.points)
        nq = quad.points.shape[0]
        nt = mesh.n_triangles
        n_rows = nt * nq

        v0 = mesh.nodes[mesh.triangles[:, 0]]
        v1 = mesh.nodes[mesh.triangles[:, 1]]
        v2 = mesh.nodes[mesh.triangles[:, 2]]
        bary = quad.points
        pts = (
            bary[None, :, 0, None] * v0[:, None, :]
            + bary[None, :, 1, None] * v1[:, None, :]
            + bary[None, :, 2, None] * v2[:, None, :]
        )
        self.points = pts.reshape(n_rows, 2)
        self.weights = (quad.weights[None, :] * detj[:, None]).reshape(n_rows)

        rows = np.repeat(np.arange(n_rows), 6)
        cols = np.repeat(space.cell_scalar_dofs, nq, axis=0).ravel()
        vals = np.tile(phi, (nt, 1)).ravel()
        self.eval_p2 = sp.coo_matrix(
            (vals, (rows, cols)), shape=(n_rows, space.n_scalar)
        ).tocsr()
        self.load_p2 = (
            self.eval_p2.multiply(self.weights[:, None]).T.tocsr()
        )

        rows1 = np.repeat(np.arange(n_rows), 3)
        cols1 = np.repeat(mesh.triangles, nq, axis=0).ravel()
        vals1 = np.tile(psi, (nt, 1)).ravel()
        self.eval_p1 = sp.coo_matrix(
            (vals1, (rows1, cols1)), shape=(n_rows, space.n_pressure)
        ).tocsr()

    def velocity_at_quadrature(self, u):
        comps = self.space.velocity_components(u)
        return np.column_stack([self.eval_p2 @ comps[0], self.eval_p2 @ comps[1]])

    def pressure_at_quadrature(self, p):
        return self.eval_p1 @ np.asarray(p)

    def velocity_load(self, values):
        """Load vector ``(f, phi_i)`` from pointwise values at quadrature."""
        return np.concatenate(
            [self.load_p2 @ values[:, 0], self.load_p2 @ values[:, 1]]
        )

    def integrate(self, values):
        return float(self.weights @ values)

    def norm_l2(self, values):
        """L2 norm of pointwise (possibly vector) quadrature values."""
        values = np.asarray(values)
        sq = values * values
        if sq.ndim == 2:
            sq = sq.sum(axis=1)
        return float(np.sqrt(max(self.integrate(sq), 0.0)))


def _force_values(qe: QuadratureEvaluation, force, t):
    if callable(force):
        params = [
            p
            for p in inspect.signature(force).parameters.values()
            if p.default is inspect.Parameter.empty
            and p.kind
            in (inspect.Parameter.POSITIONAL_ONLY, inspect.Parameter.POSITIONAL_OR_KEYWORD)
        ]
        if len(params) >= 2:
            vals = force(qe.points, t)
        else:
            vals = force(qe.points)
        return np.asarray(vals, dtype=np.float64)
    arr = np.asarray(force, dtype=np.float64)
    return np.broadcast_to(arr, (qe.points.shape[0], 2))


def assemble_load(qe: QuadratureEvaluation, force, t_n, k):
    """Time-slab load ``integral over (t_n, t_n + k) of (f(s), v) ds``.

    Exact (``k * (f, v)``) for forces constant in time; the midpoint value
    ``f(t_n + k/2)`` is used otherwise.
    """
    time_dependent = callable(force) and len(
        inspect.signature(force).parameters
    ) >= 2
    t_eval = t_n + 0.5 * k if time_dependent else t_n
    vals = _force_values(qe, force, t_eval)
    return k * qe.velocity_load(vals)


# ---------------------------------------------------------------------------
# constrained saddle-point systems
# ---------------------------------------------------------------------------


class SaddlePointSystem:
    """Velocity/pressure saddle solve with eliminated Dirichlet dofs.

    The assembled matrix is the symmetric block system::

        [ Muu_ff   alpha*Df^T   0  ] [u_f]   [b_f - Muu_fc u_c   ]
        [ alpha*Df    0         mp ] [ p ] = [-alpha*D_c u_c + d ]
        [   0        mp^T       0  ] [mu ]   [ 0                 ]

    where ``mp = Mp @ 1`` pins the pressure mean and ``alpha`` scales the
    divergence coupling (the time step during stepping, one for
    projections).  Three interchangeable strategies solve it: a sparse
    direct factorization (default), conjugate gradients on the pressure
    Schur complement, and the artificial-compressibility iteration
    (Richardson with a spectrally chosen relaxation).
    """

    def __init__(
        self,
        muu,
        system: AssembledSystem,
        alpha,
        dirichlet_dofs,
        dirichlet_values,
        strategy="direct_sparse",
        tol=DEFAULT_SOLVER_TOL,
    ):
        if strategy not in SOLVER_STRATEGIES:
            raise ValueError(
                f"unknown solver strategy {strategy!r}; expected one of "
                f"{SOLVER_STRATEGIES}"
            )
        self.system = system
        self.alpha = float(alpha)
        self.strategy = strategy
        self.tol = float(tol)
        n_u = muu.shape[0]
        self.n_u = n_u
        self.n_p = system.Mp.shape[0]

        free = np.ones(n_u, dtype=bool)
        free[dirichlet_dofs] = False
        self.free = np.flatnonzero(free)
        self.constrained = np.asarray(dirichlet_dofs, dtype=np.int64)
        self.u_c = np.asarray(dirichlet_values, dtype=np.float64)

        muu = muu.tocsr()
        self.muu_ff = muu[self.free][:, self.free].tocsc()
        self.d_f = system.D.tocsr()[:, self.free].tocsr()
        self.mp_vec = np.asarray(system.Mp @ np.ones(self.n_p))
        self.area = float(self.mp_vec.sum())

        # right-hand-side corrections from the constrained values
        if self.constrained.size:
            self.corr_u = muu[self.free][:, self.constrained] @ self.u_c
            self.corr_div = self.alpha * (
                system.D.tocsr()[:, self.constrained] @ self.u_c
            )
        else:
            self.corr_u = np.zeros(self.free.size)
            self.corr_div = np.zeros(self.n_p)

        if strategy == "direct_sparse":
            k_mat = sp.bmat(
                [
                    [self.muu_ff, self.alpha * self.d_f.T, None],
                    [self.alpha * self.d_f, None, self.mp_vec[:, None]],
                    [None, self.mp_vec[None, :], None],
                ],
                format="csc",
            )
            # symmetric-mode ordering keeps the fill of the indefinite
            # saddle factorization an order of magnitude lower than the
            # default column ordering; the relaxed pivot threshold is safe
            # here and the divergence of every step is checked downstream
            self.factor = spla.splu(
                k_mat,
                permc_spec="MMD_AT_PLUS_A",
                options=dict(SymmetricMode=True, DiagPivotThresh=1e-3),
            )
        else:
            spd_opts = dict(
                permc_spec="MMD_AT_PLUS_A", options=dict(SymmetricMode=True)
            )
            self.muu_factor = spla.splu(self.muu_ff, **spd_opts)
            self.mp_factor = spla.splu(system.Mp.tocsc(), **spd_opts)
            if strategy == "artificial_compressibility":
                self.rho = self._estimate_relaxation()

    # -- helpers -----------------------------------------------------------

    def weighted_mean(self, p):
        return float(self.mp_vec @ p) / self.area

    def _schur_apply(self, p):
        return self.alpha**2 * (
            self.d_f @ self.muu_factor.solve(self.d_f.T @ p)
        )

    def _estimate_relaxation(self):
        """Largest generalized eigenvalue of (Schur, Mp) by power iteration."""
        rng = np.random.default_rng(0)
        q = rng.standard_normal(self.n_p)
        q -= self.weighted_mean(q)
        lam = 1.0
        for _ in range(30):
            z = self.mp_factor.solve(self._schur_apply(q))
            z -= self.weighted_mean(z)
            norm = np.linalg.norm(z)
            if norm == 0.0:
                break
            lam = float(q @ self._schur_apply(q) / (q @ (self.system.Mp @ q)))
            q = z / norm
        return 1.5 / lam

    def _solve_schur(self, rhs_u, rhs_div, p0=None):
        """Reduced pressure problem S p = g with the constant mode deflated."""
        g = self.alpha * (self.d_f @ self.muu_factor.solve(rhs_u)) - rhs_div
        scale = np.linalg.norm(g)
        info = {"iterations": 0}
        p = np.zeros(self.n_p) if p0 is None else p0.copy()
        if scale == 0.0:
            return p, info
        if self.strategy == "uzawa_cg":
            p -= self.weighted_mean(p)
            r = g - self._schur_apply(p)
            z = self.mp_factor.solve(r)
            z -= self.weighted_mean(z)
            d = z.copy()
            rz = float(r @ z)
            for it in range(4 * self.n_p):
                sd = self._schur_apply(d)
                denom = float(d @ sd)
                if denom <= 0.0:
                    break
                step = rz / denom
                p += step * d
                r -= step * sd
                if np.linalg.norm(r) <= self.tol * scale:
                    info["iterations"] = it + 1
                    break
                z = self.mp_factor.solve(r)
                z -= self.weighted_mean(z)
                rz_new = float(r @ z)
                d = z + (rz_new / rz) * d
                rz = rz_new
            else:
                info["iterations"] = 4 * self.n_p
        else:  # artificial compressibility
            for it in range(20000):
                r = g - self._schur_apply(p)
                if np.linalg.norm(r) <= self.tol * scale:
                    info["iterations"] = it
                    break
                p += self.rho * (self.mp_factor.solve(r))
                p -= self.weighted_mean(p)
            else:
                info["iterations"] = 20000
        return p, info

    # -- public solve ------------------------------------------------------

    def solve(self, rhs_u_full, rhs_div=None, p0=None):
        """Solve for velocity and pressure.

        Parameters
        ----------
        rhs_u_full : (n_u,) array
            Momentum right-hand side over all velocity dofs; constrained
            rows are ignored (their correction is applied internally).
        rhs_div : (n_p,) array, optional
            Divergence-row data (defaults to zero).
        p0 : array, optional
            Warm start for the iterative strategies.

        Returns
        -------
        u : (n_u,) array with constrained values filled in
        p : (n_p,) array with weighted mean removed
        info : dict with ``div_inf``, ``pressure_mean_raw``, ``multiplier``,
            ``iterations``
        """
        rhs_f = rhs_u_full[self.free] - self.corr_u
        rhs_d = -self.corr_div.copy()
        if rhs_div is not None:
            rhs_d += rhs_div

        if self.strategy == "direct_sparse":
            rhs = np.concatenate([rhs_f, rhs_d, [0.0]])
            x = self.factor.solve(rhs)
            u_f = x[: self.free.size]
            p = x[self.free.size : self.free.size + self.n_p]
            mu = float(x[-1])
            iterations = 1
        else:
            p, schur_info = self._solve_schur(rhs_f, rhs_d, p0=p0)
            u_f = self.muu_factor.solve(rhs_f - self.alpha * (self.d_f.T @ p))
            mu = 0.0
            iterations = schur_info["iterations"]

        u = np.empty(self.n_u)
        u[self.free] = u_f
        if self.constrained.size:
            u[self.constrained] = self.u_c

        mean_raw = self.weighted_mean(p)
        p = p - mean_raw
        div = self.system.D @ u
        info = {
            "div_inf": float(np.max(np.abs(div))) if div.size else 0.0,
            "pressure_mean_raw": mean_raw,
            "multiplier": mu,
            "iterations": iterations,
        }
        return u, p, info


def build_step_solver(
    space: TaylorHoodSpace,
    system: AssembledSystem,
    k,
    dirichlet_dofs,
    dirichlet_values,
    strategy="direct_sparse",
    tol=DEFAULT_SOLVER_TOL,
):
    """Saddle solver for one implicit Euler step of size ``k``."""
    muu = (system.M + k * system.nu * system.A).tocsr()
    return SaddlePointSystem(
        muu,
        system,
        alpha=k,
        dirichlet_dofs=dirichlet_dofs,
        dirichlet_values=dirichlet_values,
        strategy=strategy,
        tol=tol,
    )


def l2_project_div_free(
    space: TaylorHoodSpace,
    system: AssembledSystem,
    qe: QuadratureEvaluation,
    u0,
    dirichlet_dofs=None,
    dirichlet_values=None,
    strategy="direct_sparse",
    tol=DEFAULT_SOLVER_TOL,
):
    """L2 projection onto the discretely divergence-free subspace.

    Solves ``M u + D^T mu = (u0, v), D u = 0`` with the boundary values
    eliminated.  Returns the projected coefficients and an info dict.
    """
    if dirichlet_dofs is None:
        dirichlet_dofs, dirichlet_values = space.dirichlet_velocity(
            {m: (0.0, 0.0) for m in ("bottom", "right", "top", "left")}
        )
    saddle = SaddlePointSystem(
        system.M,
        system,
        alpha=1.0,
        dirichlet_dofs=dirichlet_dofs,
        dirichlet_values=dirichlet_values,
        strategy=strategy,
        tol=tol,
    )
    if callable(u0) or np.asarray(u0).size == 2:
        vals = _force_values(qe, u0, 0.0)
    else:
        vals = qe.velocity_at_quadrature(np.asarray(u0))
    rhs = qe.velocity_load(vals)
    u, _, info = saddle.solve(rhs)
    return u, info
