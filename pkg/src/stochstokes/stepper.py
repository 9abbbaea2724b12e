"""Implicit Euler time stepping with explicit multiplicative noise.

One step advances ``(u^n, p^n)`` to ``(u^{n+1}, p^{n+1})`` by solving::

    (u^{n+1}, v) + k nu (grad u^{n+1}, grad v) + k (div v, p^{n+1})
        = (u^n, v) + int_{t_n}^{t_{n+1}} (f(s), v) ds
          + (B(t_n, u^n) dW_{n+1}, v)
    (div u^{n+1}, q) = 0

for all test functions, with the drift implicit and the noise term
explicit.  The divergence rows of the assembled system are scaled by ``k``
so the saddle matrix is symmetric; the pressure unknown itself is not
rescaled.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .assembly import (
    DEFAULT_SOLVER_TOL,
    AssembledSystem,
    QuadratureEvaluation,
    assemble_load,
    build_step_solver,
)
from .femspace import TaylorHoodSpace
from .stochastic import (
    BrownianPath,
    NoiseModel,
    QWienerBasis,
    assemble_stochastic_load,
    sample_increment,
)


@dataclass
class SchemeState:
    """Discrete state after ``n`` steps of size ``k``.

    ``p_timeavg`` accumulates ``k * sum_{m<=n} p^m``, the time-averaged
    pressure used by the pressure error statistics.
    """

    n: int
    t: float
    u: np.ndarray
    p: np.ndarray
    p_timeavg: np.ndarray
    k: float


@dataclass
class TrajectoryDiagnostics:
    """Per-trajectory invariant records."""

    div_inf: float = 0.0
    pressure_mean_raw: float = 0.0
    max_velocity_sq: float = 0.0
    grad_sq_sum: float = 0.0
    solver_iterations: int = 0

    def stability_functional(self, nu):
        """``max_n ||u^n||^2 + nu * k * sum_n ||grad u^n||^2``."""
        return self.max_velocity_sq + nu * self.grad_sq_sum


@dataclass
class TrajectoryResult:
    state: SchemeState
    diagnostics: TrajectoryDiagnostics
    snapshots: list = field(default_factory=list)


def em_step(solver, system, qe, basis, noise_model, state, load_f, scaled_increment):
    """Advance one step; returns the new state and the solve info."""
    rhs = system.M @ state.u + load_f
    if basis is not None and noise_model.kind != "zero":
        rhs = rhs + assemble_stochastic_load(
            qe, basis, noise_model, state.u, scaled_increment
        )
    u, p, info = solver.solve(rhs, p0=state.p)
    return (
        SchemeState(
            n=state.n + 1,
            t=state.t + state.k,
            u=u,
            p=p,
            p_timeavg=state.p_timeavg + state.k * p,
            k=state.k,
        ),
        info,
    )


def initial_state(space: TaylorHoodSpace, u0_coeffs, k):
    return SchemeState(
        n=0,
        t=0.0,
        u=np.asarray(u0_coeffs, dtype=np.float64).copy(),
        p=np.zeros(space.n_pressure),
        p_timeavg=np.zeros(space.n_pressure),
        k=float(k),
    )


def run_trajectory(
    space: TaylorHoodSpace,
    system: AssembledSystem,
    qe: QuadratureEvaluation,
    solver,
    basis: QWienerBasis,
    noise_model: NoiseModel,
    force,
    u0_coeffs,
    path: BrownianPath,
    k,
    n_steps,
    snapshot_times=(),
    track_energy=False,
):
    """Run ``n_steps`` of size ``k`` on one Brownian path.

    ``k`` must be an integer multiple of the path's fine step; each step
    consumes the corresponding block of fine increments, so trajectories
    with different ``k`` on the same path are exactly coupled.  Divergence
    and pressure-mean invariants are always tracked; the energy terms of
    the stability functional only with ``track_energy`` (two extra
    matvecs per step).
    """
    k = float(k)
    if path is not None:
        stride_f = k / path.k0
        stride = int(round(stride_f))
        if abs(stride_f - stride) > 1e-9 or stride < 1:
            raise ValueError(
                f"step {k} is not an integer multiple of the path fine step "
                f"{path.k0}"
            )
        if n_steps * stride > path.n_fine:
            raise ValueError(
                f"trajectory needs {n_steps * stride} fine steps, path has "
                f"{path.n_fine}"
            )
    else:
        stride = 0

    state = initial_state(space, u0_coeffs, k)
    diag = TrajectoryDiagnostics()
    if track_energy:
        diag.max_velocity_sq = max(
            diag.max_velocity_sq, system.velocity_norm_l2(state.u) ** 2
        )
    snapshots = []
    remaining = sorted(snapshot_times)

    force_static = not (callable(force) and _takes_time(force))
    load_f = assemble_load(qe, force, 0.0, k) if force_static else None

    for n in range(n_steps):
        if not force_static:
            load_f = assemble_load(qe, force, state.t, k)
        if basis is not None and noise_model.kind != "zero":
            inc = sample_increment(path, basis, n * stride, (n + 1) * stride)
        else:
            inc = None
        state, info = em_step(
            solver, system, qe, basis, noise_model, state, load_f, inc
        )
        diag.div_inf = max(diag.div_inf, info["div_inf"])
        diag.pressure_mean_raw = max(
            diag.pressure_mean_raw, abs(info["pressure_mean_raw"])
        )
        diag.solver_iterations += info["iterations"]
        if track_energy:
            diag.max_velocity_sq = max(
                diag.max_velocity_sq, system.velocity_norm_l2(state.u) ** 2
            )
            diag.grad_sq_sum += k * system.stability_energy(state.u)
        while remaining and state.t >= remaining[0] - 1e-9 * max(1.0, abs(k)):
            snapshots.append((remaining.pop(0), state.u.copy(), state.p.copy()))

    return TrajectoryResult(state=state, diagnostics=diag, snapshots=snapshots)


def _takes_time(func):
    import inspect

    try:
        return len(inspect.signature(func).parameters) >= 2
    except (TypeError, ValueError):
        return False


def make_step_solver(
    space,
    system,
    k,
    bc=None,
    strategy="direct_sparse",
    tol=DEFAULT_SOLVER_TOL,
):
    """Convenience wrapper building the per-step saddle solver from a bc dict."""
    if bc is None:
        bc = {m: (0.0, 0.0) for m in ("bottom", "right", "top", "left")}
    dofs, values = space.dirichlet_velocity(bc)
    return build_step_solver(
        space, system, k, dofs, values, strategy=strategy, tol=tol
    )
