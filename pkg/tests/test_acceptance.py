"""Acceptance suite: one test per release criterion, pinned tolerances.

Every criterion appears as one ``test_criterion_XX_*`` function so that
``pytest -v`` prints exactly one pass/fail line per criterion.  The heavy
Monte Carlo studies run once each as module fixtures and are shared by the
rate, divergence, and runtime checks.

Criterion 4 (fixed-h error degradation) is asserted exactly as stated and
is expected to FAIL: the effect it asks for is switched off at desk
amplitude.  With unit-normalized noise modes at amplitude c/(j+k), c = 0.1,
the velocity stays near 1e-3, so the noise factor sqrt(u^2 + 1) is constant
to five parts per million and the scheme behaves additively.  The error
component that grows as k shrinks at fixed h needs the noise amplitude to
respond to the solution state, so the coupled error simply keeps falling.
The assertion message carries the measured values; docs/README record the
analysis.  The criterion is kept red rather than weakened.
"""

import json
import time

import numpy as np
import pytest

import manufactured
from stochstokes.cli import main
from stochstokes.config import preset
from stochstokes.experiment import (
    build_discretization,
    estimate_discrete_infsup,
    run_balanced_study,
    run_fixed_h_k_sweep,
    run_temporal_study,
)
from stochstokes.stepper import make_step_solver, run_trajectory
from stochstokes.stochastic import BrownianPath, ito_isometry_check, make_noise_model

SLOPE_BAND = (0.35, 0.65)
SPATIAL_BAND = (2.7, 3.3)
DIV_LIMIT = 1e-8
TIME_BUDGET_SECONDS = 900.0

REPRO_INI = """\
[physics]
T = 0.25

[noise]
modes = 2

[levels]
h = 1/4
k_list = 1/8 1/16 1/32
k0 = 1/64

[mc]
n_p = 4
seed = 31415
"""


@pytest.fixture(scope="module")
def temporal_run():
    cfg = preset("test1-desk")
    t0 = time.perf_counter()
    result = run_temporal_study(cfg)
    wall = time.perf_counter() - t0
    return cfg, result, wall


@pytest.fixture(scope="module")
def balanced_run():
    cfg = preset("test1-balanced-desk")
    return cfg, run_balanced_study(cfg)


@pytest.fixture(scope="module")
def fixedh_run():
    cfg = preset("test1-fixedh-desk")
    return cfg, run_fixed_h_k_sweep(cfg)


@pytest.fixture(scope="module")
def manufactured_runs():
    return {n: manufactured.solve(n) for n in (4, 8, 16)}


@pytest.fixture(scope="module")
def stability_runs():
    """Mean stability functional at (1/8, 1/32) and (1/16, 1/64), driven by
    the same 16 Brownian paths on the shared k0 = 1/64 grid."""
    from stochstokes.assembly import QuadratureEvaluation, assemble_system
    from stochstokes.femspace import TaylorHoodSpace
    from stochstokes.mesh import build_structured_mesh
    from stochstokes.stochastic import build_qwiener

    model = make_noise_model("sqrt_u2_plus_1")
    out = {}
    for n, k in ((8, 1.0 / 32), (16, 1.0 / 64)):
        space = TaylorHoodSpace(build_structured_mesh((-1.0, 1.0, -1.0, 1.0), n))
        system = assemble_system(space, 1.0)
        qe = QuadratureEvaluation(space)
        basis = build_qwiener(space, system, 10, 0.1)
        solver = make_step_solver(space, system, k)
        vals = []
        max_div = 0.0
        for ell in range(16):
            path = BrownianPath(777, ell, 64, 100, 1.0 / 64)
            res = run_trajectory(
                space, system, qe, solver, basis, model, (1.0, 0.0),
                np.zeros(space.n_velocity), path, k, int(round(1.0 / k)),
                track_energy=True,
            )
            vals.append(res.diagnostics.stability_functional(1.0))
            max_div = max(max_div, res.diagnostics.div_inf)
        out[(n, k)] = (float(np.mean(vals)), max_div)
    return out


def test_criterion_01_temporal_velocity_rate(temporal_run):
    """Desk Test 1: AU slope in [0.35, 0.65] within the runtime budget."""
    cfg, result, wall = temporal_run
    slope = result.rates["au"].slope
    assert SLOPE_BAND[0] <= slope <= SLOPE_BAND[1], (
        f"temporal AU slope {slope:.4f} outside {SLOPE_BAND}"
    )
    assert wall <= TIME_BUDGET_SECONDS, (
        f"temporal study took {wall:.0f}s, budget {TIME_BUDGET_SECONDS:.0f}s"
    )


def test_criterion_02_temporal_pressure_rate(temporal_run):
    """Desk Test 1: time-averaged pressure AP slope in [0.35, 0.65]."""
    _, result, _ = temporal_run
    slope = result.rates["ap"].slope
    assert SLOPE_BAND[0] <= slope <= SLOPE_BAND[1], (
        f"temporal AP slope {slope:.4f} outside {SLOPE_BAND}"
    )


def test_criterion_03_balanced_refinement_rate(balanced_run):
    """Balanced (k, h) pairs against the finest reference: AU slope vs k in
    [0.35, 0.65]."""
    cfg, result = balanced_run
    assert [tuple(p) for p in cfg.pairs[:-1]] == [
        (1.0 / 8, 1.0 / 8),
        (1.0 / 16, 1.0 / 16),
        (1.0 / 32, 1.0 / 32),
    ]
    slope = result.rates["au"].slope
    assert SLOPE_BAND[0] <= slope <= SLOPE_BAND[1], (
        f"balanced AU slope {slope:.4f} outside {SLOPE_BAND}"
    )


def test_criterion_04_fixed_h_error_degradation(fixedh_run):
    """Fixed coarse mesh, shrinking k: AU at k=1/256 above AU at k=1/16.

    Expected to FAIL, and kept failing on purpose.  The degradation this
    criterion requires is driven by the state dependence of the noise, and
    at desk amplitude that dependence is five parts per million: the
    velocity stays near 1e-3, so sqrt(u^2 + 1) is constant for every
    realization and the noise is effectively additive.  For an additive
    system the coupled error against the shared-path reference decreases
    monotonically as k approaches k0, which is exactly what the measured
    values show.  The assertion states the criterion verbatim and reports
    those values.
    """
    cfg, result = fixedh_run
    au_coarse = result.stats.level(1.0 / 16, cfg.h).value("au")
    au_fine = result.stats.level(1.0 / 256, cfg.h).value("au")
    assert au_fine > au_coarse, (
        f"AU(k=1/256) = {au_fine:.6e} is not above AU(k=1/16) = "
        f"{au_coarse:.6e} (ratio {au_fine / au_coarse:.3f}); the fixed-h "
        "error keeps improving as k shrinks at desk scale, so the required "
        "degradation is absent"
    )


def test_criterion_05_deterministic_spatial_order(manufactured_runs):
    """Noise off, steady manufactured solution: L2 velocity error decays
    with slope in [2.7, 3.3] over n in {4, 8, 16}."""
    ns = np.array([4.0, 8.0, 16.0])
    errors = np.array([manufactured_runs[int(n)][0] for n in ns])
    slope, _ = np.polyfit(np.log(1.0 / ns), np.log(errors), 1)
    assert SPATIAL_BAND[0] <= slope <= SPATIAL_BAND[1], (
        f"spatial slope {slope:.4f} outside {SPATIAL_BAND}"
        f" (errors {errors.tolist()})"
    )


def test_criterion_06_divergence_constraint(
    temporal_run, balanced_run, fixedh_run, manufactured_runs, stability_runs
):
    """Every accepted step of every acceptance run stays weakly divergence
    free: max |D u| <= 1e-8."""
    worst = max(
        temporal_run[1].diagnostics["max_div_inf"],
        balanced_run[1].diagnostics["max_div_inf"],
        fixedh_run[1].diagnostics["max_div_inf"],
        max(div for _, div in manufactured_runs.values()),
        max(div for _, div in stability_runs.values()),
    )
    assert worst <= DIV_LIMIT, f"max divergence {worst:.3e} exceeds {DIV_LIMIT}"


def test_criterion_07_ito_isometry():
    """Test-1 noise basis: Monte Carlo E||W(T)||^2 within 5 standard errors
    of T times the eigenvalue trace over 10^4 samples."""
    cfg = preset("test1-desk")
    disc = build_discretization(cfg, cfg.h, [])
    report = ito_isometry_check(disc.system, disc.basis, cfg.T, 10_000, cfg.seed)
    assert abs(report["z_score"]) <= 5.0, (
        f"isometry z-score {report['z_score']:.3f} exceeds 5"
        f" (mean {report['sample_mean']:.6e} vs analytic {report['analytic']:.6e})"
    )


def test_criterion_08_infsup_h_independence():
    """Inf-sup constant at n=8 and n=16 differs by < 10% and stays above
    0.1 on both meshes."""
    cfg = preset("test1-desk")
    gammas = {}
    for n in (8, 16):
        disc = build_discretization(cfg, 1.0 / n, [])
        gammas[n] = estimate_discrete_infsup(
            disc.system, disc.space, tol=cfg.solver_tol
        ).gamma
    g8, g16 = gammas[8], gammas[16]
    assert g8 > 0.1 and g16 > 0.1, f"inf-sup constants too small: {gammas}"
    assert abs(g8 - g16) < 0.1 * max(g8, g16), (
        f"gamma_h varies by more than 10% between meshes: {gammas}"
    )


def test_criterion_09_stability_bound(stability_runs):
    """Discrete energy functional at (1/16, 1/64) is at most twice its
    value at (1/8, 1/32) for the same data and seed."""
    coarse, _ = stability_runs[(8, 1.0 / 32)]
    fine, _ = stability_runs[(16, 1.0 / 64)]
    assert fine <= 2.0 * coarse, (
        f"stability functional grew from {coarse:.6e} to {fine:.6e}"
        f" (ratio {fine / coarse:.3f}) under refinement"
    )


def test_criterion_10_thread_reproducibility(tmp_path):
    """Identical seed and config with different worker counts produce
    bit-identical CSV statistics."""
    cfg_path = tmp_path / "repro.ini"
    cfg_path.write_text(REPRO_INI, encoding="utf-8")
    payloads = []
    for threads in ("1", "2"):
        out = tmp_path / f"threads-{threads}"
        rc = main(
            [
                "temporal",
                "--config",
                str(cfg_path),
                "--threads",
                threads,
                "--out",
                str(out),
            ]
        )
        assert rc == 0
        payloads.append((out / "temporal.csv").read_bytes())
    assert payloads[0] == payloads[1], "CSV statistics differ across thread counts"
