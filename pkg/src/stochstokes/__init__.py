"""Euler-Maruyama / Taylor-Hood solver for stochastic Stokes flow.

Time-dependent Stokes equations with multiplicative Q-Wiener noise,
discretized by the P2-P1 pair in space and implicit Euler with explicit
noise in time, plus the Monte Carlo convergence studies built on exactly
coupled Brownian paths.
"""

from .mesh import Mesh, build_structured_mesh, mesh_statistics
from .femspace import QuadratureRule, TaylorHoodSpace, default_quadrature, eval_basis
from .assembly import (
    AssembledSystem,
    QuadratureEvaluation,
    SaddlePointSystem,
    assemble_load,
    assemble_system,
    l2_project_div_free,
)
from .stochastic import (
    BrownianPath,
    NoiseModel,
    QWienerBasis,
    build_qwiener,
    ito_isometry_check,
    make_noise_model,
    sample_increment,
)
from .stepper import SchemeState, em_step, run_trajectory
from .config import ConfigError, ExperimentConfig, parse_config, emit_config, preset
from .experiment import (
    ErrorStats,
    RateReport,
    StudyResult,
    estimate_discrete_infsup,
    run_balanced_study,
    run_cavity_demo,
    run_fixed_h_k_sweep,
    run_temporal_study,
    write_study_csv,
)

__version__ = "0.1.0"
