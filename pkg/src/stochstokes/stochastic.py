"""Q-Wiener noise: modal basis, Brownian paths, and stochastic loads.

The noise is a truncated expansion ``W(x, t) = sum_m sqrt(lambda_m) q_m(x)
beta_m(t)`` over ``M_trunc^2`` modes indexed by pairs ``(j, k)``.  The mode
shapes come from the generating fields::

    g_{j,k}(x, y) = ( c (sin(j pi x) + (j pi x)^3) e^{-k pi y},
                      c (cos(j pi y) + (j pi y)^3) e^{-k pi x} )

interpolated once into the P2 velocity space and normalized there, with
the L2 norm evaluated by the same quadrature that assembles the mass
matrix.  Two eigenvalue scalings are available:

- ``raw``:        lambda_{j,k} = ||g_{j,k}||_{L2} / (j + k)^2
- ``normalized``: lambda_{j,k} = c^2 / (j + k)^2

The raw scaling follows the generating-field normalization literally; its
eigenvalues grow like ``e^{k pi}`` on domains with negative coordinates,
which drives the explicit noise term of the time stepper out of
double-precision range.  The normalized scaling keeps the same spatial
modes and amplitude parameter but bounds the spectrum by ``c^2/(j+k)^2``,
and is what the experiment presets use.

Brownian increments come from the counter-based Philox generator, keyed by
``(master seed, stream)`` so that realizations are independent streams and
any (fine step, mode) increment has a fixed counter address.  Coarse
increments are computed by sequentially summing the fine draws, which makes
path coupling across step sizes exact.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .assembly import AssembledSystem, QuadratureEvaluation
from .femspace import TaylorHoodSpace

NOISE_KIND_CODES = {
    "zero": kernels.NOISE_ZERO,
    "additive_one": kernels.NOISE_ADDITIVE_ONE,
    "sqrt_u2_plus_1": kernels.NOISE_SQRT_U2_PLUS_1,
    "linear_u": kernels.NOISE_LINEAR_U,
}

#: Lipschitz constants of v -> B(v) in L2, per kind; used by the stability
#: diagnostics.
NOISE_LIPSCHITZ = {
    "zero": 0.0,
    "additive_one": 0.0,
    "sqrt_u2_plus_1": 1.0,
    "linear_u": 1.0,
}

LAMBDA_SCALINGS = ("normalized", "raw")

_AUX_STREAM_BASE = 1 << 62


@dataclass(frozen=True)
class NoiseModel:
    """Pointwise multiplier ``B`` applied componentwise to the velocity."""

    kind: str

    def __post_init__(self):
        if self.kind not in NOISE_KIND_CODES:
            raise ValueError(
                f"unknown noise kind {self.kind!r}; expected one of "
                f"{tuple(NOISE_KIND_CODES)}"
            )

    @property
    def code(self):
        return NOISE_KIND_CODES[self.kind]

    @property
    def lipschitz_constant(self):
        return NOISE_LIPSCHITZ[self.kind]

    @property
    def is_additive(self):
        """True when B does not depend on the velocity."""
        return self.kind in ("zero", "additive_one")


def make_noise_model(kind):
    return NoiseModel(kind=kind)


@dataclass
class QWienerBasis:
    """Truncated modal basis of the Q-Wiener process on one space."""

    modes: np.ndarray  # (n_modes, 2) of (j, k)
    lambdas: np.ndarray
    coeffs: np.ndarray  # (n_velocity, n_modes), normalized mode fields
    g_norms: np.ndarray
    c: float
    lambda_scaling: str

    @property
    def n_modes(self):
        return self.modes.shape[0]

    @property
    def sqrt_lambdas(self):
        return np.sqrt(self.lambdas)

    @property
    def trace(self):
        """Sum of the eigenvalues, the analytic Ito-isometry density."""
        return float(self.lambdas.sum())

    def field_coefficients(self, scaled_modal):
        """Velocity coefficients of ``sum_m scaled_modal[m] q_m``."""
        return self.coeffs @ scaled_modal


def generating_field(j, k, c):
    """The vector field g_{j,k}; callable on an (n, 2) point array."""

    def func(points):
        x = points[:, 0]
        y = points[:, 1]
        jx = j * np.pi * x
        ky = k * np.pi * y
        jy = j * np.pi * y
        kx = k * np.pi * x
        gx = c * (np.sin(jx) + jx**3) * np.exp(-ky)
        gy = c * (np.cos(jy) + jy**3) * np.exp(-kx)
        return np.column_stack([gx, gy])

    return func


def build_qwiener(
    space: TaylorHoodSpace,
    system: AssembledSystem,
    n_trunc: int,
    c: float,
    lambda_scaling: str = "normalized",
) -> QWienerBasis:
    """Interpolate and normalize the first ``n_trunc^2`` modes.

    Mode order is ``(j, k)`` with ``j`` outer, ``k`` inner, both from 1 to
    ``n_trunc``.  A zero amplitude ``c = 0`` yields zero eigenvalues and
    zero mode fields.
    """
    if lambda_scaling not in LAMBDA_SCALINGS:
        raise ValueError(
            f"unknown lambda scaling {lambda_scaling!r}; expected one of "
            f"{LAMBDA_SCALINGS}"
        )
    if n_trunc < 1:
        raise ValueError(f"mode truncation must be >= 1, got {n_trunc}")
    modes = np.array(
        [(j, k) for j in range(1, n_trunc + 1) for k in range(1, n_trunc + 1)],
        dtype=np.int64,
    )
    n_modes = modes.shape[0]
    coeffs = np.zeros((space.n_velocity, n_modes))
    lambdas = np.zeros(n_modes)
    g_norms = np.zeros(n_modes)
    for m, (j, k) in enumerate(modes):
        g = space.interpolate_velocity(generating_field(int(j), int(k), c))
        norm = system.velocity_norm_l2(g)
        g_norms[m] = norm
        decay = float(j + k) ** -2
        if norm > 0.0:
            coeffs[:, m] = g / norm
        if lambda_scaling == "raw":
            lambdas[m] = norm * decay
        else:
            lambdas[m] = c * c * decay if norm > 0.0 else 0.0
    return QWienerBasis(
        modes=modes,
        lambdas=lambdas,
        coeffs=coeffs,
        g_norms=g_norms,
        c=float(c),
        lambda_scaling=lambda_scaling,
    )


# ---------------------------------------------------------------------------
# Brownian paths
# ---------------------------------------------------------------------------


def _stream_generator(seed, stream):
    key = np.array([seed, stream], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def auxiliary_generator(seed, tag):
    """Generator for non-realization draws, outside the realization keys."""
    return _stream_generator(seed, _AUX_STREAM_BASE + tag)


class BrownianPath:
    """All modal Brownian increments of one realization on the fine grid.

    ``draws[s, m]`` is the increment of the unit Brownian motion
    ``beta_m`` over fine step ``s`` of size ``k0`` (already scaled by
    ``sqrt(k0)``).  Increments over coarser intervals are sums of the same
    draws, accumulated left to right so that coupling across step sizes is
    reproducible bit for bit.
    """

    def __init__(self, seed, realization, n_fine, n_modes, k0):
        self.seed = int(seed)
        self.realization = int(realization)
        self.n_fine = int(n_fine)
        self.n_modes = int(n_modes)
        self.k0 = float(k0)
        gen = _stream_generator(self.seed, self.realization)
        self.draws = np.sqrt(self.k0) * gen.standard_normal(
            (self.n_fine, self.n_modes)
        )

    def increment(self, a, b):
        """Unit-Brownian increments ``beta(t_b) - beta(t_a)`` per mode."""
        if not (0 <= a <= b <= self.n_fine):
            raise ValueError(
                f"fine-step range [{a}, {b}) outside path of {self.n_fine} steps"
            )
        out = np.zeros(self.n_modes)
        for s in range(a, b):
            out += self.draws[s]
        return out


def sample_increment(path: BrownianPath, basis: QWienerBasis, a, b):
    """Scaled modal increments ``sqrt(lambda_m) (beta_m(t_b) - beta_m(t_a))``.

    Each entry has variance ``lambda_m (t_b - t_a)``.
    """
    return basis.sqrt_lambdas * path.increment(a, b)


# ---------------------------------------------------------------------------
# stochastic load and the isometry diagnostic
# ---------------------------------------------------------------------------


def assemble_stochastic_load(
    qe: QuadratureEvaluation,
    basis: QWienerBasis,
    noise_model: NoiseModel,
    u_coeffs,
    scaled_increment,
):
    """Load vector ``(B(u) dW, v)`` for one step's noise increment.

    The increment field ``dW = sum_m scaled_increment[m] q_m`` and the
    current velocity are evaluated at the quadrature points, multiplied
    pointwise through the noise model, and integrated against the velocity
    basis.
    """
    dw_coeffs = basis.field_coefficients(scaled_increment)
    dw_q = qe.velocity_at_quadrature(dw_coeffs)
    if noise_model.is_additive:
        u_q = dw_q  # ignored by the additive kinds
    else:
        u_q = qe.velocity_at_quadrature(u_coeffs)
    vals = kernels.noise_product(noise_model.code, u_q, dw_q)
    return qe.velocity_load(vals)


def ito_isometry_check(
    system: AssembledSystem,
    basis: QWienerBasis,
    horizon,
    n_samples,
    seed,
    batch=512,
):
    """Monte Carlo check of ``E ||W(T)||^2 = T * sum_m lambda_m``.

    Samples ``W(T) = sum_m sqrt(lambda_m T) q_m Z_m`` with standard normal
    ``Z`` and compares the mean squared L2 norm against the analytic value.
    Because the ``Z_m`` are independent, the identity holds exactly for the
    discrete modes regardless of their mutual angles.

    Returns a dict with the sample mean, analytic value, standard error and
    z-score.
    """
    gen = auxiliary_generator(seed, 1)
    amp = basis.sqrt_lambdas * np.sqrt(horizon)
    samples = np.empty(n_samples)
    done = 0
    while done < n_samples:
        size = min(batch, n_samples - done)
        z = gen.standard_normal((basis.n_modes, size))
        fields = basis.coeffs @ (amp[:, None] * z)
        samples[done : done + size] = np.einsum(
            "is,is->s", fields, system.M @ fields
        )
        done += size
    mean = float(samples.mean())
    stderr = float(samples.std(ddof=1) / np.sqrt(n_samples))
    analytic = float(horizon) * basis.trace
    z_score = 0.0 if stderr == 0.0 else (mean - analytic) / stderr
    return {
        "sample_mean": mean,
        "analytic": analytic,
        "stderr": stderr,
        "z_score": float(z_score),
        "n_samples": int(n_samples),
    }
