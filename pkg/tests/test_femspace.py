"""Taylor-Hood space: dof counting, basis properties, interpolation."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stochstokes.femspace import (
    TaylorHoodSpace,
    default_quadrature,
    eval_basis,
)
from stochstokes.mesh import BOUNDARY_MARKERS, build_structured_mesh

UNIT = (0.0, 1.0, 0.0, 1.0)


def test_dof_counts_n1():
    space = TaylorHoodSpace(build_structured_mesh(UNIT, 1))
    assert space.n_velocity == 18  # 2 * (4 vertices + 5 edges)
    assert space.n_pressure == 4


def test_dof_counts_n2():
    space = TaylorHoodSpace(build_structured_mesh(UNIT, 2))
    assert space.n_velocity == 50  # 2 * (9 vertices + 16 edges)
    assert space.n_pressure == 9


def test_homogeneous_dirichlet_covers_boundary_dofs(unit_space_n2):
    space = unit_space_n2
    bc = {marker: (0.0, 0.0) for marker in BOUNDARY_MARKERS}
    dofs, values = space.dirichlet_velocity(bc)
    assert np.all(values == 0.0)

    scalar_points = space.dof_points
    on_boundary = (
        np.isclose(scalar_points[:, 0], 0.0)
        | np.isclose(scalar_points[:, 0], 1.0)
        | np.isclose(scalar_points[:, 1], 0.0)
        | np.isclose(scalar_points[:, 1], 1.0)
    )
    expected = {
        space.velocity_dof(s, comp)
        for s in np.flatnonzero(on_boundary)
        for comp in (0, 1)
    }
    assert set(int(d) for d in dofs) == expected


@settings(max_examples=30, deadline=None)
@given(
    a=st.floats(min_value=0.0, max_value=1.0),
    b=st.floats(min_value=0.0, max_value=1.0),
)
def test_partition_of_unity(a, b):
    lam1 = a * (1.0 - b)
    lam2 = b * (1.0 - a)
    bary = np.array([1.0 - lam1 - lam2, lam1, lam2])
    assert math.isclose(float(eval_basis("p2", bary).sum()), 1.0, abs_tol=1e-12)
    assert math.isclose(float(eval_basis("p1", bary).sum()), 1.0, abs_tol=1e-12)


def test_lagrange_property_vertices_and_midpoints():
    vertex = np.array([1.0, 0.0, 0.0])
    vals = eval_basis("p2", vertex)[0]
    assert vals[0] == pytest.approx(1.0, abs=1e-14)
    assert np.allclose(vals[1:], 0.0, atol=1e-14)

    midpoint = np.array([0.5, 0.5, 0.0])  # midpoint of the edge between 0, 1
    vals = eval_basis("p2", midpoint)[0]
    nonzero = np.flatnonzero(np.abs(vals) > 1e-13)
    assert len(nonzero) == 1
    assert vals[nonzero[0]] == pytest.approx(1.0, abs=1e-14)


def test_quadrature_degree4_monomials():
    rule = default_quadrature()
    assert math.isclose(float(rule.weights.sum()), 0.5, abs_tol=1e-14)
    # reference coordinates: x = lam1, y = lam2
    x = rule.points[:, 1]
    y = rule.points[:, 2]
    for a in range(5):
        for b in range(5 - a):
            exact = (
                math.factorial(a) * math.factorial(b) / math.factorial(a + b + 2)
            )
            approx = float((rule.weights * x**a * y**b).sum())
            assert abs(approx - exact) <= 1e-14, (a, b)


def test_interpolate_constant_field(unit_space_n2):
    coeffs = unit_space_n2.interpolate_velocity((1.0, 0.0))
    x_dofs, y_dofs = unit_space_n2.velocity_components(coeffs)
    assert np.allclose(x_dofs, 1.0, atol=1e-14)
    assert np.allclose(y_dofs, 0.0, atol=1e-14)


def _field_error(space, func):
    from stochstokes.assembly import QuadratureEvaluation

    qe = QuadratureEvaluation(space)
    coeffs = space.interpolate_velocity(func)
    diff = qe.velocity_at_quadrature(coeffs) - np.asarray(func(qe.points))
    return math.sqrt(max(float(qe.integrate((diff**2).sum(axis=1))), 0.0))


def test_linear_field_reproduced(unit_space_n2):
    def linear(points):
        return np.stack(
            [2.0 * points[:, 0] - points[:, 1], 0.5 * points[:, 1] + 1.0], axis=1
        )

    assert _field_error(unit_space_n2, linear) <= 1e-12


def test_quadratic_field_reproduced(unit_space_n2):
    def quadratic(points):
        x, y = points[:, 0], points[:, 1]
        return np.stack([x * x + 2 * x * y, y * y - x], axis=1)

    assert _field_error(unit_space_n2, quadratic) <= 1e-12


def test_pressure_linear_interpolation_exact(unit_space_n2):
    space = unit_space_n2
    from stochstokes.assembly import QuadratureEvaluation

    qe = QuadratureEvaluation(space)
    coeffs = space.interpolate_pressure(lambda p: 3.0 * p[:, 0] - p[:, 1] + 0.5)
    vals = qe.pressure_at_quadrature(coeffs)
    exact = 3.0 * qe.points[:, 0] - qe.points[:, 1] + 0.5
    assert np.max(np.abs(vals - exact)) <= 1e-12


def test_cross_mesh_interpolation_same_space_identity(unit_space_n2):
    space = unit_space_n2
    rng = np.random.default_rng(3)
    coeffs = rng.standard_normal(space.n_velocity)
    back = space.interpolate_velocity_from(space, coeffs)
    assert np.allclose(back, coeffs, atol=1e-12)


def test_cross_mesh_interpolation_refinement_exact_for_p2(unit_space_n2):
    coarse = unit_space_n2
    fine = TaylorHoodSpace(build_structured_mesh(UNIT, 4))

    def quadratic(points):
        x, y = points[:, 0], points[:, 1]
        return np.stack([x * y, x * x - y], axis=1)

    coarse_coeffs = coarse.interpolate_velocity(quadratic)
    lifted = fine.interpolate_velocity_from(coarse, coarse_coeffs)
    direct = fine.interpolate_velocity(quadratic)
    assert np.allclose(lifted, direct, atol=1e-11)


def test_lid_boundary_values_last_write_wins():
    space = TaylorHoodSpace(build_structured_mesh(UNIT, 2))
    bc = {marker: (0.0, 0.0) for marker in BOUNDARY_MARKERS}

    def lid(points):
        values = np.zeros_like(points)
        inside = (points[:, 0] > 1e-12) & (points[:, 0] < 1.0 - 1e-12)
        values[inside, 0] = 1.0
        return values

    bc["top"] = lid
    dofs, values = space.dirichlet_velocity(bc)
    scalar_points = space.dof_points
    for dof, value in zip(dofs, values):
        scalar = int(dof) % space.n_scalar
        comp = int(dof) // space.n_scalar
        x, y = scalar_points[scalar]
        if comp == 0 and np.isclose(y, 1.0) and 1e-12 < x < 1.0 - 1e-12:
            assert value == 1.0
        else:
            assert value == 0.0
