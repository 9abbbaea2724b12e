"""Shared fixtures: small meshes and assembled systems, built once."""

import numpy as np
import pytest

from stochstokes.assembly import QuadratureEvaluation, assemble_system
from stochstokes.femspace import TaylorHoodSpace
from stochstokes.mesh import build_structured_mesh

UNIT = (0.0, 1.0, 0.0, 1.0)
SQUARE2 = (-1.0, 1.0, -1.0, 1.0)


@pytest.fixture(scope="session")
def unit_mesh_n2():
    return build_structured_mesh(UNIT, 2)


@pytest.fixture(scope="session")
def unit_space_n2(unit_mesh_n2):
    return TaylorHoodSpace(unit_mesh_n2)


@pytest.fixture(scope="session")
def unit_space_n4():
    return TaylorHoodSpace(build_structured_mesh(UNIT, 4))


@pytest.fixture(scope="session")
def unit_system_n4(unit_space_n4):
    return assemble_system(unit_space_n4, 1.0)


@pytest.fixture(scope="session")
def unit_quadrature_n4(unit_space_n4):
    return QuadratureEvaluation(unit_space_n4)


@pytest.fixture(scope="session")
def square_space_n8():
    return TaylorHoodSpace(build_structured_mesh(SQUARE2, 8))


@pytest.fixture(scope="session")
def square_system_n8(square_space_n8):
    return assemble_system(square_space_n8, 1.0)


def l2_velocity_error(space, coeffs, exact):
    """L2 distance between a discrete velocity and a callable exact field,
    both evaluated on the quadrature points."""
    qe = QuadratureEvaluation(space)
    diff = qe.velocity_at_quadrature(coeffs) - np.asarray(exact(qe.points))
    return float(np.sqrt(max(qe.integrate(diff[:, 0] ** 2 + diff[:, 1] ** 2), 0.0)))
