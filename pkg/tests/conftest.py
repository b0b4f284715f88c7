import numpy as np
import pytest

from perihom.averaging import cell_sweep_curve, prepare_sweep, resistance_curve
from perihom.cell_solver import CellProblem, linear_tensor, solve
from perihom.conductivity import ConductivityProfile, ContrastFamily, reference_family
from perihom.geometry import CellGeometry, reference_geometry


@pytest.fixture(scope="session")
def geometry():
    return reference_geometry()


@pytest.fixture(scope="session")
def family():
    return reference_family()


@pytest.fixture(scope="session")
def contrasts(geometry, family):
    return family.contrasts([inc.contrast_id for inc in geometry.inclusions])


@pytest.fixture(scope="session")
def linear(geometry, contrasts):
    """Linear tensor and the two unit-flux solutions of the reference cell."""
    return linear_tensor(geometry, contrasts)


@pytest.fixture(scope="session")
def solution(linear):
    return linear[1][0]


@pytest.fixture(scope="session")
def empty_solution():
    return solve(CellProblem(CellGeometry(), ()))


@pytest.fixture(scope="session")
def constant_family():
    return ContrastFamily(ConductivityProfile.constant(4.5), (ConductivityProfile.constant(50.0),))


@pytest.fixture(scope="session")
def setup(geometry, family):
    return prepare_sweep(geometry, family)


@pytest.fixture(scope="session")
def shift_curve(setup):
    return resistance_curve(setup)


@pytest.fixture(scope="session")
def cell_curve(setup):
    return cell_sweep_curve(setup)


def rng(seed=0):
    return np.random.default_rng(seed)
