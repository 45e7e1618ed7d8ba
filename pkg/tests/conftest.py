import numpy as np
import pytest

import cranelab as cl


def desk_gains():
    return cl.ControlGains(alpha=1.0, beta=2.0, tau=0.5, K=2.0)


@pytest.fixture(scope="session")
def model():
    """Default desk model: unit masses, ramped cable a(x) = 1 + x."""
    return cl.CraneModel.build(cl.PhysicalParams(m=1.0, M=1.0),
                               desk_gains(),
                               cl.affine_coefficient(1.0, 1.0))


@pytest.fixture(scope="session")
def desk_grid():
    return cl.Grid(N=200, Nd=100)


@pytest.fixture(scope="session")
def desk_op(model, desk_grid):
    return cl.assemble(model, desk_grid)


@pytest.fixture(scope="session")
def small_grid():
    return cl.Grid(N=40, Nd=20)


@pytest.fixture(scope="session")
def small_op(model, small_grid):
    return cl.assemble(model, small_grid)


@pytest.fixture()
def rng():
    return np.random.default_rng(20260815)
