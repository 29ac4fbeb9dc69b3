import warnings

import numpy as np
import pytest

from histlab.model import LEFT_HALF, SimParams, initial_packet_sample
from histlab.propagator import EvolutionPlan, evolve

# time samples shared by the default-resolution runs: 201 points on [0, 2] T_cl
CURVE_TIMES = np.linspace(0.0, 2.0, 201)


@pytest.fixture(scope="session")
def default_params():
    return SimParams()


@pytest.fixture(scope="session")
def coarse_params():
    """Cheap resolution for unit tests that only need qualitative dynamics."""
    return SimParams(n_grid=2049, dt_frac=1.0 / 4000.0)


@pytest.fixture(scope="session")
def default_initial(default_params):
    return initial_packet_sample(default_params)


@pytest.fixture(scope="session")
def full_run(default_params, default_initial):
    """Free evolution over two periods at the default resolution."""
    return evolve(default_initial, EvolutionPlan.full(2.0), default_params, CURVE_TIMES)


@pytest.fixture(scope="session")
def restricted_run(default_params):
    """Left-half evolution of the packet renormalised on [-L, 0]."""
    left = initial_packet_sample(default_params, interval=(LEFT_HALF.lo, LEFT_HALF.hi))
    return evolve(left, EvolutionPlan.restricted(LEFT_HALF, 2.0), default_params, CURVE_TIMES)


@pytest.fixture(scope="session")
def projected_run(default_params, default_initial):
    """Left-half evolution of the projected (not renormalised) packet, g_r psi0."""
    return evolve(default_initial, EvolutionPlan.restricted(LEFT_HALF, 2.0), default_params, CURVE_TIMES)


@pytest.fixture(autouse=True)
def _quiet_semiclassical():
    with warnings.catch_warnings():
        warnings.filterwarnings("ignore", message=".*packet is comparable to the well.*")
        yield
