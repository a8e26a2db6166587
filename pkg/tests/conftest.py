import numpy as np
import pytest

import orbit_promp as op


@pytest.fixture(scope="session")
def model():
    return op.reference_model()


@pytest.fixture(scope="session")
def home():
    return np.array(op.REFERENCE_HOME)


@pytest.fixture(scope="session")
def reach_goal(home):
    return home + np.array([0.4, -0.3, 0.35, 0.5, -0.45, 0.3, -0.25])


@pytest.fixture(scope="session", autouse=True)
def _warm_kernels(model, home):
    # jit-compile (or load from disk cache) every kernel once so tests with
    # runtime budgets measure the work, not compilation
    state = op.rest_state(model, home)
    op.forward_kinematics(model, state)
    op.link_motion(model, state)
    op.generalized_jacobian(model, state)
    op.mass_matrix(model, state.phi)
    op.coriolis_vector(model, state.phi, state.phi_dot)
    op.forward_dynamics(model, state.phi, state.phi_dot, np.zeros(7))
    op.simulate(model, state, lambda t: np.zeros(7), dt=1e-3, duration=2e-3)


@pytest.fixture(scope="session")
def small_dataset(model, home, reach_goal):
    return op.generate_dataset(model, home, [reach_goal], per_goal=6, seed=7)


@pytest.fixture(scope="session")
def fitted_promp(small_dataset):
    return op.fit_promp(small_dataset)
