import numpy as np
import pytest
import yaml
from importlib import resources

import orbit_promp as op
from orbit_promp.errors import IntegrationFailureError, ParameterError

import oracle_utils as ou

# precomputed reference block M[0:4, 0:4] at the rest configuration
HOME_MASS_BLOCK = np.array(
    [
        [2201.6733781901094, -90.26583685818537, 66.20254402040587, 163.90526548403972],
        [-90.26583685818537, 1912.1636617991348, 17.920786395675123, -90.26583685889904],
        [66.20254402040587, 17.920786395675123, 1878.3902836097163, 143.14029950774415],
        [163.90526548403972, -90.26583685889904, 143.14029950774415, 188.35937500000466],
    ]
)
# precomputed accelerations at rest, tau = e1 (1 N.m on joint 1)
HOME_PHI_DDOT_TAU_E1 = np.array(
    [
        -4.8452881687725531e-04,
        2.0276570352062038e-05,
        1.3664366898740664e-04,
        3.1691395562456558e-02,
        3.7024400714342374e-03,
        2.2475075156871416e-02,
        -1.0997176872706480e-03,
        -2.0114844787380995e-03,
        -2.3136234376764177e-02,
        -4.8224343291096428e-03,
    ]
)


def _phi(home):
    return np.concatenate([np.zeros(3), home])


def test_mass_matrix_reference_block(model, home):
    M = op.mass_matrix(model, _phi(home))
    np.testing.assert_allclose(M[:4, :4], HOME_MASS_BLOCK, rtol=1e-9)


def test_mass_matrix_symmetric_positive_definite(model):
    rng = np.random.default_rng(7)
    for _ in range(1000):
        phi = np.concatenate([rng.uniform(-0.5, 0.5, 3), rng.uniform(-np.pi, np.pi, 7)])
        M = op.mass_matrix(model, phi)
        assert np.abs(M - M.T).max() <= 1e-10
        assert np.linalg.eigvalsh(M).min() > 0.0


def test_kinetic_energy_matches_per_link_sum(model, home):
    rng = np.random.default_rng(13)
    phi = _phi(home)
    M = op.mass_matrix(model, phi)
    for _ in range(100):
        phi_dot = rng.normal(0.0, 0.5, 10)
        T_matrix = 0.5 * float(phi_dot @ M @ phi_dot)
        T_links = ou.kinetic_energy_fd(model, phi, phi_dot)
        assert abs(T_matrix - T_links) / max(abs(T_links), 1e-12) <= 1e-8


def test_massless_arm_zeroes_joint_block(home):
    text = (
        resources.files("orbit_promp") / "configs" / "reference_model.yaml"
    ).read_text(encoding="utf-8")
    doc = yaml.safe_load(text)
    for link in doc["links"]:
        link["mass"] = 0.0
        link["inertia"] = [0.0, 0.0, 0.0]
    m0 = op.load_model(doc)
    M = op.mass_matrix(m0, _phi(home))
    assert np.all(M[3:, 3:] == 0.0)


def test_coriolis_zero_at_rest(model, home):
    C = op.coriolis_vector(model, _phi(home), np.zeros(10))
    assert np.all(C == 0.0)


def test_coriolis_quadratic_in_rates(model, home):
    rng = np.random.default_rng(19)
    phi = _phi(home)
    phi_dot = rng.normal(0.0, 0.4, 10)
    C1 = op.coriolis_vector(model, phi, phi_dot)
    C3 = op.coriolis_vector(model, phi, 3.0 * phi_dot)
    np.testing.assert_allclose(C3, 9.0 * C1, rtol=1e-9, atol=1e-12)


def test_coriolis_power_balance(model):
    rng = np.random.default_rng(23)
    h = 1e-6
    for _ in range(5):
        phi = np.concatenate([rng.uniform(-0.3, 0.3, 3), rng.uniform(-np.pi, np.pi, 7)])
        phi_dot = rng.normal(0.0, 0.5, 10)
        C = op.coriolis_vector(model, phi, phi_dot)
        M_plus = op.mass_matrix(model, phi + 0.5 * h * phi_dot)
        M_minus = op.mass_matrix(model, phi - 0.5 * h * phi_dot)
        M_dot = (M_plus - M_minus) / h
        lhs = float(phi_dot @ C)
        rhs = 0.5 * float(phi_dot @ M_dot @ phi_dot)
        assert abs(lhs - rhs) / max(abs(rhs), 1e-12) <= 1e-6


def test_dynamics_terms_energy_identity(model, home):
    rng = np.random.default_rng(27)
    phi = _phi(home)
    phi_dot = rng.normal(0.0, 0.5, 10)
    terms = op.dynamics_terms(model, phi, phi_dot)
    T_direct = 0.5 * float(phi_dot @ terms.M @ phi_dot)
    assert abs(terms.T - T_direct) / max(abs(T_direct), 1e-12) <= 1e-9


def test_forward_dynamics_equilibrium(model, home):
    out = op.forward_dynamics(model, _phi(home), np.zeros(10), np.zeros(7))
    assert np.all(out == 0.0)


def test_forward_dynamics_reference_accelerations(model, home):
    tau = np.zeros(7)
    tau[0] = 1.0
    out = op.forward_dynamics(model, _phi(home), np.zeros(10), tau)
    np.testing.assert_allclose(out, HOME_PHI_DDOT_TAU_E1, rtol=1e-7)


def test_forward_dynamics_residual(model):
    rng = np.random.default_rng(31)
    for _ in range(5):
        phi = np.concatenate([rng.uniform(-0.3, 0.3, 3), rng.uniform(-np.pi, np.pi, 7)])
        phi_dot = rng.normal(0.0, 0.4, 10)
        tau = rng.uniform(-5.0, 5.0, 7)
        acc = op.forward_dynamics(model, phi, phi_dot, tau)
        M = op.mass_matrix(model, phi)
        C = op.coriolis_vector(model, phi, phi_dot)
        residual = M @ acc + C - np.concatenate([np.zeros(3), tau])
        assert np.abs(residual).max() <= 1e-9


def test_simulate_equilibrium_is_constant(model, home):
    state = op.rest_state(model, home)
    result = op.simulate(model, state, lambda t: np.zeros(7), dt=1e-3, duration=0.05)
    assert np.all(result.phi == result.phi[0])
    assert np.all(result.phi_dot == 0.0)
    assert np.all(result.v_s == 0.0)


def test_simulate_conserves_momentum(model, home):
    state = op.rest_state(model, home)
    torque = ou.smooth_bounded_torque(101)
    result = op.simulate(model, state, torque, dt=1e-3, duration=0.5)
    for i in range(0, len(result), 25):
        P, L = ou.per_link_momenta(model, result.state(i))
        assert np.linalg.norm(P) <= 1e-6
        assert np.linalg.norm(L) <= 1e-6


def test_simulate_rk4_order(model, home):
    state = op.rest_state(model, home)
    torque = ou.smooth_bounded_torque(55)
    final = {}
    for dt in (4e-3, 2e-3, 5e-4):
        final[dt] = op.simulate(model, state, torque, dt=dt, duration=0.2).phi[-1]
    err_coarse = np.abs(final[4e-3] - final[5e-4]).max()
    err_fine = np.abs(final[2e-3] - final[5e-4]).max()
    ratio = err_coarse / err_fine
    assert 8.0 <= ratio <= 40.0


def test_simulate_power_balance(model, home):
    state = op.rest_state(model, home)
    torque = ou.smooth_bounded_torque(77)
    dt = 1e-3
    result = op.simulate(model, state, torque, dt=dt, duration=0.5)
    T = np.array(
        [op.kinetic_energy(model, result.phi[i], result.phi_dot[i]) for i in range(len(result))]
    )
    # fourth-order interior stencil for dT/dt
    dT = (-T[4:] + 8.0 * T[3:-1] - 8.0 * T[1:-3] + T[:-4]) / (12.0 * dt)
    power = np.array(
        [result.phi_dot[i, 3:] @ torque(result.times[i]) for i in range(2, len(result) - 2)]
    )
    peak = np.abs(power).max()
    mask = np.abs(power) >= 0.01 * peak
    rel = np.abs(dT[mask] - power[mask]) / np.abs(power[mask])
    assert rel.max() <= 1e-4


def test_zero_torque_conserves_energy(model, home):
    rng = np.random.default_rng(83)
    state = op.SystemState(
        phi_m=home,
        phi_s_dot=rng.normal(0.0, 0.02, 3),
        phi_m_dot=rng.normal(0.0, 0.05, 7),
    )
    result = op.simulate(model, state, lambda t: np.zeros(7), dt=1e-3, duration=5.0)
    T0 = op.kinetic_energy(model, result.phi[0], result.phi_dot[0])
    for i in (len(result) // 2, len(result) - 1):
        Ti = op.kinetic_energy(model, result.phi[i], result.phi_dot[i])
        assert abs(Ti - T0) / max(abs(T0), 1e-12) <= 1e-5


def test_simulate_reports_divergence_step(model, home):
    state = op.rest_state(model, home)
    with pytest.raises(IntegrationFailureError) as excinfo:
        op.simulate(model, state, lambda t: np.full(7, 1e9), dt=1e-3, duration=1.0)
    assert excinfo.value.step >= 0
    assert "step" in str(excinfo.value)


def test_simulate_rejects_bad_inputs(model, home):
    state = op.rest_state(model, home)
    with pytest.raises(ParameterError):
        op.simulate(model, state, lambda t: np.zeros(7), dt=0.0, duration=1.0)
    with pytest.raises(ParameterError):
        op.simulate(model, state, lambda t: np.full(7, np.nan), dt=1e-3, duration=0.01)
