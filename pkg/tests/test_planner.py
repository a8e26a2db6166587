import numpy as np
import pytest

import orbit_promp as op
from orbit_promp.errors import (
    CostPropagationError,
    NonEmptyOutputError,
    ParameterError,
    PlanningFailureError,
)
from orbit_promp.frames import rotation_to_quaternion
from orbit_promp.planner import eef_file_name

# precomputed disturbance cost of a single 0.1 rad/s step on joint 1
# from the rest configuration (c=1, dt=0.01)
PINNED_STEP_COST = 0.0005512306735007144


def _two_point(home, rate_vec):
    times = np.array([0.0, 0.01])
    q = np.vstack([home, home])
    q_dot = np.vstack([rate_vec, np.zeros(7)])
    return op.JointTrajectory(times=times, q=q, q_dot=q_dot)


@pytest.fixture(scope="module")
def plan_result(model, fitted_promp, reach_goal):
    return op.plan(model, fitted_promp, reach_goal, n_samples=4, seed=3)


def test_cost_config_validation():
    with pytest.raises(ParameterError):
        op.CostConfig(c=-1.0)
    with pytest.raises(ParameterError):
        op.CostConfig(dt=0.0)


def test_zero_rates_give_zero_cost(model, home):
    traj = _two_point(home, np.zeros(7))
    total, log = op.trajectory_cost(model, traj, op.CostConfig())
    assert total == 0.0
    assert np.all(log.phi_s_dot == 0.0)
    assert np.all(log.v_s == 0.0)


def test_pinned_single_step_cost(model, home):
    rate = np.zeros(7)
    rate[0] = 0.1
    traj = _two_point(home, rate)
    total, _ = op.trajectory_cost(model, traj, op.CostConfig(c=1.0, dt=0.01))
    assert abs(total - PINNED_STEP_COST) <= 1e-10 * PINNED_STEP_COST


def test_attitude_weight_splits_cost(model, home):
    rng = np.random.default_rng(3)
    rate = rng.uniform(-0.5, 0.5, 7)
    traj = _two_point(home, rate)
    total_c0, log = op.trajectory_cost(model, traj, op.CostConfig(c=0.0))
    linear_part = float(np.sum(log.v_s**2))
    assert abs(total_c0 - linear_part) <= 1e-12 * max(linear_part, 1e-30)
    total_c2, log2 = op.trajectory_cost(model, traj, op.CostConfig(c=2.0))
    angular_part = float(np.sum(log2.phi_s_dot**2))
    expected = 4.0 * angular_part + linear_part
    assert abs(total_c2 - expected) <= 1e-12 * expected


def test_cost_scales_quadratically_with_rates(model, home):
    rng = np.random.default_rng(5)
    rate = rng.uniform(-0.5, 0.5, 7)
    cfg = op.CostConfig()
    total1, _ = op.trajectory_cost(model, _two_point(home, rate), cfg)
    total2, _ = op.trajectory_cost(model, _two_point(home, 2.0 * rate), cfg)
    assert abs(total2 - 4.0 * total1) <= 1e-9 * total2


def test_cost_requires_matching_dt(model, home):
    traj = _two_point(home, np.zeros(7))
    with pytest.raises(ParameterError):
        op.trajectory_cost(model, traj, op.CostConfig(dt=0.02))


def test_cost_propagation_failure_reports_step(model, home):
    rate = np.zeros(7)
    rate[0] = 1e5
    times = np.linspace(0.0, 0.02, 3)
    q = home + rate[None, :] * times[:, None]
    q_dot = np.tile(rate, (3, 1))
    traj = op.JointTrajectory(times=times, q=q, q_dot=q_dot)
    with pytest.raises(CostPropagationError) as excinfo:
        op.trajectory_cost(model, traj, op.CostConfig())
    assert excinfo.value.step >= 1


def test_plan_single_sample(model, fitted_promp, reach_goal):
    result = op.plan(model, fitted_promp, reach_goal, n_samples=1, seed=0)
    assert result.selected_index == 0
    assert result.costs.shape == (1,)
    assert np.isfinite(result.costs[0])


def test_plan_costs_match_direct_recompute(model, fitted_promp, plan_result):
    cfg = op.CostConfig(c=1.0, dt=fitted_promp.dt)
    for i, sample in enumerate(plan_result.samples):
        total, _ = op.trajectory_cost(model, sample, cfg)
        assert total == plan_result.costs[i]
    assert plan_result.selected_index == int(np.argmin(plan_result.costs))


def test_plan_reaches_goal(plan_result, reach_goal):
    best = plan_result.samples[plan_result.selected_index]
    assert np.abs(best.q[-1] - reach_goal).max() <= 1e-2
    assert np.abs(best.q_dot[-1]).max() <= 1e-2


def test_plan_deterministic(model, fitted_promp, reach_goal, plan_result):
    again = op.plan(model, fitted_promp, reach_goal, n_samples=4, seed=3)
    parallel = op.plan(model, fitted_promp, reach_goal, n_samples=4, seed=3, jobs=2)
    for other in (again, parallel):
        np.testing.assert_array_equal(other.costs, plan_result.costs)
        assert other.selected_index == plan_result.selected_index
        for a, b in zip(other.samples, plan_result.samples):
            np.testing.assert_array_equal(a.q, b.q)


def test_plan_accepts_goal_pose(model, fitted_promp, reach_goal):
    state = op.rest_state(model, reach_goal)
    fk = op.forward_kinematics(model, state)
    target = (fk.eef_position, rotation_to_quaternion(fk.eef_rotation))
    result = op.plan(model, fitted_promp, target, n_samples=2, seed=1)
    q_T = result.samples[result.selected_index].q[-1]
    reached = op.forward_kinematics(model, op.rest_state(model, q_T)).eef_position
    assert np.linalg.norm(reached - fk.eef_position) <= 1e-2


def test_plan_minimizes_motion_on_small_task(model, home):
    goal = home + 0.05
    dataset = op.generate_dataset(
        model, home, [goal], per_goal=4, strategy_mix=("cost", "noise"), seed=5
    )
    promp = op.fit_promp(dataset)
    result = op.plan(model, promp, goal, n_samples=20, seed=2)
    assert np.all(np.isfinite(result.costs))
    deviations = np.array(
        [np.abs(s.q - home).max() for s in result.samples]
    )
    assert deviations[result.selected_index] <= np.median(deviations)


def test_plan_rejects_bad_arguments(model, fitted_promp, reach_goal):
    with pytest.raises(ParameterError):
        op.plan(model, fitted_promp, reach_goal, n_samples=0)
    with pytest.raises(ParameterError):
        op.plan(model, fitted_promp, np.zeros(3))
    with pytest.raises(ParameterError):
        op.plan(
            model,
            fitted_promp,
            reach_goal,
            n_samples=1,
            cfg=op.CostConfig(dt=0.02),
        )


def test_plan_fails_when_all_samples_diverge(model, fitted_promp):
    basis = fitted_promp.basis
    weights = np.zeros((7, basis.n_bf))
    weights[0] = 5e5 * np.asarray(basis.centers)
    runaway = op.ProMPModel(
        basis=basis,
        n_dof=7,
        mu_w=weights.reshape(-1),
        Sigma_w=np.zeros((70, 70)),
        dt=fitted_promp.dt,
    )
    with pytest.raises(PlanningFailureError):
        op.plan(model, runaway, np.zeros(7), n_samples=2, seed=0)


def test_plan_result_validates_selection(plan_result):
    with pytest.raises(ParameterError):
        op.PlanResult(
            samples=plan_result.samples,
            costs=np.array([1.0, 2.0, 3.0, 4.0]),
            selected_index=1,
            spacecraft_log=plan_result.spacecraft_log,
            eef_paths=plan_result.eef_paths,
            times=plan_result.times,
        )


def test_export_plan(tmp_path, plan_result):
    out = tmp_path / "plan"
    paths = op.export_plan(plan_result, out)
    names = sorted(p.name for p in paths)
    expected = sorted(
        [eef_file_name(i) for i in range(4)] + ["costs.csv", "spacecraft.csv"]
    )
    assert names == expected
    with pytest.raises(NonEmptyOutputError):
        op.export_plan(plan_result, out)
    op.export_plan(plan_result, out, overwrite=True)

    costs = np.loadtxt(out / "costs.csv", delimiter=",", skiprows=1)
    np.testing.assert_array_equal(costs[:, 0], np.arange(4.0))
    assert int(np.argmin(costs[:, 1])) == plan_result.selected_index

    assert (out / "costs.csv").read_text().splitlines()[0] == "sample_index,cost"
    assert (
        out / "spacecraft.csv"
    ).read_text().splitlines()[0] == "t,yaw,pitch,roll,x,y,z,wx,wy,wz,vx,vy,vz"
    first_eef = out / eef_file_name(0)
    assert first_eef.read_text().splitlines()[0] == "t,x,y,z,qw,qx,qy,qz"

    for i in range(4):
        rows = np.loadtxt(out / eef_file_name(i), delimiter=",", skiprows=1)
        quats = rows[:, 4:]
        assert np.all(quats[:, 0] >= 0.0)
        np.testing.assert_allclose(
            np.linalg.norm(quats, axis=1), 1.0, rtol=0.0, atol=1e-6
        )
