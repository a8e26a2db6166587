import numpy as np
import pytest

import orbit_promp as op
from orbit_promp.demos import demo_file_name
from orbit_promp.errors import ManifestError, NonEmptyOutputError, ParameterError

import oracle_utils as ou

# precomputed backward-recursion gains for a one-joint instance
# (dt=0.1, horizon=2, Q=diag(10,1), R=[[0.1]], P_T=diag(100,10))
PINNED_K0 = np.array([7.31188885183587, 4.673495056855927])
PINNED_K1 = np.array([2.4691358024798817, 5.185185185185026])


def _scalar_setup(**overrides):
    A, B = op.discretize_double_integrator(1, 0.1)
    kwargs = dict(
        A=A,
        B=B,
        Q=np.diag([10.0, 1.0]),
        R=np.array([[0.1]]),
        P_T=np.diag([100.0, 10.0]),
        horizon=2,
        dt=0.1,
    )
    kwargs.update(overrides)
    return op.LQRSetup(**kwargs)


def test_discretize_closed_form():
    A, B = op.discretize_double_integrator(3, 0.05)
    eye = np.eye(3)
    assert np.array_equal(A[:3, :3], eye)
    assert np.array_equal(A[:3, 3:], 0.05 * eye)
    assert np.array_equal(A[3:, :3], np.zeros((3, 3)))
    assert np.array_equal(A[3:, 3:], eye)
    assert np.array_equal(B[:3], 0.5 * 0.05**2 * eye)
    assert np.array_equal(B[3:], 0.05 * eye)


def test_lqr_setup_validation():
    A, B = op.discretize_double_integrator(1, 0.1)
    bad_A = A.copy()
    bad_A[0, 1] += 0.01
    with pytest.raises(ParameterError):
        _scalar_setup(A=bad_A)
    with pytest.raises(ParameterError):
        _scalar_setup(B=B * 1.001)
    with pytest.raises(ParameterError):
        _scalar_setup(Q=np.array([[10.0, 1.0], [0.0, 1.0]]))
    with pytest.raises(ParameterError):
        _scalar_setup(R=np.array([[0.0]]))
    with pytest.raises(ParameterError):
        _scalar_setup(P_T=np.diag([-1.0, 10.0]))
    with pytest.raises(ParameterError):
        _scalar_setup(horizon=0)
    with pytest.raises(ParameterError):
        _scalar_setup(dt=-0.1)


def test_riccati_reference_gains():
    K = op.riccati_backward(_scalar_setup())
    assert K.shape == (2, 1, 2)
    np.testing.assert_allclose(K[0, 0], PINNED_K0, rtol=0.0, atol=1e-6)
    np.testing.assert_allclose(K[1, 0], PINNED_K1, rtol=0.0, atol=1e-6)


def test_riccati_zero_cost_gives_zero_gains():
    setup = _scalar_setup(Q=np.zeros((2, 2)), P_T=np.zeros((2, 2)), horizon=5)
    K = op.riccati_backward(setup)
    assert np.all(K == 0.0)


def test_effort_penalty_softens_controls():
    start = np.array([0.0, 0.0])
    goal = np.array([1.0, 0.0])
    peaks = []
    for r in (0.1, 10.0):
        setup = op.default_lqr_setup(n_dof=1, r=r)
        gains = op.riccati_backward(setup)
        controls = ou.lqr_rollout_controls(setup, gains, start, goal)
        peaks.append(np.abs(controls).max())
    assert peaks[1] < peaks[0]


def test_rollout_start_at_goal_is_constant():
    setup = op.default_lqr_setup(n_dof=2, duration=1.0)
    state = np.array([0.3, -0.4, 0.0, 0.0])
    demo = op.generate_demo(setup, state, state)
    assert np.all(demo.q == state[:2])
    assert np.all(demo.q_dot == 0.0)


def test_single_joint_reach_settles():
    setup = op.default_lqr_setup()
    start = np.zeros(14)
    goal = np.zeros(14)
    goal[0] = 1.0
    demo = op.generate_demo(setup, start, goal)
    assert abs(demo.q[-1, 0] - 1.0) <= 1e-2
    assert np.abs(demo.q[-1, 1:]).max() <= 1e-12
    assert np.abs(demo.q_dot[-1]).max() <= 1e-2


def test_rollout_mirror_symmetry():
    rng = np.random.default_rng(3)
    setup = op.default_lqr_setup(n_dof=3, duration=2.0)
    qa = rng.uniform(-1.0, 1.0, 3)
    qb = rng.uniform(-1.0, 1.0, 3)
    a = np.concatenate([qa, np.zeros(3)])
    b = np.concatenate([qb, np.zeros(3)])
    forward = op.generate_demo(setup, a, b)
    backward = op.generate_demo(setup, b, a)
    expected = np.tile(qa + qb, (len(forward), 1))
    np.testing.assert_allclose(forward.q + backward.q, expected, rtol=0.0, atol=1e-9)


def test_closed_loop_is_first_order_optimal():
    rng = np.random.default_rng(11)
    setup = op.default_lqr_setup(n_dof=2, dt=0.1, duration=1.0)
    start = np.array([0.0, 0.0, 0.0, 0.0])
    goal = np.array([0.8, -0.5, 0.0, 0.0])
    gains = op.riccati_backward(setup)
    controls = ou.lqr_rollout_controls(setup, gains, start, goal)
    base_cost = ou.lqr_rollout_cost(setup, start, goal, controls)
    for _ in range(20):
        t = int(rng.integers(0, setup.horizon))
        j = int(rng.integers(0, setup.n_dof))
        for sign in (1.0, -1.0):
            perturbed = controls.copy()
            perturbed[t, j] += sign * 1e-3
            cost = ou.lqr_rollout_cost(setup, start, goal, perturbed)
            assert cost >= base_cost - 1e-12 * abs(base_cost)


def test_zero_noise_matches_noiseless():
    setup = op.default_lqr_setup(n_dof=2, duration=1.0)
    start = np.zeros(4)
    goal = np.array([0.5, -0.2, 0.0, 0.0])
    plain = op.generate_demo(setup, start, goal)
    seeded = op.generate_demo(
        setup, start, goal, noise_std=0.0, rng=np.random.default_rng(0)
    )
    np.testing.assert_array_equal(plain.q, seeded.q)
    np.testing.assert_array_equal(plain.q_dot, seeded.q_dot)


def test_noise_requires_rng():
    setup = op.default_lqr_setup(n_dof=1, duration=1.0)
    with pytest.raises(ParameterError):
        op.generate_demo(setup, np.zeros(2), np.ones(2), noise_std=1e-3)


@pytest.fixture(scope="module")
def reach_demo(model, home, reach_goal):
    setup = op.default_lqr_setup()
    start = np.concatenate([home, np.zeros(7)])
    goal = np.concatenate([reach_goal, np.zeros(7)])
    return op.generate_demo(setup, start, goal)


def test_band_without_obstacles_is_identity(model, reach_demo):
    assert op.elastic_band_perturb(reach_demo, [], model) is reach_demo


def test_band_with_clear_obstacle_is_identity(model, reach_demo):
    path = np.array(
        [
            op.forward_kinematics(model, op.rest_state(model, qi)).eef_position
            for qi in reach_demo.q
        ]
    )
    center = path.max(axis=0) + np.array([5.0, 5.0, 5.0])
    out = op.elastic_band_perturb(reach_demo, [(center, 0.3)], model)
    assert out is reach_demo


def test_band_deforms_to_clearance(model, reach_demo):
    path = np.array(
        [
            op.forward_kinematics(model, op.rest_state(model, qi)).eef_position
            for qi in reach_demo.q
        ]
    )
    arc = np.concatenate(
        [[0.0], np.cumsum(np.linalg.norm(np.diff(path, axis=0), axis=1))]
    )
    mid = int(np.searchsorted(arc, 0.5 * arc[-1]))
    radius = 0.15
    out = op.elastic_band_perturb(reach_demo, [(path[mid], radius)], model)
    assert out is not reach_demo
    new_path = np.array(
        [
            op.forward_kinematics(model, op.rest_state(model, qi)).eef_position
            for qi in out.q
        ]
    )
    dists = np.linalg.norm(new_path - path[mid], axis=1)
    assert dists.min() >= radius
    np.testing.assert_array_equal(out.q[0], reach_demo.q[0])
    np.testing.assert_array_equal(out.q[-1], reach_demo.q[-1])


def test_band_rejects_nonpositive_radius(model, reach_demo):
    with pytest.raises(ParameterError):
        op.elastic_band_perturb(reach_demo, [(np.zeros(3), 0.0)], model)


def test_dataset_determinism_and_jobs(model, home, reach_goal):
    kwargs = dict(per_goal=3, seed=11, duration=2.0)
    first = op.generate_dataset(model, home, [reach_goal], **kwargs)
    second = op.generate_dataset(model, home, [reach_goal], **kwargs)
    parallel = op.generate_dataset(model, home, [reach_goal], jobs=2, **kwargs)
    for other in (second, parallel):
        assert other.strategies == first.strategies
        np.testing.assert_array_equal(other.goal_labels, first.goal_labels)
        for a, b in zip(first.demos, other.demos):
            np.testing.assert_array_equal(a.times, b.times)
            np.testing.assert_array_equal(a.q, b.q)
            np.testing.assert_array_equal(a.q_dot, b.q_dot)


def test_dataset_structure(small_dataset, home, reach_goal):
    assert small_dataset.n_demos == 6
    assert small_dataset.strategies == ("cost", "band", "noise") * 2
    base_times = small_dataset.demos[0].times
    for demo in small_dataset.demos:
        np.testing.assert_array_equal(demo.times, base_times)
        np.testing.assert_array_equal(demo.q[0], home)
        assert np.abs(demo.q[-1] - reach_goal).max() <= 1e-2
    np.testing.assert_array_equal(
        small_dataset.goal_labels, np.tile(reach_goal, (6, 1))
    )


def test_dataset_demos_are_diverse(small_dataset):
    base = small_dataset.demos[0]
    for demo in small_dataset.demos[1:3]:
        assert np.abs(demo.q - base.q).max() > 1e-6


def test_dataset_rejects_bad_arguments(model, home, reach_goal):
    with pytest.raises(ParameterError):
        op.generate_dataset(model, home, [reach_goal], per_goal=0)
    with pytest.raises(ParameterError):
        op.generate_dataset(model, home, [], per_goal=2)
    with pytest.raises(ParameterError):
        op.generate_dataset(model, home, [reach_goal[:3]], per_goal=2)
    with pytest.raises(ParameterError):
        op.generate_dataset(
            model, home, [reach_goal], per_goal=2, strategy_mix=("warp",)
        )


def test_demo_io_roundtrip(tmp_path, reach_demo):
    path = tmp_path / "demo_000.csv"
    op.save_demo(reach_demo, path)
    loaded = op.load_demo(path)
    np.testing.assert_allclose(loaded.q, reach_demo.q, rtol=6e-9, atol=1e-12)
    np.testing.assert_allclose(loaded.q_dot, reach_demo.q_dot, rtol=6e-9, atol=1e-12)
    path2 = tmp_path / "again.csv"
    op.save_demo(loaded, path2)
    assert path2.read_bytes() == path.read_bytes()


def test_dataset_io_roundtrip(tmp_path, small_dataset):
    out = tmp_path / "demos"
    op.save_dataset(small_dataset, out, seed=7)
    assert sorted(p.name for p in out.glob("*.csv")) == [
        demo_file_name(i) for i in range(6)
    ]
    assert (out / "manifest.json").exists()
    loaded = op.load_dataset(out)
    assert loaded.n_demos == small_dataset.n_demos
    assert loaded.strategies == small_dataset.strategies
    assert loaded.dt == small_dataset.dt
    np.testing.assert_array_equal(loaded.goal_labels, small_dataset.goal_labels)
    for a, b in zip(loaded.demos, small_dataset.demos):
        np.testing.assert_allclose(a.q, b.q, rtol=6e-9, atol=1e-12)
    with pytest.raises(NonEmptyOutputError):
        op.save_dataset(small_dataset, out, seed=7)
    op.save_dataset(small_dataset, out, seed=7, overwrite=True)


def test_dataset_load_detects_tampering(tmp_path, small_dataset):
    out = tmp_path / "demos"
    op.save_dataset(small_dataset, out, seed=7)
    victim = out / demo_file_name(2)
    text = victim.read_text()
    victim.write_text(text.replace("0", "1", 1))
    with pytest.raises(ManifestError):
        op.load_dataset(out)


def test_trajectory_validation():
    times = np.linspace(0.0, 1.0, 11)
    q = np.linspace(0.0, 1.0, 11)[:, None]
    q_dot = np.ones((11, 1))
    op.JointTrajectory(times=times, q=q, q_dot=q_dot)
    with pytest.raises(ParameterError):
        op.JointTrajectory(times=times[:1], q=q[:1], q_dot=q_dot[:1])
    with pytest.raises(ParameterError):
        op.JointTrajectory(times=times**2, q=q, q_dot=q_dot)
    with pytest.raises(ParameterError):
        op.JointTrajectory(times=times, q=q, q_dot=-q_dot)
    bad = q.copy()
    bad[3, 0] = np.nan
    with pytest.raises(ParameterError):
        op.JointTrajectory(times=times, q=bad, q_dot=q_dot)
