"""Demonstration data generation: finite-horizon LQR reaching motions in
joint space, diversified by cost-weight variation, elastic-band obstacle
deformation, and process noise."""
import concurrent.futures
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.linalg

from ._io import read_csv, write_csv
from .errors import (
    CostDegeneracyError,
    DeformationFailureError,
    DemoGenerationError,
    NonEmptyOutputError,
    ParameterError,
    RolloutDivergenceError,
)
from .manifest import (
    build_manifest,
    read_manifest,
    verify_outputs,
    write_manifest,
)
from .model import SystemState, forward_kinematics, generalized_jacobian, rest_state

DEFAULT_DT = 0.01
DEFAULT_DURATION = 5.0
DEFAULT_Q_POS = 10.0
DEFAULT_Q_VEL = 1.0
DEFAULT_R = 0.1
DEFAULT_TERMINAL_SCALE = 10.0
DEFAULT_NOISE_STD = 1e-3
STRATEGIES = ("cost", "band", "noise")

BAND_MAX_ITERS = 200
BAND_GAIN = 0.5
DIVERGENCE_LIMIT = 1e6


def _check_cost_matrix(name, mat, n, positive_definite):
    if mat.shape != (n, n):
        raise ParameterError(f"{name} must be {n}x{n}")
    if not np.allclose(mat, mat.T, rtol=0.0, atol=1e-10):
        raise ParameterError(f"{name} must be symmetric")
    eigmin = float(np.linalg.eigvalsh(0.5 * (mat + mat.T)).min())
    if positive_definite:
        if eigmin <= 0.0:
            raise ParameterError(f"{name} must be positive definite")
    elif eigmin < -1e-12:
        raise ParameterError(f"{name} must be positive semidefinite")


@dataclass(frozen=True, eq=False)
class LQRSetup:
    """Discrete finite-horizon LQR problem over per-joint double integrators.

    State x = [q; q_dot] (2n), input u = joint accelerations (n); A and B
    are the exact zero-order-hold discretization at dt. Q and R apply at
    every step; P_T weights the terminal state."""

    A: np.ndarray
    B: np.ndarray
    Q: np.ndarray
    R: np.ndarray
    P_T: np.ndarray
    horizon: int
    dt: float

    def __post_init__(self):
        A = np.asarray(self.A, dtype=np.float64)
        B = np.asarray(self.B, dtype=np.float64)
        Q = np.asarray(self.Q, dtype=np.float64)
        R = np.asarray(self.R, dtype=np.float64)
        P_T = np.asarray(self.P_T, dtype=np.float64)
        if not (
            isinstance(self.horizon, (int, np.integer)) and int(self.horizon) >= 1
        ):
            raise ParameterError("horizon must be a positive integer")
        if not (float(self.dt) > 0.0):
            raise ParameterError("dt must be positive")
        if B.ndim != 2 or B.shape[0] != 2 * B.shape[1]:
            raise ParameterError("B must be 2n x n")
        n = B.shape[1]
        A_ref, B_ref = discretize_double_integrator(n, float(self.dt))
        if A.shape != (2 * n, 2 * n) or not np.allclose(
            A, A_ref, rtol=0.0, atol=1e-12
        ):
            raise ParameterError("A is not the ZOH double-integrator state matrix")
        if not np.allclose(B, B_ref, rtol=1e-12, atol=1e-15):
            raise ParameterError("B is not the ZOH double-integrator input matrix")
        _check_cost_matrix("Q", Q, 2 * n, positive_definite=False)
        _check_cost_matrix("R", R, n, positive_definite=True)
        _check_cost_matrix("P_T", P_T, 2 * n, positive_definite=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "P_T", P_T)
        object.__setattr__(self, "horizon", int(self.horizon))
        object.__setattr__(self, "dt", float(self.dt))

    @property
    def n_dof(self):
        return self.B.shape[1]


def discretize_double_integrator(n_dof, dt):
    """Exact ZOH discretization of q_ddot = u for n_dof decoupled joints."""
    eye = np.eye(n_dof)
    A = np.block([[eye, dt * eye], [np.zeros((n_dof, n_dof)), eye]])
    B = np.vstack([0.5 * dt * dt * eye, dt * eye])
    return A, B


def default_lqr_setup(
    n_dof=7,
    dt=DEFAULT_DT,
    duration=DEFAULT_DURATION,
    q_pos=DEFAULT_Q_POS,
    q_vel=DEFAULT_Q_VEL,
    r=DEFAULT_R,
    terminal_scale=DEFAULT_TERMINAL_SCALE,
):
    """Reference LQR problem; q_pos/q_vel/r may be scalars or per-joint."""
    if dt <= 0.0 or duration < dt:
        raise ParameterError("require dt > 0 and duration >= dt")
    horizon = int(round(duration / dt))
    A, B = discretize_double_integrator(n_dof, dt)
    q_pos = np.broadcast_to(np.asarray(q_pos, dtype=np.float64), (n_dof,))
    q_vel = np.broadcast_to(np.asarray(q_vel, dtype=np.float64), (n_dof,))
    r = np.broadcast_to(np.asarray(r, dtype=np.float64), (n_dof,))
    Q = np.diag(np.concatenate([q_pos, q_vel]))
    R = np.diag(r)
    P_inf = scipy.linalg.solve_discrete_are(A, B, Q, R)
    P_T = terminal_scale * 0.5 * (P_inf + P_inf.T)
    return LQRSetup(A=A, B=B, Q=Q, R=R, P_T=P_T, horizon=horizon, dt=dt)


def riccati_backward(setup):
    """Time-varying gains K_t from the discrete Riccati backward recursion.

    The policy u_t = -K_t (x_t - x_goal) minimizes
    sum_t (e'Qe + u'Ru) + e_T' P_T e_T over the error dynamics e = x - goal.
    """
    A, B = setup.A, setup.B
    n2 = A.shape[0]
    m = B.shape[1]
    K = np.empty((setup.horizon, m, n2))
    P = setup.P_T.copy()
    for t in range(setup.horizon - 1, -1, -1):
        BtP = B.T @ P
        S = setup.R + BtP @ B
        try:
            Kt = np.linalg.solve(S, BtP @ A)
        except np.linalg.LinAlgError as exc:
            raise CostDegeneracyError("R + B'PB is singular") from exc
        if not np.all(np.isfinite(Kt)):
            raise CostDegeneracyError("Riccati recursion produced non-finite gains")
        K[t] = Kt
        P = setup.Q + A.T @ P @ (A - B @ Kt)
        P = 0.5 * (P + P.T)
    return K


@dataclass(frozen=True, eq=False)
class JointTrajectory:
    """Uniformly sampled joint-space trajectory (positions and rates)."""

    times: np.ndarray
    q: np.ndarray
    q_dot: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=np.float64)
        q = np.asarray(self.q, dtype=np.float64)
        q_dot = np.asarray(self.q_dot, dtype=np.float64)
        if times.ndim != 1 or len(times) < 2:
            raise ParameterError("times must hold at least two samples")
        tn = len(times)
        if q.ndim != 2 or q.shape[0] != tn or q_dot.shape != q.shape:
            raise ParameterError("q and q_dot must be tn x n_dof")
        if not (
            np.all(np.isfinite(times))
            and np.all(np.isfinite(q))
            and np.all(np.isfinite(q_dot))
        ):
            raise ParameterError("trajectory contains non-finite values")
        steps = np.diff(times)
        dt = steps[0]
        if dt <= 0.0 or np.abs(steps - dt).max() > 1e-9 * max(1.0, dt):
            raise ParameterError("times must be uniformly increasing")
        # sanity: q_dot must agree with central differences of q in the large
        if tn >= 3:
            cd = (q[2:] - q[:-2]) / (2.0 * dt)
            tol = 5e-2 * max(float(np.abs(q_dot).max()), 1e-9)
            if np.abs(cd - q_dot[1:-1]).max() > tol:
                raise ParameterError("q_dot inconsistent with positions")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "q_dot", q_dot)

    @property
    def dt(self):
        return float(self.times[1] - self.times[0])

    @property
    def duration(self):
        return float(self.times[-1] - self.times[0])

    @property
    def n_dof(self):
        return self.q.shape[1]

    def __len__(self):
        return len(self.times)


@dataclass(frozen=True, eq=False)
class TrajectoryDataset:
    """Homogeneous demo collection: shared time grid, one goal label each."""

    demos: tuple
    duration: float
    dt: float
    goal_labels: np.ndarray
    strategies: tuple = ()

    def __post_init__(self):
        demos = tuple(self.demos)
        if not demos:
            raise ParameterError("dataset needs at least one demo")
        tn = len(demos[0])
        n_dof = demos[0].n_dof
        for d in demos:
            if len(d) != tn or d.n_dof != n_dof:
                raise ParameterError("all demos must share the time grid")
            if abs(d.dt - self.dt) > 1e-9 or abs(d.duration - self.duration) > 1e-9:
                raise ParameterError("all demos must share dt and duration")
        labels = np.asarray(self.goal_labels, dtype=np.float64)
        if labels.shape != (len(demos), n_dof):
            raise ParameterError("goal_labels must be n_demos x n_dof")
        strategies = tuple(self.strategies) if self.strategies else ("",) * len(demos)
        if len(strategies) != len(demos):
            raise ParameterError("one strategy label per demo required")
        object.__setattr__(self, "demos", demos)
        object.__setattr__(self, "duration", float(self.duration))
        object.__setattr__(self, "dt", float(self.dt))
        object.__setattr__(self, "goal_labels", labels)
        object.__setattr__(self, "strategies", strategies)

    @property
    def n_demos(self):
        return len(self.demos)

    @property
    def n_dof(self):
        return self.demos[0].n_dof


def generate_demo(setup, start, goal, gains=None, noise_std=0.0, rng=None):
    """Closed-loop rollout of u_t = -K_t (x_t - goal) from start.

    start/goal are 2n state vectors [q; q_dot]. Optional zero-mean process
    noise (std in rad/s^2) is added to each control; it requires an rng.
    """
    n = setup.n_dof
    start = np.asarray(start, dtype=np.float64)
    goal = np.asarray(goal, dtype=np.float64)
    if start.shape != (2 * n,) or goal.shape != (2 * n,):
        raise ParameterError("start and goal must be 2n state vectors")
    if noise_std < 0.0:
        raise ParameterError("noise_std must be >= 0")
    if noise_std > 0.0 and rng is None:
        raise ParameterError("process noise requires an rng")
    if gains is None:
        gains = riccati_backward(setup)
    x = start.copy()
    states = np.empty((setup.horizon + 1, 2 * n))
    states[0] = x
    for t in range(setup.horizon):
        u = -gains[t] @ (x - goal)
        if rng is not None:
            u = u + rng.normal(0.0, noise_std, n)
        x = setup.A @ x + setup.B @ u
        if np.abs(x).max() > DIVERGENCE_LIMIT:
            raise RolloutDivergenceError(f"rollout diverged at step {t + 1}")
        states[t + 1] = x
    times = np.linspace(0.0, setup.horizon * setup.dt, setup.horizon + 1)
    return JointTrajectory(times=times, q=states[:, :n], q_dot=states[:, n:])


def _eef_path(model, q):
    """End-effector positions per waypoint; attitude held at zero and the
    spacecraft placed by the system-CoM constraint."""
    path = np.empty((q.shape[0], 3))
    for i in range(q.shape[0]):
        fk = forward_kinematics(model, rest_state(model, q[i]))
        path[i] = fk.eef_position
    return path


def _penetrates(path, obstacles):
    for center, radius in obstacles:
        if np.linalg.norm(path - center, axis=1).min() < radius:
            return True
    return False


def elastic_band_perturb(traj, obstacles, model):
    """Deform a trajectory so its end-effector path clears the obstacles.

    Each interior waypoint whose end-effector lies within an obstacle's
    influence region (2x radius) receives a joint-space displacement via
    the generalized-Jacobian transpose of the task-space repulsion; the
    interior is then re-smoothed with a three-point moving average.
    Endpoints stay fixed; rates are recomputed by central differences.
    The check runs before any displacement, so an already-clear trajectory
    is returned unchanged.
    """
    obstacles = [
        (np.asarray(c, dtype=np.float64).reshape(3), float(r)) for c, r in obstacles
    ]
    for _, radius in obstacles:
        if radius <= 0.0:
            raise ParameterError("obstacle radius must be positive")
    if not obstacles:
        return traj
    q = traj.q.copy()
    tn = q.shape[0]
    dt = traj.dt
    cleared = False
    for it in range(BAND_MAX_ITERS + 1):
        path = _eef_path(model, q)
        if not _penetrates(path, obstacles):
            cleared = True
            break
        if it == BAND_MAX_ITERS:
            break
        for i in range(1, tn - 1):
            push = np.zeros(3)
            touched = False
            for center, radius in obstacles:
                d = path[i] - center
                dist = float(np.linalg.norm(d))
                if dist < 2.0 * radius:
                    unit = d / dist if dist > 1e-12 else np.array([1.0, 0.0, 0.0])
                    push += BAND_GAIN * (2.0 * radius - dist) * unit
                    touched = True
            if touched:
                jac = generalized_jacobian(model, SystemState(phi_m=q[i]))
                q[i] += jac[:3].T @ push
        smoothed = q.copy()
        smoothed[1:-1] = (q[:-2] + q[1:-1] + q[2:]) / 3.0
        q = smoothed
    if not cleared:
        raise DeformationFailureError("elastic band failed to clear obstacles")
    if np.array_equal(q, traj.q):
        return traj
    q_dot = np.empty_like(q)
    q_dot[1:-1] = (q[2:] - q[:-2]) / (2.0 * dt)
    q_dot[0] = (-3.0 * q[0] + 4.0 * q[1] - q[2]) / (2.0 * dt)
    q_dot[-1] = (3.0 * q[-1] - 4.0 * q[-2] + q[-3]) / (2.0 * dt)
    return JointTrajectory(times=traj.times.copy(), q=q, q_dot=q_dot)


def generate_dataset(
    model,
    home,
    goals,
    per_goal,
    strategy_mix=STRATEGIES,
    seed=0,
    dt=DEFAULT_DT,
    duration=DEFAULT_DURATION,
    noise_std=DEFAULT_NOISE_STD,
    jobs=1,
):
    """Demonstration dataset: per goal, per_goal demos produced by cycling
    the diversification strategies; every demo draws its randomness from a
    stream keyed on (seed, demo index) so results are order-independent."""
    home = np.asarray(home, dtype=np.float64).reshape(-1)
    goals = [np.asarray(g, dtype=np.float64).reshape(-1) for g in goals]
    if per_goal < 1:
        raise ParameterError("per_goal must be >= 1")
    if not goals:
        raise ParameterError("at least one goal required")
    n_dof = len(home)
    for g in goals:
        if g.shape != (n_dof,):
            raise ParameterError("goals must match home dimension")
    strategy_mix = tuple(strategy_mix)
    if not strategy_mix:
        raise ParameterError("strategy_mix must not be empty")
    for s in strategy_mix:
        if s not in STRATEGIES:
            raise ParameterError(f"unknown strategy {s!r}")

    base_setup = default_lqr_setup(n_dof=n_dof, dt=dt, duration=duration)
    base_gains = riccati_backward(base_setup)
    start = np.concatenate([home, np.zeros(n_dof)])

    tasks = []
    demo_index = 0
    for goal in goals:
        for j in range(per_goal):
            strategy = strategy_mix[j % len(strategy_mix)]
            tasks.append((demo_index, goal, strategy))
            demo_index += 1

    def build(task):
        index, goal, strategy = task
        rng = np.random.default_rng(np.random.SeedSequence([seed, index]))
        target = np.concatenate([goal, np.zeros(n_dof)])
        base_demo = None
        base_path = None
        base_arc = None
        if strategy == "band":
            base_demo = generate_demo(base_setup, start, target, gains=base_gains)
            base_path = _eef_path(model, base_demo.q)
            steps = np.linalg.norm(np.diff(base_path, axis=0), axis=1)
            base_arc = np.concatenate([[0.0], np.cumsum(steps)])
        last_error = None
        for _ in range(10):
            try:
                if strategy == "cost":
                    sq = 10.0 ** rng.uniform(-1.0, 1.0, n_dof)
                    sr = 10.0 ** rng.uniform(-1.0, 1.0, n_dof)
                    setup = default_lqr_setup(
                        n_dof=n_dof,
                        dt=dt,
                        duration=duration,
                        q_pos=DEFAULT_Q_POS * sq,
                        q_vel=DEFAULT_Q_VEL * sq,
                        r=DEFAULT_R * sr,
                    )
                    return index, strategy, generate_demo(setup, start, target)
                if strategy == "noise":
                    demo = generate_demo(
                        base_setup,
                        start,
                        target,
                        gains=base_gains,
                        noise_std=noise_std,
                        rng=rng,
                    )
                    return index, strategy, demo
                radius = rng.uniform(0.1, 0.25)
                # anchor by arc length so the obstacle lands on the moving
                # part of the path, away from the settled tail and endpoints
                frac = rng.uniform(0.35, 0.65)
                anchor = int(np.searchsorted(base_arc, frac * base_arc[-1]))
                direction = rng.normal(0.0, 1.0, 3)
                direction /= max(float(np.linalg.norm(direction)), 1e-12)
                offset = rng.uniform(0.0, 0.5) * radius * direction
                center = base_path[anchor] + offset
                perturbed = elastic_band_perturb(
                    base_demo, [(center, radius)], model
                )
                return index, strategy, perturbed
            except (DeformationFailureError, RolloutDivergenceError) as exc:
                last_error = exc
        raise DemoGenerationError(
            f"demo {index} failed after 10 attempts: {last_error}"
        )

    if jobs and jobs > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(build, tasks))
    else:
        results = [build(t) for t in tasks]
    results.sort(key=lambda r: r[0])
    demos = tuple(r[2] for r in results)
    strategies = tuple(r[1] for r in results)
    labels = np.vstack([t[1] for t in tasks])
    return TrajectoryDataset(
        demos=demos,
        duration=demos[0].duration,
        dt=demos[0].dt,
        goal_labels=labels,
        strategies=strategies,
    )


def _demo_header(n_dof):
    qs = ",".join(f"q{i + 1}" for i in range(n_dof))
    qds = ",".join(f"qd{i + 1}" for i in range(n_dof))
    return f"t,{qs},{qds}"


def demo_file_name(index):
    return f"demo_{index:03d}.csv"


def save_demo(traj, path):
    rows = np.hstack([traj.times[:, None], traj.q, traj.q_dot])
    return write_csv(path, _demo_header(traj.n_dof), rows)


def load_demo(path, n_dof=7):
    data = read_csv(path, expected_cols=1 + 2 * n_dof)
    return JointTrajectory(
        times=data[:, 0],
        q=data[:, 1 : 1 + n_dof],
        q_dot=data[:, 1 + n_dof :],
    )


def save_dataset(dataset, out_dir, seed, params=None, inputs=None, overwrite=False):
    """Write one CSV per demo plus the run manifest; returns the manifest."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if any(out_dir.iterdir()) and not overwrite:
        raise NonEmptyOutputError(f"output directory {out_dir} is not empty")
    paths = []
    for i, demo in enumerate(dataset.demos):
        paths.append(save_demo(demo, out_dir / demo_file_name(i)))
    extra = {
        "dataset": {
            "dt": dataset.dt,
            "tn": len(dataset.demos[0]),
            "n_dof": dataset.n_dof,
            "duration": dataset.duration,
            "seed": int(seed),
            "goals": dataset.goal_labels,
            "strategies": list(dataset.strategies),
            "demos": [p.name for p in paths],
        }
    }
    manifest = build_manifest(
        command="demos",
        seed=seed,
        params=params or {},
        inputs=inputs or {},
        output_paths=paths,
        extra=extra,
    )
    write_manifest(manifest, out_dir)
    return manifest


def load_dataset(directory, verify=True):
    """Rebuild a TrajectoryDataset from a dataset directory's manifest."""
    directory = Path(directory)
    manifest = read_manifest(directory, verify=verify)
    if "dataset" not in manifest:
        raise ParameterError(f"{directory} does not hold a demo dataset")
    if verify:
        verify_outputs(manifest, directory)
    info = manifest["dataset"]
    n_dof = int(info["n_dof"])
    demos = tuple(load_demo(directory / name, n_dof) for name in info["demos"])
    return TrajectoryDataset(
        demos=demos,
        duration=float(info["duration"]),
        dt=float(info["dt"]),
        goal_labels=np.asarray(info["goals"], dtype=np.float64),
        strategies=tuple(info["strategies"]),
    )
