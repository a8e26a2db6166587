"""Attitude-disturbance cost of joint trajectories under momentum
conservation, and the planning pipeline: condition the primitive on the
goal, sample candidates, score each by induced spacecraft motion, select
the minimum."""
import concurrent.futures
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._io import write_csv
from .errors import (
    AttitudeSingularityError,
    CostPropagationError,
    NearSingularityError,
    NonEmptyOutputError,
    ParameterError,
    PlanningFailureError,
)
from .frames import check_pitch, rotation_to_quaternion
from .model import induced_motion, resolved_rate_ik, rest_state
from .promp import condition, marginal, sample_trajectories

GOAL_SIGMA_STAR = 1e-8


@dataclass(frozen=True, eq=False)
class CostConfig:
    """c converts angular rate to an equivalent linear rate (m/rad); dt is
    the step of the discrete cost sum."""

    c: float = 1.0
    dt: float = 0.01

    def __post_init__(self):
        if not (float(self.c) >= 0.0):
            raise ParameterError("c must be >= 0")
        if not (float(self.dt) > 0.0):
            raise ParameterError("dt must be positive")
        object.__setattr__(self, "c", float(self.c))
        object.__setattr__(self, "dt", float(self.dt))


@dataclass(frozen=True, eq=False)
class SpacecraftLog:
    """Per-step spacecraft motion along one joint trajectory."""

    times: np.ndarray
    phi_s: np.ndarray
    r_s: np.ndarray
    phi_s_dot: np.ndarray
    v_s: np.ndarray
    omega: np.ndarray


@dataclass(frozen=True, eq=False)
class PlanResult:
    samples: tuple
    costs: np.ndarray
    selected_index: int
    spacecraft_log: SpacecraftLog
    eef_paths: tuple
    times: np.ndarray

    def __post_init__(self):
        costs = np.asarray(self.costs, dtype=np.float64)
        if costs.ndim != 1 or len(costs) != len(self.samples):
            raise ParameterError("one cost per sample required")
        if np.any(costs < 0.0):
            raise ParameterError("costs must be non-negative")
        sel = int(self.selected_index)
        if not (0 <= sel < len(costs)) or costs[sel] > costs.min():
            raise ParameterError("selected_index must hold the minimum cost")
        object.__setattr__(self, "samples", tuple(self.samples))
        object.__setattr__(self, "costs", costs)
        object.__setattr__(self, "selected_index", sel)
        object.__setattr__(self, "eef_paths", tuple(self.eef_paths))


def _propagate(model, traj, cfg):
    """Walk a joint trajectory under momentum conservation from zero
    attitude: explicit Euler on phi_s, r_s algebraic; returns the cost,
    the spacecraft log, and the end-effector path (position + quaternion).
    """
    tn = len(traj)
    phi_s = np.zeros(3)
    phi_s_log = np.empty((tn, 3))
    r_s_log = np.empty((tn, 3))
    rate_log = np.empty((tn, 3))
    v_s_log = np.empty((tn, 3))
    omega_log = np.empty((tn, 3))
    eef = np.empty((tn, 7))
    c2 = cfg.c * cfg.c
    total = 0.0
    for i in range(tn):
        try:
            check_pitch(phi_s)
            motion = induced_motion(model, phi_s, traj.q[i], traj.q_dot[i])
        except (AttitudeSingularityError, NearSingularityError) as exc:
            raise CostPropagationError(
                f"attitude propagation failed at step {i}", step=i
            ) from exc
        phi_s_log[i] = phi_s
        r_s_log[i] = motion.r_s
        rate_log[i] = motion.phi_s_dot
        v_s_log[i] = motion.v_s
        omega_log[i] = motion.omega
        eef[i, :3] = motion.eef_position
        eef[i, 3:] = rotation_to_quaternion(motion.eef_rotation)
        total += c2 * float(motion.phi_s_dot @ motion.phi_s_dot)
        total += float(motion.v_s @ motion.v_s)
        if i < tn - 1:
            phi_s = phi_s + cfg.dt * motion.phi_s_dot
    log = SpacecraftLog(
        times=traj.times.copy(),
        phi_s=phi_s_log,
        r_s=r_s_log,
        phi_s_dot=rate_log,
        v_s=v_s_log,
        omega=omega_log,
    )
    return total, log, eef


def trajectory_cost(model, traj, cfg):
    """Q = c^2 sum ||phi_s_dot||^2 + sum ||v_s||^2 over the trajectory."""
    if abs(traj.dt - cfg.dt) > 1e-9:
        raise ParameterError("trajectory time step does not match cfg.dt")
    total, log, _ = _propagate(model, traj, cfg)
    return total, log


def _goal_joints(model, promp, goal):
    """Resolve a goal given as joints, (position, rotation/quaternion), or a
    4x4 homogeneous pose into a joint vector."""
    if isinstance(goal, (tuple, list)) and len(goal) == 2:
        pose = goal
    else:
        arr = np.asarray(goal, dtype=np.float64)
        if arr.shape == (promp.n_dof,):
            return arr
        if arr.shape == (4, 4):
            pose = arr
        else:
            raise ParameterError(
                "goal must be a joint vector, (position, rotation), or 4x4 pose"
            )
    mean0, _ = marginal(promp, 0.0)
    start = rest_state(model, mean0[: promp.n_dof])
    return resolved_rate_ik(model, start, pose)


def plan(model, promp, goal, n_samples=20, seed=0, cfg=None, jobs=1):
    """Condition the primitive on the goal (and its own start), sample
    n_samples trajectories, and pick the minimum-disturbance one.

    The primitive is conditioned at t = T on [goal joints; zero velocity]
    and at t = 0 on its current marginal mean, both with Sigma* = 1e-8 I.
    Samples whose cost propagation fails score infinity.
    """
    if n_samples < 1:
        raise ParameterError("n_samples must be >= 1")
    if cfg is None:
        cfg = CostConfig(c=1.0, dt=promp.dt)
    if abs(cfg.dt - promp.dt) > 1e-9:
        raise ParameterError("cfg.dt must match the primitive's dt")
    q_goal = _goal_joints(model, promp, goal)
    duration = promp.basis.duration
    start_mean, _ = marginal(promp, 0.0)
    conditioned = condition(
        promp,
        duration,
        np.concatenate([q_goal, np.zeros(promp.n_dof)]),
        GOAL_SIGMA_STAR,
    )
    conditioned = condition(conditioned, 0.0, start_mean, GOAL_SIGMA_STAR)
    samples = sample_trajectories(conditioned, n_samples, seed)

    costs = np.full(n_samples, np.inf)
    logs = [None] * n_samples
    eefs = [None] * n_samples

    def evaluate(i):
        try:
            return i, _propagate(model, samples[i], cfg)
        except CostPropagationError:
            return i, None

    if jobs and jobs > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(evaluate, range(n_samples)))
    else:
        results = [evaluate(i) for i in range(n_samples)]
    for i, out in results:
        if out is not None:
            costs[i], logs[i], eefs[i] = out
    if not np.any(np.isfinite(costs)):
        raise PlanningFailureError("every sampled trajectory failed propagation")
    selected = int(np.argmin(costs))
    return PlanResult(
        samples=tuple(samples),
        costs=costs,
        selected_index=selected,
        spacecraft_log=logs[selected],
        eef_paths=tuple(eefs),
        times=samples[0].times.copy(),
    )


EEF_HEADER = "t,x,y,z,qw,qx,qy,qz"
COST_HEADER = "sample_index,cost"
SPACECRAFT_HEADER = "t,yaw,pitch,roll,x,y,z,wx,wy,wz,vx,vy,vz"


def eef_file_name(index):
    return f"eef_sample_{index:03d}.csv"


def export_plan(result, out_dir, overwrite=False):
    """Write per-sample end-effector paths, the cost table, and the selected
    trajectory's spacecraft motion; returns the written paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if any(out_dir.iterdir()) and not overwrite:
        raise NonEmptyOutputError(f"output directory {out_dir} is not empty")
    paths = []
    times = result.times[:, None]
    for i, eef in enumerate(result.eef_paths):
        if eef is None:
            continue
        paths.append(
            write_csv(out_dir / eef_file_name(i), EEF_HEADER, np.hstack([times, eef]))
        )
    cost_rows = np.column_stack(
        [np.arange(len(result.costs), dtype=np.float64), result.costs]
    )
    paths.append(write_csv(out_dir / "costs.csv", COST_HEADER, cost_rows))
    log = result.spacecraft_log
    rows = np.hstack([times, log.phi_s, log.r_s, log.omega, log.v_s])
    paths.append(write_csv(out_dir / "spacecraft.csv", SPACECRAFT_HEADER, rows))
    return paths
