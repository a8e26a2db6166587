"""Robot description plus momentum-conservation kinematics.

The system is a free-floating spacecraft carrying a 7-DoF serial arm with
classic DH geometry. All momenta are zero and the system center of mass
coincides with the inertial origin, so the spacecraft CoM position is an
algebraic function of attitude and joint angles, never an integrated state.

Convention: the base angular slot of jacobians() and coupling_inertias()
takes the spacecraft world angular velocity omega_0. spacecraft_rates()
converts to ZYX Euler rates at the boundary via the Euler-rate matrix.
"""
from dataclasses import dataclass, field
from importlib import resources

import numpy as np
import yaml

from . import _kernels
from .errors import (
    ModelSchemaError,
    ModelValidationError,
    NearSingularityError,
    UnreachableTargetError,
)
from .frames import (
    check_pitch,
    euler_rate_matrix,
    quaternion_to_rotation,
    rotation_log,
)

CONDITION_LIMIT = 1e12

# rest configuration of the reference arm (joint angles, rad)
REFERENCE_HOME = np.array(
    [0.0, 5.0 * np.pi / 4.0, 0.0, 0.0, np.pi / 2.0, -np.pi / 2.0, 0.0]
)
REFERENCE_HOME.flags.writeable = False


@dataclass(frozen=True)
class DHRow:
    """Classic DH row: Rz(theta + theta_offset) Tz(d) Tx(a) Rx(alpha)."""

    alpha: float
    a: float
    d: float
    theta_offset: float = 0.0


@dataclass(frozen=True, eq=False)
class LinkInertial:
    """Mass, principal inertia (own frame), and the CoM location as a
    fraction of the link vector from the inboard joint."""

    mass: float
    inertia_principal: np.ndarray
    com_offset_ratio: float = 0.5


@dataclass(frozen=True, eq=False)
class RobotModel:
    spacecraft: LinkInertial
    arm_links: tuple
    dh: tuple
    mount_offset: np.ndarray
    total_mass: float
    _packed: tuple = field(repr=False, default=None)

    @property
    def reach(self):
        """Sum of DH link lengths: upper bound on arm extension from mount."""
        return float(sum(np.hypot(row.a, row.d) for row in self.dh))

    @property
    def n_joints(self):
        return len(self.dh)


@dataclass(frozen=True, eq=False)
class SystemState:
    """Spacecraft pose/twist and joint positions/velocities at one instant.

    phi_s is ZYX Euler (yaw, pitch, roll); phi_s_dot holds Euler rates.
    """

    phi_s: np.ndarray = None
    r_s: np.ndarray = None
    phi_m: np.ndarray = None
    phi_s_dot: np.ndarray = None
    v_s: np.ndarray = None
    phi_m_dot: np.ndarray = None

    def __post_init__(self):
        def arr(name, value, n):
            value = np.zeros(n) if value is None else np.array(value, dtype=np.float64)
            if value.shape != (n,):
                raise ModelValidationError(f"{name} must have shape ({n},)")
            if not np.all(np.isfinite(value)):
                raise ModelValidationError(f"{name} must be finite")
            value.flags.writeable = False
            object.__setattr__(self, name, value)

        arr("phi_s", self.phi_s, 3)
        arr("r_s", self.r_s, 3)
        arr("phi_m", self.phi_m, 7)
        arr("phi_s_dot", self.phi_s_dot, 3)
        arr("v_s", self.v_s, 3)
        arr("phi_m_dot", self.phi_m_dot, 7)
        check_pitch(self.phi_s)

    @property
    def phi(self):
        return np.concatenate([self.phi_s, self.phi_m])

    @property
    def phi_dot(self):
        return np.concatenate([self.phi_s_dot, self.phi_m_dot])


@dataclass(frozen=True, eq=False)
class FKResult:
    """World-frame chain geometry: frame origins (mount..end-effector),
    link frames, link CoM positions (index 0 = spacecraft), joint axes."""

    frame_origins: np.ndarray
    link_rotations: np.ndarray
    link_coms: np.ndarray
    joint_axes: np.ndarray
    eef_position: np.ndarray
    eef_rotation: np.ndarray


@dataclass(frozen=True, eq=False)
class InducedMotion:
    """Base motion induced by joint rates under zero momentum."""

    phi_s_dot: np.ndarray
    v_s: np.ndarray
    omega: np.ndarray
    r_s: np.ndarray
    eef_position: np.ndarray
    eef_rotation: np.ndarray


@dataclass(frozen=True, eq=False)
class LinkMotion:
    """Per-body world-frame poses, twists, and inertias (index 0 = spacecraft)."""

    coms: np.ndarray
    rotations: np.ndarray
    velocities: np.ndarray
    angular_velocities: np.ndarray
    world_inertias: np.ndarray


def _positive(value, name):
    if not np.all(np.isfinite(value)):
        raise ModelValidationError(f"{name} must be finite")
    if np.any(np.asarray(value) <= 0.0):
        raise ModelValidationError(f"{name} must be positive")


def _nonnegative(value, name):
    if not np.all(np.isfinite(value)):
        raise ModelValidationError(f"{name} must be finite")
    if np.any(np.asarray(value) < 0.0):
        raise ModelValidationError(f"{name} must be nonnegative")


def _link_from_mapping(entry, name, strict=True):
    if not isinstance(entry, dict):
        raise ModelSchemaError(f"{name} must be a mapping")
    unknown = set(entry) - {"mass", "inertia", "com_offset_ratio"}
    if unknown:
        raise ModelSchemaError(f"{name} has unknown keys: {sorted(unknown)}")
    try:
        mass = float(entry["mass"])
        inertia = np.array(entry["inertia"], dtype=np.float64)
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelSchemaError(f"{name} needs numeric 'mass' and 'inertia'") from exc
    if inertia.shape != (3,):
        raise ModelSchemaError(f"{name}.inertia must list 3 principal values")
    check = _positive if strict else _nonnegative
    check(mass, f"{name}.mass")
    check(inertia, f"{name}.inertia")
    ix, iy, iz = inertia
    if ix + iy < iz - 1e-12 or iy + iz < ix - 1e-12 or iz + ix < iy - 1e-12:
        raise ModelValidationError(f"{name}.inertia violates the triangle inequality")
    ratio = float(entry.get("com_offset_ratio", 0.5))
    if not 0.0 <= ratio <= 1.0:
        raise ModelValidationError(f"{name}.com_offset_ratio must lie in [0, 1]")
    inertia.flags.writeable = False
    return LinkInertial(mass=mass, inertia_principal=inertia, com_offset_ratio=ratio)


def _pack(spacecraft, links, dh, mount):
    alpha = np.array([row.alpha for row in dh])
    a = np.array([row.a for row in dh])
    d = np.array([row.d for row in dh])
    off = np.array([row.theta_offset for row in dh])
    masses = np.array([spacecraft.mass] + [lk.mass for lk in links])
    inertias = np.zeros((8, 3, 3))
    inertias[0] = np.diag(spacecraft.inertia_principal)
    for k, lk in enumerate(links, start=1):
        inertias[k] = np.diag(lk.inertia_principal)
    ratios = np.array([lk.com_offset_ratio for lk in links])
    packed = (alpha, a, d, off, masses, inertias, mount, ratios)
    for arr in packed:
        arr.flags.writeable = False
    return packed


def load_model(config_text):
    """Build a RobotModel from a YAML document (text or parsed mapping)."""
    doc = yaml.safe_load(config_text) if isinstance(config_text, str) else config_text
    if not isinstance(doc, dict):
        raise ModelSchemaError("model config must be a mapping")
    unknown = set(doc) - {"spacecraft", "links", "dh", "mount_offset"}
    if unknown:
        raise ModelSchemaError(f"unknown config sections: {sorted(unknown)}")
    missing = {"spacecraft", "links", "dh", "mount_offset"} - set(doc)
    if missing:
        raise ModelSchemaError(f"missing config sections: {sorted(missing)}")

    spacecraft = _link_from_mapping(doc["spacecraft"], "spacecraft")
    links_doc = doc["links"]
    if not isinstance(links_doc, list) or len(links_doc) != 7:
        raise ModelSchemaError("links must list exactly 7 entries")
    links = tuple(
        _link_from_mapping(entry, f"links[{i}]", strict=False)
        for i, entry in enumerate(links_doc)
    )

    dh_doc = doc["dh"]
    if not isinstance(dh_doc, list) or len(dh_doc) != 7:
        raise ModelSchemaError("dh must list exactly 7 rows")
    rows = []
    for i, entry in enumerate(dh_doc):
        if not isinstance(entry, dict):
            raise ModelSchemaError(f"dh[{i}] must be a mapping")
        unknown = set(entry) - {"alpha", "a", "d", "theta_offset"}
        if unknown:
            raise ModelSchemaError(f"dh[{i}] has unknown keys: {sorted(unknown)}")
        try:
            row = DHRow(
                alpha=float(entry["alpha"]),
                a=float(entry["a"]),
                d=float(entry["d"]),
                theta_offset=float(entry.get("theta_offset", 0.0)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ModelSchemaError(f"dh[{i}] needs numeric alpha, a, d") from exc
        if not all(np.isfinite([row.alpha, row.a, row.d, row.theta_offset])):
            raise ModelValidationError(f"dh[{i}] must be finite")
        rows.append(row)

    mount = np.array(doc["mount_offset"], dtype=np.float64)
    if mount.shape != (3,):
        raise ModelSchemaError("mount_offset must list 3 components")
    if not np.all(np.isfinite(mount)):
        raise ModelValidationError("mount_offset must be finite")
    mount.flags.writeable = False

    total = spacecraft.mass + sum(lk.mass for lk in links)
    return RobotModel(
        spacecraft=spacecraft,
        arm_links=links,
        dh=tuple(rows),
        mount_offset=mount,
        total_mass=total,
        _packed=_pack(spacecraft, links, rows, mount),
    )


def load_model_file(path):
    with open(path, "r", encoding="utf-8") as fh:
        return load_model(fh.read())


def reference_model():
    """Model reproducing the shipped reference configuration."""
    text = (
        resources.files("orbit_promp") / "configs" / "reference_model.yaml"
    ).read_text(encoding="utf-8")
    return load_model(text)


def rest_state(model, phi_m, phi_s=None):
    """Zero-rate state at the given joints with a CoM-consistent base position."""
    phi_s = np.zeros(3) if phi_s is None else np.asarray(phi_s, dtype=np.float64)
    r_s = system_com_spacecraft_position(model, phi_s, phi_m)
    return SystemState(phi_s=phi_s, r_s=r_s, phi_m=phi_m)


def system_com_spacecraft_position(model, phi_s, phi_m):
    """Spacecraft CoM position placing the system CoM at the origin."""
    phi_s = np.asarray(phi_s, dtype=np.float64)
    phi_m = np.asarray(phi_m, dtype=np.float64)
    check_pitch(phi_s)
    alpha, a, d, off, masses, _, mount, ratios = model._packed
    _, _, _, _, msum = _kernels.local_chain(phi_m, alpha, a, d, off, masses, mount, ratios)
    Rs = _kernels.rot_zyx(phi_s)
    return -(Rs @ msum) / model.total_mass


def forward_kinematics(model, state):
    """Chain poses in the inertial frame, anchored at the state's r_s."""
    check_pitch(state.phi_s)
    alpha, a, d, off, masses, _, mount, ratios = model._packed
    lo, lR, lz, lc, _ = _kernels.local_chain(
        state.phi_m, alpha, a, d, off, masses, mount, ratios
    )
    Rs = _kernels.rot_zyx(state.phi_s)
    origins = state.r_s + lo @ Rs.T
    coms = state.r_s + lc @ Rs.T
    axes = lz @ Rs.T
    rots = np.einsum("ij,kjl->kil", Rs, lR)
    return FKResult(
        frame_origins=origins,
        link_rotations=rots,
        link_coms=coms,
        joint_axes=axes,
        eef_position=origins[7],
        eef_rotation=rots[7],
    )


def _maps(model, phi_s, phi_m):
    check_pitch(phi_s)
    return _kernels.momentum_maps(
        np.asarray(phi_s, dtype=np.float64),
        np.asarray(phi_m, dtype=np.float64),
        *model._packed,
    )


def jacobians(model, state):
    """End-effector twist maps (J_s, J_m): [v; omega_eef] = J_s omega_0 + J_m phi_m_dot."""
    J = _maps(model, state.phi_s, state.phi_m)[11]
    return J[:, :3].copy(), J[:, 3:].copy()


def coupling_inertias(model, state):
    """Angular momentum map about the system CoM: L = I_s omega_0 + I_m phi_m_dot."""
    H = _maps(model, state.phi_s, state.phi_m)[9]
    Is, Im = H[:, :3].copy(), H[:, 3:].copy()
    if np.linalg.cond(Is) > CONDITION_LIMIT:
        raise NearSingularityError("coupling inertia I_s is numerically singular")
    return Is, Im


def spacecraft_rates(model, phi_s, phi_m, phi_m_dot):
    """Base rates induced by joint rates under zero momenta.

    Returns (phi_s_dot, v_s): ZYX Euler angle rates and the spacecraft CoM
    velocity. phi_s_dot solves E(phi_s) phi_s_dot = -I_s^-1 I_m phi_m_dot.
    """
    motion = induced_motion(model, phi_s, phi_m, phi_m_dot)
    return motion.phi_s_dot, motion.v_s


def induced_motion(model, phi_s, phi_m, phi_m_dot):
    """spacecraft_rates plus the world angular velocity, base position, and
    end-effector pose, from a single kinematics pass."""
    phi_s = np.asarray(phi_s, dtype=np.float64)
    phi_m_dot = np.asarray(phi_m_dot, dtype=np.float64)
    r_s, origins, _, _, rots, _, _, _, Gv, H, _, _ = _maps(model, phi_s, phi_m)
    Is = H[:, :3]
    if np.linalg.cond(Is) > CONDITION_LIMIT:
        raise NearSingularityError("coupling inertia I_s is numerically singular")
    omega = -np.linalg.solve(Is, H[:, 3:] @ phi_m_dot)
    v_s = Gv @ np.concatenate([omega, phi_m_dot])
    phi_s_dot = np.linalg.solve(euler_rate_matrix(phi_s), omega)
    return InducedMotion(
        phi_s_dot=phi_s_dot,
        v_s=v_s,
        omega=omega,
        r_s=r_s,
        eef_position=origins[7].copy(),
        eef_rotation=rots[7].copy(),
    )


def generalized_jacobian(model, state):
    """J* with end-effector velocity = J* phi_m_dot under zero momenta."""
    out = _maps(model, state.phi_s, state.phi_m)
    H, J = out[9], out[11]
    Is = H[:, :3]
    if np.linalg.cond(Is) > CONDITION_LIMIT:
        raise NearSingularityError("coupling inertia I_s is numerically singular")
    return J[:, 3:] - J[:, :3] @ np.linalg.solve(Is, H[:, 3:])


def link_motion(model, state):
    """Per-body twists for the state's rates, placed at the state's r_s.

    velocities[k] = v_s + Ghat_k u and angular_velocities[k] = W_k u with
    u = [E(phi_s) phi_s_dot; phi_m_dot]; used to recompute momenta per link.
    """
    r_sol, _, coms, _, rots, Iw, Ghat, Wmap, _, _, _, _ = _maps(
        model, state.phi_s, state.phi_m
    )
    omega0 = euler_rate_matrix(state.phi_s) @ state.phi_s_dot
    u = np.concatenate([omega0, state.phi_m_dot])
    velocities = state.v_s + Ghat @ u
    angular = Wmap @ u
    return LinkMotion(
        coms=coms - r_sol + state.r_s,
        rotations=rots,
        velocities=velocities,
        angular_velocities=angular,
        world_inertias=Iw,
    )


def _target_pose(target):
    if isinstance(target, (tuple, list)) and len(target) == 2:
        pos = np.asarray(target[0], dtype=np.float64)
        rot = np.asarray(target[1], dtype=np.float64)
        if rot.shape == (4,):
            rot = quaternion_to_rotation(rot)
        if pos.shape != (3,) or rot.shape != (3, 3):
            raise ModelValidationError("pose must be (position(3), rotation or quaternion)")
        return pos, rot
    target = np.asarray(target, dtype=np.float64)
    if target.shape == (7,):
        return target[:3].copy(), quaternion_to_rotation(target[3:])
    if target.shape == (4, 4):
        return target[:3, 3].copy(), target[:3, :3].copy()
    raise ModelValidationError("unrecognized end-effector pose format")


def resolved_rate_ik(
    model,
    start_state,
    target_eef_pose,
    pos_tol=1e-4,
    ori_tol=1e-3,
    damping=1e-2,
    step_cap=0.2,
    max_iters=500,
):
    """Damped-least-squares IK on the generalized Jacobian.

    The spacecraft attitude is updated momentum-consistently along the
    iteration path, so the returned joints reach the target from the given
    start under free-floating motion.
    """
    p_star, R_star = _target_pose(target_eef_pose)
    phi_s = np.array(start_state.phi_s, dtype=np.float64)
    q = np.array(start_state.phi_m, dtype=np.float64)
    for it in range(max_iters + 1):
        out = _maps(model, phi_s, q)
        origins, rots, H, J = out[1], out[4], out[9], out[11]
        dp = p_star - origins[7]
        eo = rotation_log(R_star @ rots[7].T)
        pos_err, ori_err = np.linalg.norm(dp), np.linalg.norm(eo)
        if pos_err <= pos_tol and ori_err <= ori_tol:
            return q
        if it == max_iters:
            break
        Is = H[:, :3]
        if np.linalg.cond(Is) > CONDITION_LIMIT:
            raise NearSingularityError("coupling inertia I_s is numerically singular")
        Jstar = J[:, 3:] - J[:, :3] @ np.linalg.solve(Is, H[:, 3:])
        err = np.concatenate([dp, eo])
        dq = np.linalg.solve(
            Jstar.T @ Jstar + (damping**2) * np.eye(7), Jstar.T @ err
        )
        peak = np.max(np.abs(dq))
        if peak > step_cap:
            dq *= step_cap / peak
        omega = -np.linalg.solve(Is, H[:, 3:] @ dq)
        phi_s = phi_s + np.linalg.solve(euler_rate_matrix(phi_s), omega)
        check_pitch(phi_s)
        q = q + dq
    raise UnreachableTargetError(
        f"IK did not converge: position residual {pos_err:.3e} m, "
        f"orientation residual {ori_err:.3e} rad",
        position_residual=float(pos_err),
        orientation_residual=float(ori_err),
    )
