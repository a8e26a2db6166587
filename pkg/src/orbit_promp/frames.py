"""Attitude parameterization helpers: ZYX Euler angles, rotation matrices,
quaternions, and the Euler-rate mapping."""
import numpy as np

from . import _kernels
from .errors import AttitudeSingularityError

PITCH_GUARD = np.pi / 2 - 1e-3


def check_pitch(phi_s):
    """Raise if the pitch angle is inside the Euler-singularity guard band."""
    if abs(float(phi_s[1])) >= PITCH_GUARD:
        raise AttitudeSingularityError(
            f"pitch {float(phi_s[1]):+.6f} rad within 1e-3 of +-pi/2 singularity"
        )


def euler_zyx_to_matrix(phi_s):
    """Rotation matrix R = Rz(yaw) Ry(pitch) Rx(roll)."""
    phi_s = np.asarray(phi_s, dtype=np.float64)
    return _kernels.rot_zyx(phi_s)


def matrix_to_euler_zyx(R):
    """Inverse of euler_zyx_to_matrix; errors inside the pitch guard band."""
    R = np.asarray(R, dtype=np.float64)
    sp = -R[2, 0]
    sp = min(1.0, max(-1.0, sp))
    pitch = np.arcsin(sp)
    if abs(pitch) >= PITCH_GUARD:
        raise AttitudeSingularityError(
            f"pitch {pitch:+.6f} rad within 1e-3 of +-pi/2 singularity"
        )
    yaw = np.arctan2(R[1, 0], R[0, 0])
    roll = np.arctan2(R[2, 1], R[2, 2])
    return np.array([yaw, pitch, roll])


def euler_rate_matrix(phi_s):
    """E(phi_s) mapping ZYX Euler rates to the world angular velocity."""
    phi_s = np.asarray(phi_s, dtype=np.float64)
    return _kernels.euler_rate_matrix(phi_s)


def euler_rates_from_omega(phi_s, omega):
    """Solve E(phi_s) phi_s_dot = omega."""
    check_pitch(phi_s)
    E = euler_rate_matrix(phi_s)
    return np.linalg.solve(E, np.asarray(omega, dtype=np.float64))


def rotation_to_quaternion(R):
    """Unit quaternion (w, x, y, z) with w >= 0."""
    R = np.asarray(R, dtype=np.float64)
    t = np.trace(R)
    if t > 0.0:
        s = np.sqrt(t + 1.0) * 2.0
        q = np.array(
            [0.25 * s, (R[2, 1] - R[1, 2]) / s, (R[0, 2] - R[2, 0]) / s,
             (R[1, 0] - R[0, 1]) / s]
        )
    else:
        i = int(np.argmax(np.diag(R)))
        if i == 0:
            s = np.sqrt(1.0 + R[0, 0] - R[1, 1] - R[2, 2]) * 2.0
            q = np.array(
                [(R[2, 1] - R[1, 2]) / s, 0.25 * s, (R[0, 1] + R[1, 0]) / s,
                 (R[0, 2] + R[2, 0]) / s]
            )
        elif i == 1:
            s = np.sqrt(1.0 - R[0, 0] + R[1, 1] - R[2, 2]) * 2.0
            q = np.array(
                [(R[0, 2] - R[2, 0]) / s, (R[0, 1] + R[1, 0]) / s, 0.25 * s,
                 (R[1, 2] + R[2, 1]) / s]
            )
        else:
            s = np.sqrt(1.0 - R[0, 0] - R[1, 1] + R[2, 2]) * 2.0
            q = np.array(
                [(R[1, 0] - R[0, 1]) / s, (R[0, 2] + R[2, 0]) / s,
                 (R[1, 2] + R[2, 1]) / s, 0.25 * s]
            )
    q /= np.linalg.norm(q)
    if q[0] < 0.0:
        q = -q
    return q


def quaternion_to_rotation(q):
    q = np.asarray(q, dtype=np.float64)
    q = q / np.linalg.norm(q)
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def rotation_log(R):
    """Rotation vector (axis * angle) of a rotation matrix."""
    q = rotation_to_quaternion(R)
    w, v = q[0], q[1:]
    n = np.linalg.norm(v)
    if n < 1e-12:
        return 2.0 * v
    return (2.0 * np.arctan2(n, w)) * (v / n)
