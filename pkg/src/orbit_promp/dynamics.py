"""Mass matrix, Coriolis vector, forward dynamics, and momentum-conserving
time integration in the 10-dim Euler-angle chart phi = [phi_s; phi_m]."""
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import (
    DynamicsSingularityError,
    IntegrationFailureError,
    ModelValidationError,
    ParameterError,
)
from .frames import check_pitch
from .model import SystemState, system_com_spacecraft_position

DIVERGENCE_LIMIT = 1e6


@dataclass(frozen=True, eq=False)
class GeneralizedCoords:
    """Configuration and rates of the reduced chart (3 Euler + 7 joints)."""

    phi: np.ndarray
    phi_dot: np.ndarray

    def __post_init__(self):
        phi = np.asarray(self.phi, dtype=np.float64)
        phi_dot = np.asarray(self.phi_dot, dtype=np.float64)
        if phi.shape != (10,) or phi_dot.shape != (10,):
            raise ModelValidationError("generalized coordinates must be 10-vectors")
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "phi_dot", phi_dot)


@dataclass(frozen=True, eq=False)
class DynamicsTerms:
    M: np.ndarray
    C: np.ndarray
    T: float


def _coerce_phi(phi):
    phi = np.asarray(phi, dtype=np.float64)
    if phi.shape != (10,):
        raise ModelValidationError("phi must be a 10-vector")
    check_pitch(phi[:3])
    return phi


def mass_matrix(model, phi):
    """Symmetric positive-definite 10x10 mass matrix M(phi)."""
    return _kernels.mass_matrix(_coerce_phi(phi), *model._packed)


def coriolis_vector(model, phi, phi_dot):
    """C(phi, phi_dot) from central finite differences of M."""
    phi = _coerce_phi(phi)
    phi_dot = np.asarray(phi_dot, dtype=np.float64)
    if phi_dot.shape != (10,):
        raise ModelValidationError("phi_dot must be a 10-vector")
    return _kernels.coriolis(phi, phi_dot, *model._packed)


def kinetic_energy(model, phi, phi_dot):
    phi_dot = np.asarray(phi_dot, dtype=np.float64)
    return 0.5 * float(phi_dot @ mass_matrix(model, phi) @ phi_dot)


def dynamics_terms(model, phi, phi_dot):
    M = mass_matrix(model, phi)
    C = coriolis_vector(model, phi, phi_dot)
    phi_dot = np.asarray(phi_dot, dtype=np.float64)
    return DynamicsTerms(M=M, C=C, T=0.5 * float(phi_dot @ M @ phi_dot))


def forward_dynamics(model, phi, phi_dot, tau):
    """Solve M phi_ddot + C = [0; tau] for phi_ddot."""
    phi = _coerce_phi(phi)
    phi_dot = np.asarray(phi_dot, dtype=np.float64)
    tau = np.asarray(tau, dtype=np.float64)
    if phi_dot.shape != (10,):
        raise ModelValidationError("phi_dot must be a 10-vector")
    if tau.shape != (7,):
        raise ModelValidationError("tau must be a 7-vector")
    try:
        return _kernels.forward_dynamics(phi, phi_dot, tau, *model._packed)
    except np.linalg.LinAlgError as exc:
        raise DynamicsSingularityError("mass matrix is singular") from exc


@dataclass(frozen=True, eq=False)
class SimulationResult:
    """Uniformly sampled state series; r_s and v_s are reconstructed from the
    momentum constraints at every step, never integrated."""

    times: np.ndarray
    phi: np.ndarray
    phi_dot: np.ndarray
    r_s: np.ndarray
    v_s: np.ndarray

    def __len__(self):
        return len(self.times)

    def state(self, i):
        return SystemState(
            phi_s=self.phi[i, :3],
            r_s=self.r_s[i],
            phi_m=self.phi[i, 3:],
            phi_s_dot=self.phi_dot[i, :3],
            v_s=self.v_s[i],
            phi_m_dot=self.phi_dot[i, 3:],
        )

    def states(self):
        return [self.state(i) for i in range(len(self))]


def _base_motion(model, phi, phi_dot):
    """(r_s, v_s) for an Euler-chart state; v_s from the linear-momentum map."""
    alpha, a, d, off, masses, _, mount, ratios = model._packed
    return _kernels.base_motion(phi, phi_dot, alpha, a, d, off, masses, mount, ratios)


def simulate(model, initial, torque_fn, dt=1e-3, duration=5.0):
    """Fixed-step RK4 integration of the equation of motion.

    torque_fn(t) must return the 7 joint torques; it is evaluated at the
    RK4 stage times. The initial state's rates are taken as given (zero
    rates for the conserved zero-momentum setting).
    """
    if dt <= 0.0 or duration < dt:
        raise ParameterError("require dt > 0 and duration >= dt")
    n_steps = int(round(duration / dt))
    times = np.linspace(0.0, n_steps * dt, n_steps + 1)
    taus = np.empty((n_steps, 3, 7))
    for k in range(n_steps):
        t = times[k]
        taus[k, 0] = np.asarray(torque_fn(t), dtype=np.float64)
        taus[k, 1] = np.asarray(torque_fn(t + 0.5 * dt), dtype=np.float64)
        taus[k, 2] = np.asarray(torque_fn(t + dt), dtype=np.float64)
    if not np.all(np.isfinite(taus)):
        raise ParameterError("torque_fn returned non-finite values")
    phi0 = np.concatenate([initial.phi_s, initial.phi_m])
    phi_dot0 = np.concatenate([initial.phi_s_dot, initial.phi_m_dot])
    phi, phi_dot, r_s, v_s, status, bad_step = _kernels.simulate_loop(
        phi0, phi_dot0, taus, dt, *model._packed
    )
    if status == 1:
        raise IntegrationFailureError(
            f"non-finite state at step {bad_step}", step=bad_step
        )
    if status == 2:
        raise IntegrationFailureError(
            f"rate norm diverged at step {bad_step}", step=bad_step
        )
    if status == 3:
        raise IntegrationFailureError(
            f"pitch singularity reached at step {bad_step}", step=bad_step
        )
    return SimulationResult(times=times, phi=phi, phi_dot=phi_dot, r_s=r_s, v_s=v_s)
