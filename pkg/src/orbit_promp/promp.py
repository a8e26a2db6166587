"""Probabilistic movement primitive over joint trajectories: normalized
Gaussian RBF basis, per-demo ridge weight fits, Gaussian weight
distribution, marginals, via-point conditioning, and sampling."""
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .demos import JointTrajectory
from .errors import (
    ConditioningSingularityError,
    InsufficientDataError,
    ParameterError,
    PhaseDomainError,
)

DEFAULT_CENTERS = (
    -0.142,
    0.0,
    0.142,
    0.285,
    0.428,
    0.571,
    0.714,
    0.857,
    1.0,
    1.142,
)
DEFAULT_BANDWIDTH = 0.1428
DEFAULT_RIDGE_LAMBDA = 1e-6
DEFAULT_SIGMA_X = 1e-4
CONDITION_LIMIT = 1e14


@dataclass(frozen=True, eq=False)
class BasisConfig:
    """Normalized RBF basis on the phase z = t / duration."""

    duration: float
    n_bf: int = len(DEFAULT_CENTERS)
    centers: tuple = DEFAULT_CENTERS
    bandwidth: float = DEFAULT_BANDWIDTH

    def __post_init__(self):
        centers = np.asarray(self.centers, dtype=np.float64)
        if centers.ndim != 1 or len(centers) < 1:
            raise ParameterError("centers must be a non-empty vector")
        if int(self.n_bf) != len(centers):
            raise ParameterError("n_bf must equal len(centers)")
        if np.any(np.diff(centers) <= 0.0):
            raise ParameterError("centers must be strictly increasing")
        if not (float(self.bandwidth) > 0.0):
            raise ParameterError("bandwidth must be positive")
        if not (float(self.duration) > 0.0):
            raise ParameterError("duration must be positive")
        object.__setattr__(self, "duration", float(self.duration))
        object.__setattr__(self, "n_bf", int(self.n_bf))
        object.__setattr__(self, "centers", tuple(float(c) for c in centers))
        object.__setattr__(self, "bandwidth", float(self.bandwidth))


def _basis_blocks(basis, times):
    """Normalized basis values and their time derivatives on a time grid.

    Returns (pos, vel), each (len(times), n_bf).
    """
    times = np.atleast_1d(np.asarray(times, dtype=np.float64))
    if np.any(times < 0.0) or np.any(times > basis.duration):
        raise PhaseDomainError("t outside [0, duration]")
    z = times / basis.duration
    c = np.asarray(basis.centers)
    h2 = basis.bandwidth * basis.bandwidth
    D = z[:, None] - c[None, :]
    E = np.exp(-(D * D) / h2)
    dE = E * (-2.0 * D / h2)
    s1 = E.sum(axis=1)
    s2 = dE.sum(axis=1)
    pos = E / s1[:, None]
    vel = (dE * s1[:, None] - E * s2[:, None]) / (s1 * s1)[:, None]
    vel /= basis.duration
    return pos, vel


def basis_row(basis, t, n_dof=7):
    """Block-diagonal observation matrix at time t.

    Rows 0..n_dof-1 map weights to joint positions, rows n_dof..2n_dof-1 to
    joint velocities; weight block d occupies columns d*n_bf..(d+1)*n_bf.
    """
    pos, vel = _basis_blocks(basis, float(t))
    n_bf = basis.n_bf
    psi = np.zeros((2 * n_dof, n_bf * n_dof))
    for d in range(n_dof):
        cols = slice(d * n_bf, (d + 1) * n_bf)
        psi[d, cols] = pos[0]
        psi[n_dof + d, cols] = vel[0]
    return psi


@dataclass(frozen=True, eq=False)
class ProMPModel:
    """Gaussian over RBF weights, w ~ N(mu_w, Sigma_w), with per-DoF blocks
    concatenated; sigma_x is the observation noise variance."""

    basis: BasisConfig
    n_dof: int
    mu_w: np.ndarray
    Sigma_w: np.ndarray
    sigma_x: float = DEFAULT_SIGMA_X
    ridge_lambda: float = DEFAULT_RIDGE_LAMBDA
    dt: float = 0.01
    dataset_hash: str = ""

    def __post_init__(self):
        mu = np.asarray(self.mu_w, dtype=np.float64)
        Sigma = np.asarray(self.Sigma_w, dtype=np.float64)
        dim = self.basis.n_bf * int(self.n_dof)
        if mu.shape != (dim,):
            raise ParameterError("mu_w must have length n_bf * n_dof")
        if Sigma.shape != (dim, dim):
            raise ParameterError("Sigma_w must be square of matching size")
        if np.abs(Sigma - Sigma.T).max() > 1e-10:
            raise ParameterError("Sigma_w must be symmetric")
        if float(np.linalg.eigvalsh(Sigma).min()) < -1e-9:
            raise ParameterError("Sigma_w must be positive semidefinite")
        if not (float(self.sigma_x) >= 0.0):
            raise ParameterError("sigma_x must be >= 0")
        if not (float(self.ridge_lambda) > 0.0):
            raise ParameterError("ridge_lambda must be positive")
        if not (float(self.dt) > 0.0):
            raise ParameterError("dt must be positive")
        object.__setattr__(self, "n_dof", int(self.n_dof))
        object.__setattr__(self, "mu_w", mu)
        object.__setattr__(self, "Sigma_w", Sigma)
        object.__setattr__(self, "sigma_x", float(self.sigma_x))
        object.__setattr__(self, "ridge_lambda", float(self.ridge_lambda))
        object.__setattr__(self, "dt", float(self.dt))

    @property
    def dim(self):
        return self.basis.n_bf * self.n_dof

    def time_grid(self):
        tn = int(round(self.basis.duration / self.dt)) + 1
        return np.linspace(0.0, self.basis.duration, tn)


def _floor_psd(S):
    S = 0.5 * (S + S.T)
    evals = np.linalg.eigvalsh(S)
    if evals[0] >= 0.0:
        return S
    evals, vecs = np.linalg.eigh(S)
    evals = np.clip(evals, 0.0, None)
    S = (vecs * evals) @ vecs.T
    return 0.5 * (S + S.T)


def fit_weights(traj, basis, ridge_lambda=DEFAULT_RIDGE_LAMBDA, include_velocity=True):
    """Ridge fit of basis weights to one trajectory.

    Solves (Phi'Phi + lambda I) w_d = Phi' x_d per DoF, where Phi stacks
    position rows (and velocity rows when include_velocity) over all
    timesteps; returns the concatenated weight vector.
    """
    if not (ridge_lambda > 0.0):
        raise ParameterError("ridge_lambda must be positive")
    if abs(traj.duration - basis.duration) > 1e-9:
        raise ParameterError("trajectory duration does not match basis")
    times = traj.times - traj.times[0]
    pos, vel = _basis_blocks(basis, times)
    if include_velocity:
        phi = np.vstack([pos, vel])
        X = np.vstack([traj.q, traj.q_dot])
    else:
        phi = pos
        X = traj.q
    G = phi.T @ phi + ridge_lambda * np.eye(basis.n_bf)
    W = np.linalg.solve(G, phi.T @ X)
    return W.T.reshape(-1)


def fit_promp(
    dataset,
    basis=None,
    ridge_lambda=DEFAULT_RIDGE_LAMBDA,
    sigma_x=DEFAULT_SIGMA_X,
    include_velocity=True,
    dataset_hash="",
):
    """Weight distribution over a demo dataset: sample mean and population
    covariance of per-demo ridge-fitted weights."""
    if dataset.n_demos < 2:
        raise InsufficientDataError("need at least 2 demos to fit a distribution")
    if basis is None:
        basis = BasisConfig(duration=dataset.duration)
    W = np.vstack(
        [
            fit_weights(d, basis, ridge_lambda, include_velocity)
            for d in dataset.demos
        ]
    )
    mu = W.mean(axis=0)
    centered = W - mu
    Sigma = (centered.T @ centered) / W.shape[0]
    return ProMPModel(
        basis=basis,
        n_dof=dataset.n_dof,
        mu_w=mu,
        Sigma_w=_floor_psd(Sigma),
        sigma_x=sigma_x,
        ridge_lambda=ridge_lambda,
        dt=dataset.dt,
        dataset_hash=dataset_hash,
    )


def marginal(promp, t):
    """Trajectory-space Gaussian at time t: (mean 2n_dof, cov 2n_dof x 2n_dof)."""
    psi = basis_row(promp.basis, t, promp.n_dof)
    mean = psi @ promp.mu_w
    cov = psi @ promp.Sigma_w @ psi.T + promp.sigma_x * np.eye(psi.shape[0])
    return mean, 0.5 * (cov + cov.T)


def condition(promp, t_star, x_star, sigma_star, position_only=False):
    """Gaussian conditioning on a desired state at t_star.

    x_star holds [positions; velocities] (positions only when
    position_only); sigma_star is the desired-accuracy covariance, scalar
    shorthand for sigma_star * identity. Returns a new ProMPModel.
    """
    psi = basis_row(promp.basis, t_star, promp.n_dof)
    if position_only:
        psi = psi[: promp.n_dof]
    k = psi.shape[0]
    x_star = np.asarray(x_star, dtype=np.float64).reshape(-1)
    if x_star.shape != (k,):
        raise ParameterError(f"x_star must have length {k}")
    if np.isscalar(sigma_star) or np.ndim(sigma_star) == 0:
        if float(sigma_star) < 0.0:
            raise ParameterError("sigma_star must be >= 0")
        S_star = float(sigma_star) * np.eye(k)
    else:
        S_star = np.asarray(sigma_star, dtype=np.float64)
        if S_star.shape != (k, k):
            raise ParameterError(f"sigma_star must be {k}x{k}")
        if np.abs(S_star - S_star.T).max() > 1e-10:
            raise ParameterError("sigma_star must be symmetric")
    P = psi @ promp.Sigma_w
    S = S_star + P @ psi.T
    S = 0.5 * (S + S.T)
    if not np.all(np.isfinite(S)) or np.linalg.cond(S) > CONDITION_LIMIT:
        raise ConditioningSingularityError(
            "innovation covariance is numerically singular"
        )
    L = np.linalg.solve(S, P).T
    mu_new = promp.mu_w + L @ (x_star - psi @ promp.mu_w)
    Sigma_new = _floor_psd(promp.Sigma_w - L @ P)
    return ProMPModel(
        basis=promp.basis,
        n_dof=promp.n_dof,
        mu_w=mu_new,
        Sigma_w=Sigma_new,
        sigma_x=promp.sigma_x,
        ridge_lambda=promp.ridge_lambda,
        dt=promp.dt,
        dataset_hash=promp.dataset_hash,
    )


def sample_trajectories(promp, n, seed):
    """Draw n weight vectors w ~ N(mu_w, Sigma_w) and evaluate them on the
    model's time grid; deterministic per seed."""
    if n < 1:
        raise ParameterError("n must be >= 1")
    rng = np.random.default_rng(seed)
    evals, vecs = np.linalg.eigh(promp.Sigma_w)
    evals = np.clip(evals, 0.0, None)
    factor = vecs * np.sqrt(evals)
    xi = rng.standard_normal((n, promp.dim))
    weights = promp.mu_w + xi @ factor.T
    times = promp.time_grid()
    pos, vel = _basis_blocks(promp.basis, times)
    out = []
    for i in range(n):
        wm = weights[i].reshape(promp.n_dof, promp.basis.n_bf)
        out.append(
            JointTrajectory(times=times.copy(), q=pos @ wm.T, q_dot=vel @ wm.T)
        )
    return out


def mean_trajectory(promp):
    """Deterministic trajectory traced by the weight mean."""
    times = promp.time_grid()
    pos, vel = _basis_blocks(promp.basis, times)
    wm = promp.mu_w.reshape(promp.n_dof, promp.basis.n_bf)
    return JointTrajectory(times=times, q=pos @ wm.T, q_dot=vel @ wm.T)


def save_promp(promp, path) -> Path:
    doc = {
        "basis": {
            "n_bf": promp.basis.n_bf,
            "centers": list(promp.basis.centers),
            "bandwidth": promp.basis.bandwidth,
            "duration": promp.basis.duration,
        },
        "n_dof": promp.n_dof,
        "mu_w": promp.mu_w.tolist(),
        "sigma_w": promp.Sigma_w.reshape(-1).tolist(),
        "sigma_x": promp.sigma_x,
        "ridge_lambda": promp.ridge_lambda,
        "dt": promp.dt,
        "dataset_hash": promp.dataset_hash,
    }
    path = Path(path)
    path.write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")
    return path


def load_promp(path) -> ProMPModel:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ParameterError(f"unreadable model file {path}: {exc}") from exc
    try:
        basis = BasisConfig(
            duration=doc["basis"]["duration"],
            n_bf=doc["basis"]["n_bf"],
            centers=tuple(doc["basis"]["centers"]),
            bandwidth=doc["basis"]["bandwidth"],
        )
        n_dof = int(doc["n_dof"])
        dim = basis.n_bf * n_dof
        return ProMPModel(
            basis=basis,
            n_dof=n_dof,
            mu_w=np.asarray(doc["mu_w"], dtype=np.float64),
            Sigma_w=np.asarray(doc["sigma_w"], dtype=np.float64).reshape(dim, dim),
            sigma_x=float(doc["sigma_x"]),
            ridge_lambda=float(doc["ridge_lambda"]),
            dt=float(doc["dt"]),
            dataset_hash=str(doc.get("dataset_hash", "")),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ParameterError(f"malformed model file {path}: {exc}") from exc
