"""Compiled numerical kernels.

Everything here works on plain float64 arrays unpacked from RobotModel
(see model.packed_arrays) so the hot loops stay inside numba. The base
angular slot of every map is the spacecraft world angular velocity
omega_0; Euler-rate conversions happen in the Python wrappers.

The mass-matrix/dynamics path is hand-fused scalar code: the kinetic
energy metric is assembled in the spacecraft body frame (placement drops
out) and mapped to the Euler chart through blockdiag(R_s^T E, I7).
"""
import numpy as np
from numba import njit

PITCH_GUARD = np.pi / 2 - 1e-3


@njit(cache=True)
def rot_zyx(phi_s):
    # R = Rz(yaw) @ Ry(pitch) @ Rx(roll)
    cy, sy = np.cos(phi_s[0]), np.sin(phi_s[0])
    cp, sp = np.cos(phi_s[1]), np.sin(phi_s[1])
    cr, sr = np.cos(phi_s[2]), np.sin(phi_s[2])
    R = np.empty((3, 3))
    R[0, 0] = cy * cp
    R[0, 1] = cy * sp * sr - sy * cr
    R[0, 2] = cy * sp * cr + sy * sr
    R[1, 0] = sy * cp
    R[1, 1] = sy * sp * sr + cy * cr
    R[1, 2] = sy * sp * cr - cy * sr
    R[2, 0] = -sp
    R[2, 1] = cp * sr
    R[2, 2] = cp * cr
    return R


@njit(cache=True)
def euler_rate_matrix(phi_s):
    # columns: world-frame axes of yaw, pitch, roll rotations; omega = E @ phi_s_dot
    cy, sy = np.cos(phi_s[0]), np.sin(phi_s[0])
    cp, sp = np.cos(phi_s[1]), np.sin(phi_s[1])
    E = np.empty((3, 3))
    E[0, 0] = 0.0
    E[0, 1] = -sy
    E[0, 2] = cy * cp
    E[1, 0] = 0.0
    E[1, 1] = cy
    E[1, 2] = sy * cp
    E[2, 0] = 1.0
    E[2, 1] = 0.0
    E[2, 2] = -sp
    return E


@njit(cache=True)
def skew(v):
    S = np.zeros((3, 3))
    S[0, 1] = -v[2]
    S[0, 2] = v[1]
    S[1, 0] = v[2]
    S[1, 2] = -v[0]
    S[2, 0] = -v[1]
    S[2, 1] = v[0]
    return S


@njit(cache=True)
def dh_rotation_translation(theta, d, a, alpha):
    # classic DH step: Rz(theta) Tz(d) Tx(a) Rx(alpha)
    ct, st = np.cos(theta), np.sin(theta)
    ca, sa = np.cos(alpha), np.sin(alpha)
    R = np.empty((3, 3))
    R[0, 0] = ct
    R[0, 1] = -st * ca
    R[0, 2] = st * sa
    R[1, 0] = st
    R[1, 1] = ct * ca
    R[1, 2] = -ct * sa
    R[2, 0] = 0.0
    R[2, 1] = sa
    R[2, 2] = ca
    p = np.empty(3)
    p[0] = a * ct
    p[1] = a * st
    p[2] = d
    return R, p


@njit(cache=True)
def local_chain(phi_m, dh_alpha, dh_a, dh_d, dh_off, masses, mount, ratios):
    """Arm chain in spacecraft body coordinates (origin = spacecraft CoM).

    Returns frame origins lo (8,3) with lo[0] the mount point, link frame
    rotations lR (8,3,3) with lR[0] = identity, joint axes lz (7,3),
    link CoMs lc (8,3) with lc[0] = 0, and msum = sum(m_k * lc[k]).
    """
    lo = np.empty((8, 3))
    lR = np.empty((8, 3, 3))
    lz = np.empty((7, 3))
    lo[0] = mount
    lR[0] = np.eye(3)
    for i in range(7):
        for r in range(3):
            lz[i, r] = lR[i, r, 2]
        th = phi_m[i] + dh_off[i]
        ct, st = np.cos(th), np.sin(th)
        ca, sa = np.cos(dh_alpha[i]), np.sin(dh_alpha[i])
        ai, di = dh_a[i], dh_d[i]
        # p = R_i @ [a ct, a st, d]; R_{i+1} = R_i @ Rdh
        px, py, pz = ai * ct, ai * st, di
        for r in range(3):
            lo[i + 1, r] = (
                lo[i, r] + lR[i, r, 0] * px + lR[i, r, 1] * py + lR[i, r, 2] * pz
            )
        for r in range(3):
            c0 = lR[i, r, 0] * ct + lR[i, r, 1] * st
            c1 = -lR[i, r, 0] * st * ca + lR[i, r, 1] * ct * ca + lR[i, r, 2] * sa
            c2 = lR[i, r, 0] * st * sa - lR[i, r, 1] * ct * sa + lR[i, r, 2] * ca
            lR[i + 1, r, 0] = c0
            lR[i + 1, r, 1] = c1
            lR[i + 1, r, 2] = c2
    lc = np.zeros((8, 3))
    msum = np.zeros(3)
    for k in range(1, 8):
        rk = ratios[k - 1]
        for r in range(3):
            lc[k, r] = (1.0 - rk) * lo[k - 1, r] + rk * lo[k, r]
            msum[r] += masses[k] * lc[k, r]
    return lo, lR, lz, lc, msum


@njit(cache=True)
def world_chain(phi_s, phi_m, dh_alpha, dh_a, dh_d, dh_off, masses, mount, ratios):
    """Chain placed so the system CoM sits at the inertial origin.

    Returns r_s, frame origins (8,3), link CoMs (8,3) with coms[0] = r_s,
    joint axes (7,3), frame rotations (8,3,3) with rots[0] = R_s.
    """
    Rs = rot_zyx(phi_s)
    lo, lR, lz, lc, msum = local_chain(
        phi_m, dh_alpha, dh_a, dh_d, dh_off, masses, mount, ratios
    )
    W = masses.sum()
    r_s = -(Rs @ msum) / W
    origins = np.empty((8, 3))
    coms = np.empty((8, 3))
    axes = np.empty((7, 3))
    rots = np.empty((8, 3, 3))
    for k in range(8):
        origins[k] = r_s + Rs @ lo[k]
        coms[k] = r_s + Rs @ lc[k]
        rots[k] = Rs @ lR[k]
    for i in range(7):
        axes[i] = Rs @ lz[i]
    return r_s, origins, coms, axes, rots


@njit(cache=True)
def momentum_maps(
    phi_s, phi_m, dh_alpha, dh_a, dh_d, dh_off, masses, inertias, mount, ratios
):
    """Velocity and momentum maps in the twist chart u = [omega_0; phi_m_dot].

    Returns (r_s, origins, coms, axes, rots, Iw, Ghat, Wmap, Gv, H, Mtw, J):
      Iw (8,3,3) world link inertias; Ghat (8,3,10) unreduced CoM velocity
      maps (velocity relative to the spacecraft CoM translation); Wmap
      (8,3,10) angular velocity maps; Gv (3,10) spacecraft CoM velocity map
      under zero linear momentum; H (3,10) = [I_s | I_m] angular momentum
      map about the origin; Mtw (10,10) kinetic-energy metric; J (6,10)
      end-effector twist map (linear rows then angular rows).
    """
    r_s, origins, coms, axes, rots = world_chain(
        phi_s, phi_m, dh_alpha, dh_a, dh_d, dh_off, masses, mount, ratios
    )
    W = masses.sum()
    Iw = np.empty((8, 3, 3))
    for k in range(8):
        Iw[k] = rots[k] @ inertias[k] @ rots[k].T
    Ghat = np.zeros((8, 3, 10))
    Wmap = np.zeros((8, 3, 10))
    for k in range(8):
        Ghat[k, :, :3] = -skew(coms[k] - r_s)
        for r in range(3):
            Wmap[k, r, r] = 1.0
        for j in range(k):
            # joint j+1 (axis axes[j], point origins[j]) moves link k
            zj = axes[j]
            arm = coms[k] - origins[j]
            Ghat[k, 0, 3 + j] = zj[1] * arm[2] - zj[2] * arm[1]
            Ghat[k, 1, 3 + j] = zj[2] * arm[0] - zj[0] * arm[2]
            Ghat[k, 2, 3 + j] = zj[0] * arm[1] - zj[1] * arm[0]
            Wmap[k, :, 3 + j] = zj
    Gv = np.zeros((3, 10))
    for k in range(8):
        Gv -= (masses[k] / W) * Ghat[k]
    H = np.zeros((3, 10))
    Mtw = np.zeros((10, 10))
    for k in range(8):
        Gk = Ghat[k] + Gv
        H += Iw[k] @ Wmap[k] + masses[k] * (skew(coms[k]) @ Gk)
        Mtw += masses[k] * (Gk.T @ Gk) + Wmap[k].T @ (Iw[k] @ Wmap[k])
    J = np.zeros((6, 10))
    tip = origins[7]
    J[:3, :3] = -skew(tip - r_s) + Gv[:, :3]
    J[3:, :] = Wmap[7]
    for j in range(7):
        zj = axes[j]
        arm = tip - origins[j]
        J[0, 3 + j] = zj[1] * arm[2] - zj[2] * arm[1] + Gv[0, 3 + j]
        J[1, 3 + j] = zj[2] * arm[0] - zj[0] * arm[2] + Gv[1, 3 + j]
        J[2, 3 + j] = zj[0] * arm[1] - zj[1] * arm[0] + Gv[2, 3 + j]
    return r_s, origins, coms, axes, rots, Iw, Ghat, Wmap, Gv, H, Mtw, J


@njit(cache=True)
def _mass_matrix_into(
    phi, dh_alpha, dh_a, dh_d, dh_off, masses, inertias, mount, ratios, M
):
    """Fill M (10,10) with the Euler-chart mass matrix; fused scalar code.

    Assembled in the spacecraft body frame where the chain placement drops
    out, then mapped through blockdiag(R_s^T E(phi_s), I7).
    """
    lo, lR, lz, lc, msum = local_chain(
        phi[3:], dh_alpha, dh_a, dh_d, dh_off, masses, mount, ratios
    )
    W = masses.sum()
    Mtw = np.zeros((10, 10))
    gv = np.zeros((3, 10))
    gcols = np.empty((3, 10))
    wcols = np.zeros((3, 10))
    iww = np.empty((3, 10))
    Iwb = np.empty((3, 3))
    tmp = np.empty((3, 3))
    for r in range(3):
        wcols[r, r] = 1.0
    for k in range(8):
        mk = masses[k]
        # body-frame inertia of body k: lR[k] @ I_k @ lR[k]^T
        for r in range(3):
            for c in range(3):
                tmp[r, c] = (
                    lR[k, r, 0] * inertias[k, 0, c]
                    + lR[k, r, 1] * inertias[k, 1, c]
                    + lR[k, r, 2] * inertias[k, 2, c]
                )
        for r in range(3):
            for c in range(3):
                Iwb[r, c] = (
                    tmp[r, 0] * lR[k, c, 0]
                    + tmp[r, 1] * lR[k, c, 1]
                    + tmp[r, 2] * lR[k, c, 2]
                )
        nc = 3 + k
        if k >= 1:
            # joint k's column becomes active for this and all later bodies
            for r in range(3):
                wcols[r, 2 + k] = lz[k - 1, r]
        # base columns of the CoM velocity map: -skew(lc[k])
        gcols[0, 0] = 0.0
        gcols[0, 1] = lc[k, 2]
        gcols[0, 2] = -lc[k, 1]
        gcols[1, 0] = -lc[k, 2]
        gcols[1, 1] = 0.0
        gcols[1, 2] = lc[k, 0]
        gcols[2, 0] = lc[k, 1]
        gcols[2, 1] = -lc[k, 0]
        gcols[2, 2] = 0.0
        for j in range(k):
            ax = lz[j, 0]
            ay = lz[j, 1]
            az = lz[j, 2]
            rx = lc[k, 0] - lo[j, 0]
            ry = lc[k, 1] - lo[j, 1]
            rz = lc[k, 2] - lo[j, 2]
            gcols[0, 3 + j] = ay * rz - az * ry
            gcols[1, 3 + j] = az * rx - ax * rz
            gcols[2, 3 + j] = ax * ry - ay * rx
        for c in range(nc):
            for r in range(3):
                iww[r, c] = (
                    Iwb[r, 0] * wcols[0, c]
                    + Iwb[r, 1] * wcols[1, c]
                    + Iwb[r, 2] * wcols[2, c]
                )
        for c1 in range(nc):
            g0 = gcols[0, c1]
            g1 = gcols[1, c1]
            g2 = gcols[2, c1]
            w0 = wcols[0, c1]
            w1 = wcols[1, c1]
            w2 = wcols[2, c1]
            for c2 in range(c1, nc):
                Mtw[c1, c2] += mk * (
                    g0 * gcols[0, c2] + g1 * gcols[1, c2] + g2 * gcols[2, c2]
                ) + (w0 * iww[0, c2] + w1 * iww[1, c2] + w2 * iww[2, c2])
            f = mk / W
            gv[0, c1] -= f * g0
            gv[1, c1] -= f * g1
            gv[2, c1] -= f * g2
    # linear-momentum reduction: Mtw -= W * gv^T gv
    for c1 in range(10):
        for c2 in range(c1, 10):
            Mtw[c1, c2] -= W * (
                gv[0, c1] * gv[0, c2]
                + gv[1, c1] * gv[1, c2]
                + gv[2, c1] * gv[2, c2]
            )
            Mtw[c2, c1] = Mtw[c1, c2]
    # Euler chart: Bl = blockdiag(Eb, I7) with Eb = R_s^T E(phi_s)
    Rs = rot_zyx(phi[:3])
    E = euler_rate_matrix(phi[:3])
    Eb = np.empty((3, 3))
    for r in range(3):
        for c in range(3):
            Eb[r, c] = Rs[0, r] * E[0, c] + Rs[1, r] * E[1, c] + Rs[2, r] * E[2, c]
    # M11 = Eb^T A Eb, M12 = Eb^T B, M22 = Mtw[3:,3:]
    for r in range(3):
        for c in range(3):
            tmp[r, c] = (
                Mtw[r, 0] * Eb[0, c] + Mtw[r, 1] * Eb[1, c] + Mtw[r, 2] * Eb[2, c]
            )
    for r in range(3):
        for c in range(3):
            M[r, c] = Eb[0, r] * tmp[0, c] + Eb[1, r] * tmp[1, c] + Eb[2, r] * tmp[2, c]
    for r in range(3):
        for c in range(3, 10):
            M[r, c] = Eb[0, r] * Mtw[0, c] + Eb[1, r] * Mtw[1, c] + Eb[2, r] * Mtw[2, c]
            M[c, r] = M[r, c]
    for r in range(3, 10):
        for c in range(r, 10):
            M[r, c] = Mtw[r, c]
            M[c, r] = Mtw[r, c]
    # exact symmetry of the attitude block
    for r in range(3):
        for c in range(r + 1, 3):
            s = 0.5 * (M[r, c] + M[c, r])
            M[r, c] = s
            M[c, r] = s


@njit(cache=True)
def mass_matrix(phi, dh_alpha, dh_a, dh_d, dh_off, masses, inertias, mount, ratios):
    """Euler-chart mass matrix M(phi), 10x10 symmetric positive definite."""
    M = np.empty((10, 10))
    _mass_matrix_into(
        phi, dh_alpha, dh_a, dh_d, dh_off, masses, inertias, mount, ratios, M
    )
    return M


@njit(cache=True)
def coriolis(
    phi, phi_dot, dh_alpha, dh_a, dh_d, dh_off, masses, inertias, mount, ratios
):
    """C = Mdot phi_dot - 0.5 [phi_dot^T dM/dphi_k phi_dot]_k, central differences."""
    Mp = np.empty((10, 10))
    Mm = np.empty((10, 10))
    Mdot = np.zeros((10, 10))
    quad = np.zeros(10)
    pp = phi.copy()
    for k in range(10):
        h = 1e-6 * max(1.0, abs(phi[k]))
        pk = phi[k]
        pp[k] = pk + h
        _mass_matrix_into(
            pp, dh_alpha, dh_a, dh_d, dh_off, masses, inertias, mount, ratios, Mp
        )
        pp[k] = pk - h
        _mass_matrix_into(
            pp, dh_alpha, dh_a, dh_d, dh_off, masses, inertias, mount, ratios, Mm
        )
        pp[k] = pk
        inv2h = 1.0 / (2.0 * h)
        vk = phi_dot[k]
        acc = 0.0
        for r in range(10):
            drow = 0.0
            for c in range(10):
                dm = (Mp[r, c] - Mm[r, c]) * inv2h
                Mdot[r, c] += dm * vk
                drow += dm * phi_dot[c]
            acc += phi_dot[r] * drow
        quad[k] = 0.5 * acc
    return Mdot @ phi_dot - quad


@njit(cache=True)
def forward_dynamics(
    phi, phi_dot, tau, dh_alpha, dh_a, dh_d, dh_off, masses, inertias, mount, ratios
):
    M = mass_matrix(
        phi, dh_alpha, dh_a, dh_d, dh_off, masses, inertias, mount, ratios
    )
    C = coriolis(
        phi, phi_dot, dh_alpha, dh_a, dh_d, dh_off, masses, inertias, mount, ratios
    )
    rhs = -C
    rhs[3:] += tau
    return np.linalg.solve(M, rhs)


@njit(cache=True)
def rk4_step(
    phi,
    phi_dot,
    tau0,
    tau_half,
    tau1,
    dt,
    dh_alpha,
    dh_a,
    dh_d,
    dh_off,
    masses,
    inertias,
    mount,
    ratios,
):
    k1v = forward_dynamics(
        phi, phi_dot, tau0, dh_alpha, dh_a, dh_d, dh_off, masses, inertias, mount, ratios
    )
    q2 = phi + 0.5 * dt * phi_dot
    v2 = phi_dot + 0.5 * dt * k1v
    k2v = forward_dynamics(
        q2, v2, tau_half, dh_alpha, dh_a, dh_d, dh_off, masses, inertias, mount, ratios
    )
    q3 = phi + 0.5 * dt * v2
    v3 = phi_dot + 0.5 * dt * k2v
    k3v = forward_dynamics(
        q3, v3, tau_half, dh_alpha, dh_a, dh_d, dh_off, masses, inertias, mount, ratios
    )
    q4 = phi + dt * v3
    v4 = phi_dot + dt * k3v
    k4v = forward_dynamics(
        q4, v4, tau1, dh_alpha, dh_a, dh_d, dh_off, masses, inertias, mount, ratios
    )
    phi_new = phi + (dt / 6.0) * (phi_dot + 2.0 * v2 + 2.0 * v3 + v4)
    vel_new = phi_dot + (dt / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
    return phi_new, vel_new


@njit(cache=True)
def base_motion(phi, phi_dot, dh_alpha, dh_a, dh_d, dh_off, masses, mount, ratios):
    """(r_s, v_s) reconstructed from the CoM and linear-momentum constraints."""
    lo, lR, lz, lc, msum = local_chain(
        phi[3:], dh_alpha, dh_a, dh_d, dh_off, masses, mount, ratios
    )
    W = masses.sum()
    Rs = rot_zyx(phi[:3])
    r_s = -(Rs @ msum) / W
    E = euler_rate_matrix(phi[:3])
    omega_w = E @ phi_dot[:3]
    # body-frame angular velocity
    omega = Rs.T @ omega_w
    # v_s = -(1/W) sum m_k d/dt(R_s lc_k)  (world), assembled in body frame
    vb = np.zeros(3)
    for k in range(1, 8):
        mk = masses[k]
        # omega x lc_k
        vb[0] += mk * (omega[1] * lc[k, 2] - omega[2] * lc[k, 1])
        vb[1] += mk * (omega[2] * lc[k, 0] - omega[0] * lc[k, 2])
        vb[2] += mk * (omega[0] * lc[k, 1] - omega[1] * lc[k, 0])
        for j in range(k):
            qdj = phi_dot[3 + j]
            ax, ay, az = lz[j, 0], lz[j, 1], lz[j, 2]
            rx = lc[k, 0] - lo[j, 0]
            ry = lc[k, 1] - lo[j, 1]
            rz = lc[k, 2] - lo[j, 2]
            vb[0] += mk * qdj * (ay * rz - az * ry)
            vb[1] += mk * qdj * (az * rx - ax * rz)
            vb[2] += mk * qdj * (ax * ry - ay * rx)
    v_s = -(Rs @ vb) / W
    return r_s, v_s


@njit(cache=True)
def simulate_loop(
    phi0,
    phi_dot0,
    taus,
    dt,
    dh_alpha,
    dh_a,
    dh_d,
    dh_off,
    masses,
    inertias,
    mount,
    ratios,
):
    """Fixed-step RK4 over a precomputed torque table taus (n_steps, 3, 7)
    holding the stage torques (t, t+dt/2, t+dt) per step.

    Returns (phi, phi_dot, r_s, v_s, status, bad_step); status 0 = ok,
    1 = non-finite state, 2 = rate divergence, 3 = pitch singularity.
    """
    n = taus.shape[0]
    phi = np.empty((n + 1, 10))
    phi_dot = np.empty((n + 1, 10))
    r_s = np.empty((n + 1, 3))
    v_s = np.empty((n + 1, 3))
    phi[0] = phi0
    phi_dot[0] = phi_dot0
    r0, vv0 = base_motion(
        phi0, phi_dot0, dh_alpha, dh_a, dh_d, dh_off, masses, mount, ratios
    )
    r_s[0] = r0
    v_s[0] = vv0
    for k in range(n):
        p_new, v_new = rk4_step(
            phi[k],
            phi_dot[k],
            taus[k, 0],
            taus[k, 1],
            taus[k, 2],
            dt,
            dh_alpha,
            dh_a,
            dh_d,
            dh_off,
            masses,
            inertias,
            mount,
            ratios,
        )
        ok = True
        big = False
        for i in range(10):
            if not (np.isfinite(p_new[i]) and np.isfinite(v_new[i])):
                ok = False
            if abs(v_new[i]) > 1e6:
                big = True
        if not ok:
            return phi, phi_dot, r_s, v_s, 1, k + 1
        if big:
            return phi, phi_dot, r_s, v_s, 2, k + 1
        if abs(p_new[1]) >= PITCH_GUARD:
            return phi, phi_dot, r_s, v_s, 3, k + 1
        phi[k + 1] = p_new
        phi_dot[k + 1] = v_new
        rk, vk = base_motion(
            p_new, v_new, dh_alpha, dh_a, dh_d, dh_off, masses, mount, ratios
        )
        r_s[k + 1] = rk
        v_s[k + 1] = vk
    return phi, phi_dot, r_s, v_s, 0, -1


@njit(cache=True)
def spacecraft_rates(
    phi_s, phi_m, phi_m_dot, dh_alpha, dh_a, dh_d, dh_off, masses, inertias, mount, ratios
):
    """Momentum-conserving base rates.

    Returns (phi_s_dot Euler rates, v_s, omega_0, r_s, I_s, I_m).
    """
    r_s, _, _, _, _, _, _, _, Gv, H, _, _ = momentum_maps(
        phi_s, phi_m, dh_alpha, dh_a, dh_d, dh_off, masses, inertias, mount, ratios
    )
    Is = np.ascontiguousarray(H[:, :3])
    Im = np.ascontiguousarray(H[:, 3:])
    omega0 = -np.linalg.solve(Is, Im @ phi_m_dot)
    u = np.empty(10)
    u[:3] = omega0
    u[3:] = phi_m_dot
    v_s = Gv @ u
    E = euler_rate_matrix(phi_s)
    phi_s_dot = np.linalg.solve(E, omega0)
    return phi_s_dot, v_s, omega0, r_s, Is, Im
