"""Numeric inner loops.

Everything here sticks to the numba-compatible subset of numpy so the same
source either compiles (default) or runs as plain numpy when
``HILLSIM_DISABLE_NUMBA=1``. Public modules wrap these with validation and
friendlier types; nothing here checks its inputs.

Drone state layout (12): ``x y z u v w phi theta psi p q r``.
Command layout (4): ``dFz Mx My Mz``.
"""

from __future__ import annotations

import numpy as np

from ._accel import kernel

# Dormand-Prince 5(4), FSAL: 7 stages.
DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
DP_A = np.array(
    [
        [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [1 / 5, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3 / 40, 9 / 40, 0.0, 0.0, 0.0, 0.0, 0.0],
        [44 / 45, -56 / 15, 32 / 9, 0.0, 0.0, 0.0, 0.0],
        [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729, 0.0, 0.0, 0.0],
        [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656, 0.0, 0.0],
        [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0],
    ]
)
DP_B5 = DP_A[6].copy()
DP_B4 = np.array(
    [5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40]
)
DP_E = DP_B5 - DP_B4
# Shampine's quartic continuous extension; y(t0 + x h) = y0 + h K^T P [x, x^2, x^3, x^4].
DP_P = np.array(
    [
        [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
        [0.0, 0.0, 0.0, 0.0],
        [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
        [0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
        [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
        [0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
        [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
    ]
)

DP_SAFETY = 0.9
DP_MIN_FACTOR = 0.2
DP_MAX_FACTOR = 10.0

STATUS_OK = 0
STATUS_UNDERFLOW = 1
STATUS_MAX_STEPS = 2


@kernel
def dp45_lti(A, c, y0, t0, t1, h0, rtol, atol, max_steps, dp_a, dp_b5, dp_e):
    """Adaptive Dormand-Prince integration of ``y' = A y + c`` over [t0, t1].

    Returns ``(ts, ys, ks, status, t_fail)`` where ``ks[i]`` holds the seven
    stage slopes of step ``i`` for dense output.
    """
    dim = y0.shape[0]
    cap = 64
    ts = np.empty(cap + 1)
    ys = np.empty((cap + 1, dim))
    ks = np.empty((cap, 7, dim))
    ts[0] = t0
    ys[0] = y0
    n_acc = 0
    t = t0
    y = y0.copy()
    f = A @ y + c
    h = min(h0, t1 - t0)
    eps = np.finfo(np.float64).eps
    k = np.empty((7, dim))
    status = STATUS_OK
    t_fail = t0
    steps = 0
    while t < t1:
        if steps >= max_steps:
            status = STATUS_MAX_STEPS
            t_fail = t
            break
        steps += 1
        if h < 16.0 * eps * max(abs(t), 1.0):
            status = STATUS_UNDERFLOW
            t_fail = t
            break
        if t + h > t1:
            h = t1 - t
        k[0] = f
        y_new = y
        for s in range(1, 7):
            ytmp = y.copy()
            for j in range(s):
                if dp_a[s, j] != 0.0:
                    ytmp += h * dp_a[s, j] * k[j]
            if s == 6:
                y_new = ytmp
            k[s] = A @ ytmp + c
        err = np.zeros(dim)
        for j in range(7):
            err += dp_e[j] * k[j]
        err *= h
        acc = 0.0
        for i in range(dim):
            sc = atol + rtol * max(abs(y[i]), abs(y_new[i]))
            acc += (err[i] / sc) ** 2
        err_norm = np.sqrt(acc / dim)
        if err_norm <= 1.0:
            if n_acc == cap:
                ts2 = np.empty(2 * cap + 1)
                ys2 = np.empty((2 * cap + 1, dim))
                ks2 = np.empty((2 * cap, 7, dim))
                ts2[: cap + 1] = ts
                ys2[: cap + 1] = ys
                ks2[:cap] = ks
                ts, ys, ks = ts2, ys2, ks2
                cap *= 2
            ks[n_acc] = k
            t_next = t + h
            if t_next > t1 or t1 - t_next < 16.0 * eps * max(abs(t1), 1.0):
                t_next = t1
            n_acc += 1
            ts[n_acc] = t_next
            ys[n_acc] = y_new
            t = t_next
            y = y_new
            f = k[6].copy()
            if err_norm == 0.0:
                fac = DP_MAX_FACTOR
            else:
                fac = min(DP_MAX_FACTOR, DP_SAFETY * err_norm ** -0.2)
            h *= fac
        else:
            h *= max(DP_MIN_FACTOR, DP_SAFETY * err_norm ** -0.2)
    return ts[: n_acc + 1].copy(), ys[: n_acc + 1].copy(), ks[:n_acc].copy(), status, t_fail


@kernel
def dp45_dense_eval(ts, ys, ks, tq, dp_p):
    """Evaluate the quartic dense output at query times ``tq`` (sorted or not)."""
    nq = tq.shape[0]
    dim = ys.shape[1]
    out = np.empty((nq, dim))
    nseg = ks.shape[0]
    for qi in range(nq):
        t = tq[qi]
        if nseg == 0:
            out[qi] = ys[0]
            continue
        i = np.searchsorted(ts, t, side="right") - 1
        if i < 0:
            i = 0
        if i > nseg - 1:
            i = nseg - 1
        h = ts[i + 1] - ts[i]
        x = (t - ts[i]) / h
        xp = np.array([x, x * x, x * x * x, x * x * x * x])
        w = dp_p @ xp
        acc = np.zeros(dim)
        for j in range(7):
            acc += w[j] * ks[i, j]
        out[qi] = ys[i] + h * acc
    return out


@kernel
def discrete_step(Ak, Bk, s, u):
    """One zero-order-hold transition ``A_k s + B_k u`` written out as explicit sums."""
    n = Ak.shape[0]
    m = Bk.shape[1]
    out = np.empty(n)
    for i in range(n):
        acc = 0.0
        for j in range(n):
            acc += Ak[i, j] * s[j]
        for j in range(m):
            acc += Bk[i, j] * u[j]
        out[i] = acc
    return out


@kernel
def discrete_rollout(Ak, Bk, x0, U):
    steps = U.shape[0]
    out = np.empty((steps + 1, x0.shape[0]))
    out[0] = x0
    for k in range(steps):
        out[k + 1] = discrete_step(Ak, Bk, out[k], U[k])
    return out


@kernel
def wrap_angle(a):
    """Wrap to (-pi, pi]."""
    w = np.fmod(a + np.pi, 2.0 * np.pi)
    if w < 0.0:
        w += 2.0 * np.pi
    w -= np.pi
    if w == -np.pi:
        w = np.pi
    return w


@kernel
def plant_derivative(s, cmd, mass, ixx, iyy, izz, g):
    d = np.empty(12)
    d[0] = s[3]
    d[1] = s[4]
    d[2] = s[5]
    d[3] = g * s[7]
    d[4] = -g * s[6]
    d[5] = cmd[0] / mass
    d[6] = s[9]
    d[7] = s[10]
    d[8] = s[11]
    d[9] = cmd[1] / ixx
    d[10] = cmd[2] / iyy
    d[11] = cmd[3] / izz
    return d


@kernel
def plant_rk4(s, cmd, dt, mass, ixx, iyy, izz, g):
    k1 = plant_derivative(s, cmd, mass, ixx, iyy, izz, g)
    k2 = plant_derivative(s + 0.5 * dt * k1, cmd, mass, ixx, iyy, izz, g)
    k3 = plant_derivative(s + 0.5 * dt * k2, cmd, mass, ixx, iyy, izz, g)
    k4 = plant_derivative(s + dt * k3, cmd, mass, ixx, iyy, izz, g)
    out = s + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    for i in range(6, 9):
        out[i] = wrap_angle(out[i])
    return out


@kernel
def position_law(s, target, vel_ref, integ, yaw_ref, kp, ki, kd, i_clamp, thrust_cap, mass, g, dt):
    """Position loop: returns ``(force, attitude_des, thrust, integ_new)``.

    Desired tilt is expressed in the plant's world-aligned small-angle frame,
    where ``u' = g theta`` and ``v' = -g phi``; yaw is commanded separately.
    """
    integ_new = np.empty(3)
    force = np.empty(3)
    for i in range(3):
        e = target[i] - s[i]
        acc = integ[i] + e * dt
        if acc > i_clamp:
            acc = i_clamp
        elif acc < -i_clamp:
            acc = -i_clamp
        integ_new[i] = acc
        force[i] = mass * (kp[i] * e + ki[i] * acc + kd[i] * (vel_ref[i] - s[3 + i]))
    force[2] += mass * g
    fnorm = np.sqrt(force[0] ** 2 + force[1] ** 2 + force[2] ** 2)
    att = np.empty(3)
    if fnorm > 0.0:
        att[0] = np.arcsin(-force[1] / fnorm)
        att[1] = np.arctan2(force[0], force[2])
    else:
        att[0] = 0.0
        att[1] = 0.0
    att[2] = yaw_ref
    phi = s[6]
    theta = s[7]
    thrust = (
        force[0] * np.cos(phi) * np.sin(theta)
        - force[1] * np.sin(phi)
        + force[2] * np.cos(phi) * np.cos(theta)
    )
    if thrust < 0.0:
        thrust = 0.0
    elif thrust > thrust_cap:
        thrust = thrust_cap
    return force, att, thrust, integ_new


@kernel
def attitude_law(s, att_des, kp_att, kd_att, moment_cap):
    m = np.empty(3)
    for i in range(3):
        e = wrap_angle(att_des[i] - s[6 + i])
        v = kp_att[i] * e - kd_att[i] * s[9 + i]
        if v > moment_cap:
            v = moment_cap
        elif v < -moment_cap:
            v = -moment_cap
        m[i] = v
    return m


@kernel
def tracking_loop(
    s0, waypoints, rate, substeps, yaw_ref, feedforward,
    kp, ki, kd, kp_att, kd_att, i_clamp, thrust_cap, moment_cap,
    mass, ixx, iyy, izz, g,
):
    """Closed-loop run: one controller update per waypoint, ``substeps`` RK4 steps each."""
    n = waypoints.shape[0]
    states = np.empty((n, 12))
    cmds = np.empty((n, 4))
    thrusts = np.empty(n)
    s = s0.copy()
    integ = np.zeros(3)
    dt_ctrl = 1.0 / rate
    dt_phys = dt_ctrl / substeps
    vel_ref = np.zeros(3)
    for k in range(n):
        if feedforward:
            if k + 1 < n:
                vel_ref = (waypoints[k + 1] - waypoints[k]) * rate
            elif k > 0:
                vel_ref = (waypoints[k] - waypoints[k - 1]) * rate
        force, att_des, thrust, integ = position_law(
            s, waypoints[k], vel_ref, integ, yaw_ref, kp, ki, kd,
            i_clamp, thrust_cap, mass, g, dt_ctrl,
        )
        moments = attitude_law(s, att_des, kp_att, kd_att, moment_cap)
        cmd = np.empty(4)
        cmd[0] = thrust - mass * g
        cmd[1] = moments[0]
        cmd[2] = moments[1]
        cmd[3] = moments[2]
        states[k] = s
        cmds[k] = cmd
        thrusts[k] = thrust
        for _ in range(substeps):
            s = plant_rk4(s, cmd, dt_phys, mass, ixx, iyy, izz, g)
    return states, cmds, thrusts
