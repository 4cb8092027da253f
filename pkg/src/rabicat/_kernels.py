"""Hot numeric kernels for the mean-field subsystem.

Everything here is scalar-loop code decorated with ``njit`` from
:mod:`rabicat._accel`; with ``RABICAT_DISABLE_NUMBA=1`` the same functions run
as plain Python. The adaptive integrator is a Dormand-Prince 5(4) pair with
FSAL, step clamping so requested sample times are hit exactly, an optional
early-stop radius, and (for the spin system) projection of the spin back onto
its conserved unit sphere after every accepted step.
"""

import numpy as np

from ._accel import njit

# Dormand-Prince 5(4) tableau
_A21 = 0.2
_A31, _A32 = 3.0 / 40.0, 9.0 / 40.0
_A41, _A42, _A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
_A51, _A52, _A53, _A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
_A61, _A62, _A63, _A64, _A65 = (
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
)
_B1, _B3, _B4, _B5, _B6 = 35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0
_E1, _E3, _E4, _E5, _E6, _E7 = (
    71.0 / 57600.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
)

# integrator status codes
STATUS_DONE = 0
STATUS_STOPPED = 1
STATUS_STIFF = -1
STATUS_MAXSTEPS = -2


@njit(cache=True)
def reduced_rhs_xy(x, y, g, h):
    r2 = x * x + y * y
    dx = y - 2.0 * h * r2 * x
    dy = -x + g * g * x / np.sqrt(1.0 + 4.0 * g * g * x * x) - 2.0 * h * r2 * y
    return dx, dy


@njit(cache=True)
def jacobian_entries(x, y, g, h):
    s = 1.0 + 4.0 * g * g * x * x
    j11 = -2.0 * h * (3.0 * x * x + y * y)
    j12 = 1.0 - 4.0 * h * x * y
    j21 = -1.0 + g * g / s ** 1.5 - 4.0 * h * x * y
    j22 = -2.0 * h * (x * x + 3.0 * y * y)
    return j11, j12, j21, j22


@njit(cache=True)
def full_rhs_arr(s, g, h, eta, out):
    # state layout: x, y, Re<sigma_+>, Im<sigma_+>, <sigma_z>
    x, y, pre, pim, sz = s[0], s[1], s[2], s[3], s[4]
    r2 = x * x + y * y
    out[0] = y - 2.0 * h * r2 * x
    out[1] = -x - g * pre - 2.0 * h * r2 * y
    out[2] = eta * (-pim)
    out[3] = eta * (pre - g * x * sz)
    out[4] = eta * 4.0 * g * x * pim


@njit(cache=True)
def lyapunov_v(x, y, g):
    return 0.5 * (x * x + y * y) - 0.25 * (np.sqrt(1.0 + 4.0 * g * g * x * x) - 1.0)


@njit(cache=True)
def lyapunov_vdot(x, y, g, h):
    r2 = x * x + y * y
    s = np.sqrt(1.0 + 4.0 * g * g * x * x)
    return -2.0 * h * r2 * y * y + 2.0 * h * r2 * (g * g / s - 1.0) * x * x


@njit(cache=True)
def lyapunov_scan(g, h, radius, steps):
    """Extrema of V and Vdot on a uniform grid over [-radius, radius]^2, origin excluded."""
    v_min = np.inf
    v_max = -np.inf
    vdot_max = -np.inf
    for i in range(steps):
        x = -radius + 2.0 * radius * i / (steps - 1)
        for j in range(steps):
            y = -radius + 2.0 * radius * j / (steps - 1)
            if x == 0.0 and y == 0.0:
                continue
            v = lyapunov_v(x, y, g)
            vd = lyapunov_vdot(x, y, g, h)
            if v < v_min:
                v_min = v
            if v > v_max:
                v_max = v
            if vd > vdot_max:
                vdot_max = vd
    return v_min, v_max, vdot_max


@njit(cache=True)
def newton_grid(g, h, seeds, max_iter, res_tol, step_tol):
    """Plain Newton iteration from every seed; returns (x, y, residual, converged) rows.

    Convergence requires both the residual and the final Newton step below
    tolerance: near the critical coupling the residual test alone is met far
    from the degenerate root, so the step criterion is what keeps spurious
    near-origin points out of the root list.
    """
    n = seeds.shape[0]
    out = np.empty((n, 4))
    for k in range(n):
        x = seeds[k, 0]
        y = seeds[k, 1]
        ok = 0.0
        res = np.inf
        for _ in range(max_iter):
            fx, fy = reduced_rhs_xy(x, y, g, h)
            j11, j12, j21, j22 = jacobian_entries(x, y, g, h)
            det = j11 * j22 - j12 * j21
            if abs(det) < 1e-300:
                break
            dx = (j22 * fx - j12 * fy) / det
            dy = (-j21 * fx + j11 * fy) / det
            x -= dx
            y -= dy
            if not (np.isfinite(x) and np.isfinite(y)) or abs(x) > 1e8 or abs(y) > 1e8:
                break
            fx, fy = reduced_rhs_xy(x, y, g, h)
            res = np.sqrt(fx * fx + fy * fy)
            if res < res_tol and np.sqrt(dx * dx + dy * dy) < step_tol:
                ok = 1.0
                break
        out[k, 0] = x
        out[k, 1] = y
        out[k, 2] = res
        out[k, 3] = ok
    return out


@njit(cache=True)
def rk45_reduced(x0, y0, g, h, t_samples, rtol, atol, stop_below, max_steps):
    """Adaptive DP5(4) for the two-variable order-parameter flow.

    Samples are recorded exactly at ``t_samples`` (steps are clamped onto
    them). ``stop_below > 0`` terminates once |alpha| drops below it.
    Returns (xs, ys, n_filled, status, t_end, x_end, y_end, n_steps).
    """
    n_out = t_samples.shape[0]
    xs = np.empty(n_out)
    ys = np.empty(n_out)
    t = 0.0
    x, y = x0, y0
    i_out = 0
    while i_out < n_out and t_samples[i_out] <= 0.0:
        xs[i_out] = x
        ys[i_out] = y
        i_out += 1
    t_max = t_samples[n_out - 1]
    dt = 1e-4
    n_steps = 0
    status = STATUS_MAXSTEPS
    k1x, k1y = reduced_rhs_xy(x, y, g, h)
    while n_steps < max_steps:
        if t >= t_max:
            status = STATUS_DONE
            break
        dt_free = dt
        clamped = False
        if i_out < n_out and t + dt >= t_samples[i_out]:
            dt = t_samples[i_out] - t
            clamped = True
        ax = x + dt * _A21 * k1x
        ay = y + dt * _A21 * k1y
        k2x, k2y = reduced_rhs_xy(ax, ay, g, h)
        ax = x + dt * (_A31 * k1x + _A32 * k2x)
        ay = y + dt * (_A31 * k1y + _A32 * k2y)
        k3x, k3y = reduced_rhs_xy(ax, ay, g, h)
        ax = x + dt * (_A41 * k1x + _A42 * k2x + _A43 * k3x)
        ay = y + dt * (_A41 * k1y + _A42 * k2y + _A43 * k3y)
        k4x, k4y = reduced_rhs_xy(ax, ay, g, h)
        ax = x + dt * (_A51 * k1x + _A52 * k2x + _A53 * k3x + _A54 * k4x)
        ay = y + dt * (_A51 * k1y + _A52 * k2y + _A53 * k3y + _A54 * k4y)
        k5x, k5y = reduced_rhs_xy(ax, ay, g, h)
        ax = x + dt * (_A61 * k1x + _A62 * k2x + _A63 * k3x + _A64 * k4x + _A65 * k5x)
        ay = y + dt * (_A61 * k1y + _A62 * k2y + _A63 * k3y + _A64 * k4y + _A65 * k5y)
        k6x, k6y = reduced_rhs_xy(ax, ay, g, h)
        x5 = x + dt * (_B1 * k1x + _B3 * k3x + _B4 * k4x + _B5 * k5x + _B6 * k6x)
        y5 = y + dt * (_B1 * k1y + _B3 * k3y + _B4 * k4y + _B5 * k5y + _B6 * k6y)
        k7x, k7y = reduced_rhs_xy(x5, y5, g, h)
        ex = dt * (_E1 * k1x + _E3 * k3x + _E4 * k4x + _E5 * k5x + _E6 * k6x + _E7 * k7x)
        ey = dt * (_E1 * k1y + _E3 * k3y + _E4 * k4y + _E5 * k5y + _E6 * k6y + _E7 * k7y)
        sx = atol + rtol * max(abs(x), abs(x5))
        sy = atol + rtol * max(abs(y), abs(y5))
        err = np.sqrt(0.5 * ((ex / sx) ** 2 + (ey / sy) ** 2))
        accepted = err <= 1.0
        if accepted:
            t += dt
            x, y = x5, y5
            k1x, k1y = k7x, k7y
            n_steps += 1
            if clamped and i_out < n_out:
                xs[i_out] = x
                ys[i_out] = y
                i_out += 1
                if i_out >= n_out:
                    status = STATUS_DONE
                    break
            if stop_below > 0.0 and x * x + y * y < stop_below * stop_below:
                status = STATUS_STOPPED
                break
        if accepted and clamped:
            dt = dt_free  # resume with the pre-clamp proposal
        else:
            fac = 5.0 if err == 0.0 else 0.9 * err ** -0.2
            if fac > 5.0:
                fac = 5.0
            elif fac < 0.2:
                fac = 0.2
            dt *= fac
        if dt < 1e-14 * (1.0 + abs(t)):
            status = STATUS_STIFF
            break
    return xs, ys, i_out, status, t, x, y, n_steps


@njit(cache=True)
def rk45_full(state0, g, h, eta, t_samples, rtol, atol, stop_below, renorm_spin, max_steps):
    """Adaptive DP5(4) for the coupled order-parameter + spin flow.

    The spin length is an exact constant of motion; with ``renorm_spin`` the
    spin triple is rescaled to the unit sphere after every accepted step
    (projection onto the conserved manifold), and the largest applied
    correction is reported so the caller can log it.
    Returns (samples[n_out, 5], n_filled, status, t_end, state_end, n_steps,
    max_projection).
    """
    n_out = t_samples.shape[0]
    out = np.empty((n_out, 5))
    s = state0.copy()
    k1 = np.empty(5)
    k2 = np.empty(5)
    k3 = np.empty(5)
    k4 = np.empty(5)
    k5 = np.empty(5)
    k6 = np.empty(5)
    k7 = np.empty(5)
    tmp = np.empty(5)
    s5 = np.empty(5)
    t = 0.0
    i_out = 0
    while i_out < n_out and t_samples[i_out] <= 0.0:
        out[i_out] = s
        i_out += 1
    t_max = t_samples[n_out - 1]
    dt = 1e-4
    n_steps = 0
    status = STATUS_MAXSTEPS
    max_proj = 0.0
    full_rhs_arr(s, g, h, eta, k1)
    while n_steps < max_steps:
        if t >= t_max:
            status = STATUS_DONE
            break
        dt_free = dt
        clamped = False
        if i_out < n_out and t + dt >= t_samples[i_out]:
            dt = t_samples[i_out] - t
            clamped = True
        for i in range(5):
            tmp[i] = s[i] + dt * _A21 * k1[i]
        full_rhs_arr(tmp, g, h, eta, k2)
        for i in range(5):
            tmp[i] = s[i] + dt * (_A31 * k1[i] + _A32 * k2[i])
        full_rhs_arr(tmp, g, h, eta, k3)
        for i in range(5):
            tmp[i] = s[i] + dt * (_A41 * k1[i] + _A42 * k2[i] + _A43 * k3[i])
        full_rhs_arr(tmp, g, h, eta, k4)
        for i in range(5):
            tmp[i] = s[i] + dt * (_A51 * k1[i] + _A52 * k2[i] + _A53 * k3[i] + _A54 * k4[i])
        full_rhs_arr(tmp, g, h, eta, k5)
        for i in range(5):
            tmp[i] = s[i] + dt * (
                _A61 * k1[i] + _A62 * k2[i] + _A63 * k3[i] + _A64 * k4[i] + _A65 * k5[i]
            )
        full_rhs_arr(tmp, g, h, eta, k6)
        for i in range(5):
            s5[i] = s[i] + dt * (_B1 * k1[i] + _B3 * k3[i] + _B4 * k4[i] + _B5 * k5[i] + _B6 * k6[i])
        full_rhs_arr(s5, g, h, eta, k7)
        err = 0.0
        for i in range(5):
            e = dt * (
                _E1 * k1[i] + _E3 * k3[i] + _E4 * k4[i] + _E5 * k5[i] + _E6 * k6[i] + _E7 * k7[i]
            )
            sc = atol + rtol * max(abs(s[i]), abs(s5[i]))
            err += (e / sc) ** 2
        err = np.sqrt(err / 5.0)
        accepted = err <= 1.0
        if accepted:
            t += dt
            for i in range(5):
                s[i] = s5[i]
            if renorm_spin:
                nrm = np.sqrt(4.0 * (s[2] * s[2] + s[3] * s[3]) + s[4] * s[4])
                proj = abs(nrm - 1.0)
                if proj > max_proj:
                    max_proj = proj
                s[2] /= nrm
                s[3] /= nrm
                s[4] /= nrm
                # k7 was evaluated pre-projection, so FSAL reuse needs a refresh
                full_rhs_arr(s, g, h, eta, k1)
            else:
                for i in range(5):
                    k1[i] = k7[i]
            n_steps += 1
            if clamped and i_out < n_out:
                out[i_out] = s
                i_out += 1
                if i_out >= n_out:
                    status = STATUS_DONE
                    break
            if stop_below > 0.0 and s[0] * s[0] + s[1] * s[1] < stop_below * stop_below:
                status = STATUS_STOPPED
                break
        if accepted and clamped:
            dt = dt_free
        else:
            fac = 5.0 if err == 0.0 else 0.9 * err ** -0.2
            if fac > 5.0:
                fac = 5.0
            elif fac < 0.2:
                fac = 0.2
            dt *= fac
        if dt < 1e-14 * (1.0 + abs(t)):
            status = STATUS_STIFF
            break
    return out, i_out, status, t, s, n_steps, max_proj
