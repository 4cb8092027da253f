import math

import numpy as np
import pytest

from rabicat import meanfield as mf
from rabicat._accel import NUMBA_ENABLED

# value of the flow at g=1.5, h=1, (x, y) = (0.3, 0.1), frozen from a
# 40-digit arbitrary-precision evaluation of the same expressions
RHS_ORACLE = (0.04, 0.1817235487168372632091206)


def radial_order_parameter(g, h):
    """Independent 1-D bracketing oracle for the non-trivial root magnitude.

    Eliminating the angle from the stationarity conditions leaves
    (1+4 h^2 u^2)^2 + 4 g^2 u (1+4 h^2 u^2) - g^4 = 0 with u = |alpha|^2,
    which has exactly one positive root for g > 1 and none for g <= 1.
    """
    if g <= 1:
        return 0.0

    def f(u):
        m = 1 + 4 * h * h * u * u
        return m * m + 4 * g * g * u * m - g**4

    lo, hi = 0.0, 1.0
    while f(hi) < 0:
        hi *= 2
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if f(mid) < 0:
            lo = mid
        else:
            hi = mid
    return math.sqrt(0.5 * (lo + hi))


class TestReducedRhs:
    def test_origin_is_fixed_point(self):
        for g, h in [(0.0, 0.0), (0.7, 0.3), (1.5, 1.0), (3.0, 0.01)]:
            assert mf.reduced_rhs((0.0, 0.0), mf.MeanFieldParams(g=g, h=h)) == (0.0, 0.0)

    def test_harmonic_limit_rotates(self):
        dx, dy = mf.reduced_rhs((1.0, 0.0), mf.MeanFieldParams(g=0.0, h=0.0))
        assert (dx, dy) == (0.0, -1.0)

    def test_frozen_oracle_value(self):
        dx, dy = mf.reduced_rhs((0.3, 0.1), mf.MeanFieldParams(g=1.5, h=1.0))
        assert abs(dx - RHS_ORACLE[0]) < 1e-14
        assert abs(dy - RHS_ORACLE[1]) < 1e-14

    def test_rejects_finite_eta(self):
        with pytest.raises(ValueError):
            mf.reduced_rhs((0.1, 0.1), mf.MeanFieldParams(g=1.0, h=1.0, eta=10.0))


class TestFullRhs:
    def test_spin_norm_derivative_vanishes(self):
        rng = np.random.default_rng(23)
        params = mf.MeanFieldParams(g=0.7, h=0.3, eta=17.0)
        for _ in range(50):
            x, y = rng.normal(size=2)
            theta, phi = rng.uniform(0, math.pi), rng.uniform(0, 2 * math.pi)
            spin = mf.SpinState(
                sp=0.5 * math.sin(theta) * complex(math.cos(phi), math.sin(phi)),
                sz=math.cos(theta),
            )
            _, _, dsp, dsz = mf.full_rhs((x, y), spin, params)
            ddt_norm = 8 * (spin.sp.conjugate() * dsp).real + 2 * spin.sz * dsz
            assert abs(ddt_norm) < 1e-12

    def test_decoupled_at_zero_coupling(self):
        params = mf.MeanFieldParams(g=0.0, h=0.5, eta=9.0)
        spin = mf.SpinState(sp=0.3 + 0.1j, sz=-0.5)
        _, _, dsp, dsz = mf.full_rhs((0.4, -0.2), spin, params)
        assert dsz == 0.0
        assert abs(dsp - 1j * params.eta * spin.sp) < 1e-14

    def test_requires_eta(self):
        with pytest.raises(ValueError):
            mf.full_rhs((0.0, 0.0), mf.SPIN_DOWN, mf.MeanFieldParams(g=1.0, h=1.0))


class TestIntegrate:
    def test_zero_stays_at_zero(self):
        traj = mf.integrate((0.0, 0.0), mf.MeanFieldParams(g=1.2, h=0.5), t_max=20.0)
        assert np.max(traj.abs_alpha) < 1e-12

    def test_pure_decay_monotone(self):
        # at g=0 the radius obeys d|alpha|^2/dt = -4h|alpha|^4 <= 0
        traj = mf.integrate((1.0, 0.0), mf.MeanFieldParams(g=0.0, h=1.0), t_max=50.0)
        r = traj.abs_alpha
        assert np.all(np.diff(r) <= 1e-12)

    def test_full_flow_example_converges_to_origin(self):
        traj = mf.integrate(
            (0.8, 0.0),
            mf.MeanFieldParams(g=0.6, h=0.25, eta=100.0),
            t_max=5e4,
            stop_below=0.05,
        )
        assert traj.status == mf._kernels.STATUS_STOPPED
        assert traj.abs_alpha[-1] <= 0.05 + 1e-9

    def test_spin_norm_conserved_over_window(self):
        traj = mf.integrate(
            (0.8, 0.2),
            mf.MeanFieldParams(g=0.6, h=0.25, eta=40.0),
            t_max=100.0,
            n_samples=400,
        )
        assert np.max(np.abs(traj.spin_norm - 1.0)) < 1e-8
        assert traj.spin_projection_max < 1e-9

    @pytest.mark.skipif(not NUMBA_ENABLED, reason="slow-decay horizon needs the jitted kernel")
    def test_reduced_slow_decay_reaches_threshold(self):
        traj = mf.integrate(
            (1.0, 0.0),
            mf.MeanFieldParams(g=0.6, h=0.25),
            t_max=5e6,
            n_samples=100,
            stop_below=1e-3,
        )
        assert traj.status == mf._kernels.STATUS_STOPPED
        assert traj.abs_alpha[-1] < 1e-3 + 1e-9
        # the tail is slow: the crossing happens late
        assert traj.times[-1] > 1e4

    def test_rejects_bad_horizon(self):
        with pytest.raises(ValueError):
            mf.integrate((0.1, 0.0), mf.MeanFieldParams(g=1.0, h=1.0), t_max=0.0)


class TestJacobian:
    def test_origin_closed_form(self):
        for g in (0.2, 0.6, 0.99, 1.01, 1.5, 2.0):
            eig = np.linalg.eigvals(mf.jacobian((0.0, 0.0), mf.MeanFieldParams(g=g, h=1.0)))
            expected = np.sort_complex(np.array([1, -1]) * np.emath.sqrt(g * g - 1))
            assert np.max(np.abs(np.sort_complex(eig) - expected)) < 1e-10

    def test_critical_degeneracy(self):
        eig = np.linalg.eigvals(mf.jacobian((0.0, 0.0), mf.MeanFieldParams(g=1.0, h=0.7)))
        assert np.max(np.abs(eig)) < 1e-12

    def test_unstable_branch_above_threshold(self):
        eig = np.linalg.eigvals(mf.jacobian((0.0, 0.0), mf.MeanFieldParams(g=1.5, h=1.0)))
        assert max(eig.real) == pytest.approx(math.sqrt(1.25), abs=1e-12)

    def test_matches_finite_differences(self):
        rng = np.random.default_rng(31)
        params = mf.MeanFieldParams(g=1.3, h=0.8)
        step = 1e-6
        for _ in range(20):
            x, y = rng.uniform(-2, 2, size=2)
            jac = mf.jacobian((x, y), params)
            fd = np.empty((2, 2))
            for col, (dx, dy) in enumerate([(step, 0.0), (0.0, step)]):
                fp = mf.reduced_rhs((x + dx, y + dy), params)
                fm = mf.reduced_rhs((x - dx, y - dy), params)
                fd[0, col] = (fp[0] - fm[0]) / (2 * step)
                fd[1, col] = (fp[1] - fm[1]) / (2 * step)
            assert np.max(np.abs(jac - fd)) < 1e-6 * max(1.0, np.max(np.abs(jac)))


class TestFixedPoints:
    def test_normal_phase_origin_only(self):
        reports = mf.find_fixed_points(mf.MeanFieldParams(g=0.6, h=0.25))
        assert len(reports) == 1
        assert reports[0].location == (0.0, 0.0)
        assert reports[0].stability == mf.STABLE_LYAPUNOV

    def test_critical_point_origin_only(self):
        for h in (0.25, 1.0, 4.0):
            reports = mf.find_fixed_points(mf.MeanFieldParams(g=1.0, h=h))
            assert len(reports) == 1
            assert reports[0].stability == mf.MARGINAL

    def test_broken_phase_pair_matches_radial_oracle(self):
        g, h = 1.5, 1.0
        reports = mf.find_fixed_points(mf.MeanFieldParams(g=g, h=h))
        assert len(reports) == 3
        origin, plus, minus = reports
        assert origin.stability == mf.UNSTABLE
        assert plus.stability == mf.STABLE and minus.stability == mf.STABLE
        assert plus.location.x == -minus.location.x
        assert plus.location.y == -minus.location.y
        assert abs(plus.location.abs_alpha - minus.location.abs_alpha) < 1e-10
        assert abs(plus.location.abs_alpha - radial_order_parameter(g, h)) < 1e-9
        assert plus.residual < 1e-12 and minus.residual < 1e-12

    def test_rejects_full_flow_params(self):
        with pytest.raises(ValueError):
            mf.find_fixed_points(mf.MeanFieldParams(g=1.0, h=1.0, eta=5.0))


class TestLyapunov:
    def test_origin_value_is_zero(self):
        assert mf._kernels.lyapunov_v(0.0, 0.0, 0.7) == 0.0

    def test_certificate_passes_in_normal_phase(self):
        cert = mf.lyapunov_certificate(mf.MeanFieldParams(g=0.6, h=0.25))
        assert cert.passed
        assert cert.v_min > 0 and cert.vdot_max < 0

    def test_pure_imaginary_axis_value(self):
        # x = 0: Vdot reduces to -2 h y^4
        for y in (0.3, -1.2, 2.0):
            got = mf._kernels.lyapunov_vdot(0.0, y, 0.8, 0.5)
            assert got == pytest.approx(-2 * 0.5 * y**4, rel=1e-14)

    def test_closed_form_matches_chain_rule(self):
        rng = np.random.default_rng(41)
        params = mf.MeanFieldParams(g=0.7, h=0.6)
        for _ in range(100):
            x, y = rng.uniform(-2, 2, size=2)
            closed = mf._kernels.lyapunov_vdot(x, y, params.g, params.h)
            dx, dy = mf.reduced_rhs((x, y), params)
            s = math.sqrt(1 + 4 * params.g**2 * x * x)
            grad_x = x - params.g**2 * x / s
            grad_y = y
            assert abs(closed - (grad_x * dx + grad_y * dy)) < 1e-10

    def test_rejects_broken_phase(self):
        with pytest.raises(ValueError):
            mf.lyapunov_certificate(mf.MeanFieldParams(g=1.2, h=1.0))


class TestSweep:
    def test_normal_phase_flat_zero(self):
        rows = mf.order_parameter_sweep(np.linspace(0.0, 1.0, 11), [1.0])
        assert all(r.abs_alpha < 1e-8 for r in rows)

    def test_alpha_decreases_with_h(self):
        rows = mf.order_parameter_sweep([1.5], np.linspace(0.1, 4.0, 12))
        amps = [r.abs_alpha for r in rows]
        assert all(a > 0 for a in amps)
        assert all(b < a for a, b in zip(amps, amps[1:]))

    def test_large_h_suppresses_alpha(self):
        row = mf.order_parameter_sweep([1.5], [100.0])[0]
        assert 0 < row.abs_alpha < 0.1

    def test_critical_coupling_near_one(self):
        assert abs(mf.critical_coupling(1.0, lo=0.9, hi=1.1, tol=1e-4) - 1.0) < 1e-3
