"""Semiclassical analysis of the two-photon-damped qubit-oscillator model.

The order parameter is alpha = <a>/sqrt(eta) = x + i*y evolved in the
renormalized time omega0*t. In the infinite frequency-ratio limit the spin
follows adiabatically and the flow reduces to two variables (``reduced``);
at finite eta the coupled five-variable system (``full``) keeps the spin
expectation values, whose total length is an exact constant of motion.

The module finds fixed points by Newton iteration from a seed grid,
classifies them through the Jacobian, certifies the marginal case with a
Lyapunov function, and runs phase-diagram sweeps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from . import _kernels


class StiffnessError(RuntimeError):
    """Adaptive step size underflowed; carries the last good time."""

    def __init__(self, last_time: float):
        self.last_time = last_time
        super().__init__(f"integrator step size underflow at t = {last_time:.6g}")


STABLE = "stable"
UNSTABLE = "unstable"
MARGINAL = "marginal-linearization"
STABLE_LYAPUNOV = "stable-by-lyapunov"

# |Re(eigenvalue)| below this counts as marginal rather than growing/decaying
_STABILITY_EPS = 1e-9


class PhasePoint(NamedTuple):
    x: float
    y: float

    @property
    def abs_alpha(self) -> float:
        return math.hypot(self.x, self.y)


class SpinState(NamedTuple):
    sp: complex  # <sigma_+>
    sz: float  # <sigma_z>

    @property
    def norm_sq(self) -> float:
        return 4.0 * abs(self.sp) ** 2 + self.sz**2


SPIN_DOWN = SpinState(sp=0.0 + 0.0j, sz=-1.0)


@dataclass(frozen=True)
class MeanFieldParams:
    """Dimensionless coupling g, decay rate h, optional finite frequency ratio eta."""

    g: float
    h: float
    eta: float | None = None

    def __post_init__(self):
        if self.g < 0 or not math.isfinite(self.g):
            raise ValueError(f"g must be >= 0, got {self.g}")
        if self.h < 0 or not math.isfinite(self.h):
            raise ValueError(f"h must be >= 0, got {self.h}")
        if self.eta is not None and not (self.eta > 0 and math.isfinite(self.eta)):
            raise ValueError(f"eta must be positive when given, got {self.eta}")


@dataclass(frozen=True)
class FixedPointReport:
    location: PhasePoint
    jacobian_eigenvalues: tuple[complex, complex]
    stability: str
    residual: float


@dataclass(frozen=True)
class LyapunovCertificate:
    v_min: float
    v_max: float
    vdot_max: float
    passed: bool
    grid_radius: float
    grid_steps: int


@dataclass
class Trajectory:
    """Sampled integration result; spin fields are None for the reduced flow."""

    times: np.ndarray
    xs: np.ndarray
    ys: np.ndarray
    sp: np.ndarray | None = None
    sz: np.ndarray | None = None
    status: int = _kernels.STATUS_DONE
    spin_projection_max: float = 0.0

    def __post_init__(self):
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("trajectory times must be strictly increasing")
        if len(self.times) != len(self.xs) or len(self.times) != len(self.ys):
            raise ValueError("times and points must have matching lengths")

    @property
    def abs_alpha(self) -> np.ndarray:
        return np.hypot(self.xs, self.ys)

    @property
    def spin_norm(self) -> np.ndarray:
        if self.sp is None:
            raise ValueError("reduced trajectory carries no spin")
        return 4.0 * np.abs(self.sp) ** 2 + self.sz**2


def reduced_rhs(point, params: MeanFieldParams) -> tuple[float, float]:
    """Time derivative (dx, dy) of the adiabatically-eliminated flow."""
    if params.eta is not None:
        raise ValueError("reduced flow is defined for eta = None (infinite ratio)")
    x, y = point
    return _kernels.reduced_rhs_xy(float(x), float(y), params.g, params.h)


def full_rhs(point, spin: SpinState, params: MeanFieldParams):
    """Derivatives (dx, dy, dsp, dsz) of the coupled order-parameter + spin flow."""
    if params.eta is None:
        raise ValueError("full flow needs a finite eta (use reduced_rhs otherwise)")
    x, y = point
    s = np.array([float(x), float(y), spin.sp.real, spin.sp.imag, float(spin.sz)])
    out = np.empty(5)
    _kernels.full_rhs_arr(s, params.g, params.h, params.eta, out)
    return out[0], out[1], complex(out[2], out[3]), out[4]


def jacobian(point, params: MeanFieldParams) -> np.ndarray:
    """2x2 Jacobian of the reduced flow at the given point."""
    x, y = point
    j11, j12, j21, j22 = _kernels.jacobian_entries(float(x), float(y), params.g, params.h)
    return np.array([[j11, j12], [j21, j22]])


def integrate(
    initial,
    params: MeanFieldParams,
    t_max: float,
    rhs_choice: str | None = None,
    n_samples: int = 500,
    rtol: float = 1e-9,
    atol: float = 1e-11,
    stop_below: float | None = None,
    spin0: SpinState = SPIN_DOWN,
    max_steps: int = 200_000_000,
) -> Trajectory:
    """Integrate the mean-field flow and sample it at uniform times.

    ``rhs_choice`` is "reduced" or "full"; by default it follows whether
    ``params.eta`` is set. ``stop_below`` terminates early once |alpha| falls
    under the given radius (the sampled arrays are truncated accordingly).
    """
    if t_max <= 0:
        raise ValueError(f"t_max must be positive, got {t_max}")
    if rhs_choice is None:
        rhs_choice = "full" if params.eta is not None else "reduced"
    if rhs_choice not in ("reduced", "full"):
        raise ValueError(f"rhs_choice must be 'reduced' or 'full', got {rhs_choice!r}")
    t_samples = np.linspace(0.0, float(t_max), max(int(n_samples), 2))
    stop = -1.0 if stop_below is None else float(stop_below)
    x0, y0 = float(initial[0]), float(initial[1])

    if rhs_choice == "reduced":
        if params.eta is not None:
            raise ValueError("reduced flow requested but params.eta is set")
        xs, ys, n_filled, status, t_end, x_end, y_end, _ = _kernels.rk45_reduced(
            x0, y0, params.g, params.h, t_samples, rtol, atol, stop, max_steps
        )
        if status == _kernels.STATUS_STIFF:
            raise StiffnessError(t_end)
        if status == _kernels.STATUS_STOPPED and (
            n_filled == 0 or t_end > t_samples[n_filled - 1]
        ):
            times = np.append(t_samples[:n_filled], t_end)
            xs = np.append(xs[:n_filled], x_end)
            ys = np.append(ys[:n_filled], y_end)
        else:
            times, xs, ys = t_samples[:n_filled], xs[:n_filled], ys[:n_filled]
        return Trajectory(times=times, xs=xs, ys=ys, status=status)

    if params.eta is None:
        raise ValueError("full flow needs a finite eta in params")
    state0 = np.array([x0, y0, spin0.sp.real, spin0.sp.imag, float(spin0.sz)])
    out, n_filled, status, t_end, s_end, _, max_proj = _kernels.rk45_full(
        state0, params.g, params.h, params.eta, t_samples, rtol, atol, stop, True, max_steps
    )
    if status == _kernels.STATUS_STIFF:
        raise StiffnessError(t_end)
    if status == _kernels.STATUS_STOPPED and (
        n_filled == 0 or t_end > t_samples[n_filled - 1]
    ):
        times = np.append(t_samples[:n_filled], t_end)
        samples = np.vstack([out[:n_filled], s_end])
    else:
        times, samples = t_samples[:n_filled], out[:n_filled]
    return Trajectory(
        times=times,
        xs=samples[:, 0],
        ys=samples[:, 1],
        sp=samples[:, 2] + 1j * samples[:, 3],
        sz=samples[:, 4],
        status=status,
        spin_projection_max=max_proj,
    )


def lyapunov_certificate(
    params: MeanFieldParams, grid_radius: float = 2.0, grid_steps: int = 101
) -> LyapunovCertificate:
    """Sample the normal-phase Lyapunov function on a grid around the origin.

    V(x, y) = (x^2+y^2)/2 - [sqrt(1+4 g^2 x^2) - 1]/4 together with its
    closed-form time derivative certifies the origin for g < 1: the
    certificate passes iff V > 0 and Vdot < 0 at every sampled point
    away from the origin.
    """
    if params.g >= 1.0:
        raise ValueError(f"Lyapunov certificate applies to g < 1, got g = {params.g}")
    if grid_steps < 3:
        raise ValueError("grid_steps must be at least 3")
    v_min, v_max, vdot_max = _kernels.lyapunov_scan(
        params.g, params.h, float(grid_radius), int(grid_steps)
    )
    return LyapunovCertificate(
        v_min=v_min,
        v_max=v_max,
        vdot_max=vdot_max,
        passed=bool(v_min > 0.0 and vdot_max < 0.0),
        grid_radius=grid_radius,
        grid_steps=grid_steps,
    )


def _classify(point: PhasePoint, params: MeanFieldParams) -> tuple[tuple[complex, complex], str]:
    eig = np.linalg.eigvals(jacobian(point, params))
    eig = tuple(sorted((complex(e) for e in eig), key=lambda z: (-z.real, -z.imag)))
    max_re = max(e.real for e in eig)
    if max_re > _STABILITY_EPS:
        return eig, UNSTABLE
    if max_re < -_STABILITY_EPS:
        return eig, STABLE
    # marginal linearization; upgrade only when the certificate applies and passes
    if params.g < 1.0 and params.h > 0.0:
        cert = lyapunov_certificate(params)
        if cert.passed:
            return eig, STABLE_LYAPUNOV
    return eig, MARGINAL


def find_fixed_points(
    params: MeanFieldParams,
    grid_bound: float = 3.0,
    grid_points: int = 41,
    residual_tol: float = 1e-12,
    step_tol: float = 1e-11,
    dedup_tol: float = 1e-6,
    max_iter: int = 100,
) -> list[FixedPointReport]:
    """Newton roots of the reduced flow from a seed grid over [-b, b]^2.

    The origin is always reported first. Non-trivial roots come in +/- pairs
    with the same |alpha|; each reported root satisfies |rhs| < residual_tol.
    """
    if params.eta is not None:
        raise ValueError("fixed points are defined for the reduced flow (eta = None)")
    axis = np.linspace(-grid_bound, grid_bound, grid_points)
    sx, sy = np.meshgrid(axis, axis)
    seeds = np.column_stack([sx.ravel(), sy.ravel()])
    raw = _kernels.newton_grid(
        params.g, params.h, seeds, max_iter, residual_tol, step_tol
    )
    roots: list[tuple[float, float, float]] = [(0.0, 0.0, 0.0)]  # origin always present
    for x, y, res, ok in raw:
        if ok != 1.0:
            continue
        for rx, ry, _ in roots:
            if math.hypot(x - rx, y - ry) < dedup_tol:
                break
        else:
            roots.append((float(x), float(y), float(res)))
    # order: origin, then pairs by |alpha| with the x >= 0 member first
    nontrivial = sorted(roots[1:], key=lambda r: (math.hypot(r[0], r[1]), -r[0]))
    reports = []
    for x, y, res in [roots[0]] + nontrivial:
        point = PhasePoint(x, y)
        eig, stability = _classify(point, params)
        reports.append(
            FixedPointReport(
                location=point, jacobian_eigenvalues=eig, stability=stability, residual=res
            )
        )
    return reports


def stable_order_parameter(params: MeanFieldParams) -> FixedPointReport:
    """The stable (or Lyapunov-stable) fixed point with the largest |alpha|."""
    reports = find_fixed_points(params)
    stable = [r for r in reports if r.stability in (STABLE, STABLE_LYAPUNOV)]
    if not stable:
        # fall back to the origin report so sweeps always emit a row
        return reports[0]
    return max(stable, key=lambda r: r.location.abs_alpha)


@dataclass(frozen=True)
class SweepPoint:
    g: float
    h: float
    x: float
    y: float
    abs_alpha: float
    stability: str
    jacobian_eigenvalues: tuple[complex, complex]

    def csv_row(self) -> tuple:
        e1, e2 = self.jacobian_eigenvalues
        return (
            self.g,
            self.h,
            self.x,
            self.y,
            self.abs_alpha,
            self.stability,
            e1.real,
            e1.imag,
            e2.real,
            e2.imag,
        )


SWEEP_CSV_COLUMNS = (
    "g",
    "h",
    "x",
    "y",
    "abs_alpha",
    "stability",
    "jacobian_re1",
    "jacobian_im1",
    "jacobian_re2",
    "jacobian_im2",
)


def order_parameter_sweep(
    g_values: Sequence[float], h_values: Sequence[float]
) -> list[SweepPoint]:
    """Stable order parameter across a (g, h) grid, ordered by (h, g).

    Each row reports the stable fixed point with the largest |alpha|; the
    positive-x member of a +/- pair is traced so the root location moves
    continuously along the swept axis.
    """
    rows = []
    for h in h_values:
        for g in g_values:
            rep = stable_order_parameter(MeanFieldParams(g=float(g), h=float(h)))
            rows.append(
                SweepPoint(
                    g=float(g),
                    h=float(h),
                    x=rep.location.x,
                    y=rep.location.y,
                    abs_alpha=rep.location.abs_alpha,
                    stability=rep.stability,
                    jacobian_eigenvalues=rep.jacobian_eigenvalues,
                )
            )
    return rows


def critical_coupling(
    h: float, lo: float = 0.9, hi: float = 1.1, tol: float = 1e-4
) -> float:
    """Bisect for the smallest g with a stable non-trivial fixed point."""

    def has_nontrivial_stable(g: float) -> bool:
        reports = find_fixed_points(MeanFieldParams(g=g, h=h))
        return any(
            r.location.abs_alpha > 1e-8 and r.stability in (STABLE, STABLE_LYAPUNOV)
            for r in reports
        )

    if has_nontrivial_stable(lo):
        raise ValueError(f"bracket lower end g={lo} already has a non-trivial root")
    if not has_nontrivial_stable(hi):
        raise ValueError(f"bracket upper end g={hi} has no non-trivial root")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if has_nontrivial_stable(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)
