"""Trajectory production: series launch, chart launch, integration, asymptotics.

The shape flow leaves the singular orbit at t = 0 with B1 = 0, so the
integration cannot start there directly.  A power series in t built
order-by-order from the flow equations supplies a starting state at a
small offset; on the sphere side, the trajectory leaves the singular
arc J along the unstable eigenvector of the desingularized chart field
and is continued in u after leaving a small neighbourhood of J.

Integration uses an embedded Dormand-Prince 5(4) pair with PI step
control, optional per-step projection (used to renormalize sphere
states), and early termination on positivity loss or step collapse.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.integrate import quad

from . import flow
from .exterior import ShapeState

__all__ = [
    "SeriesStart",
    "Trajectory",
    "ALCFit",
    "REACHED_HORIZON",
    "CONVERGED",
    "POSITIVITY_VIOLATION",
    "STEP_FAILURE",
    "series_start",
    "eval_series",
    "series_offset",
    "integrate_shape",
    "integrate_sphere",
    "launch_sphere",
    "unstable_direction",
    "detect_convergence",
    "alc_fit",
    "family_shape_trajectory",
    "escapes_invariant_region",
    "critical_parameter",
    "ALC_NOTE",
]

REACHED_HORIZON = "reached-horizon"
CONVERGED = "converged-to-target"
POSITIVITY_VIOLATION = "positivity-violation"
STEP_FAILURE = "step-failure"

POSITIVITY_FLOOR = 1e-9
CHART_SWITCH_X = 0.01  # leave the desingularized chart once alpha3 reaches this

# The limit direction has alpha1 = 0 and alpha3 > 0: the bounded metric
# function is A1, while B1 grows with slope 2/3.  Emitted with every
# asymptotic fit because the bounded function is sometimes misattributed.
ALC_NOTE = (
    "asymptotically conic limit: A1 approaches a constant (slope 0); "
    "B1 grows linearly with slope 2/3 and is not the bounded function"
)


@dataclass(frozen=True)
class SeriesStart:
    """Power-series data of the smooth solution leaving the singular orbit.

    coefficients[k] holds the t^k coefficients of (A1, A2, B1, B2); the
    seed is (mu, lambda, 0, lambda) with B1'(0) = +2, A1'(0) = 0 and
    A2'(0) = -B2'(0) = -mu/(4 lambda).
    """

    mu: float
    lam: float
    order: int
    coefficients: np.ndarray  # shape (order+1, 4)

    def truncation_offset(self, tol: float = 1e-10) -> float:
        """Largest launch offset with last-term estimate below tol, capped at 1e-2."""
        last = np.max(np.abs(self.coefficients[-1]))
        if last == 0.0:
            return 1e-2
        return min(1e-2, (tol / last) ** (1.0 / self.order))


@dataclass(frozen=True)
class Trajectory:
    """Ordered samples of an integrated solution.

    params is strictly increasing in the stated parameter kind ("t", "u"
    or "v"); shapes and spheres are (n, 4) with shapes = f * spheres;
    monitors is (n, 9) in the order flow.MONITOR_NAMES with NaN for
    flagged-missing entries.  Instances are not mutated after creation.
    """

    kind: str
    params: np.ndarray
    shapes: np.ndarray
    spheres: np.ndarray
    f: np.ndarray
    monitors: np.ndarray
    termination: str
    stats: dict

    def __len__(self) -> int:
        return len(self.params)

    def replace(self, **kw) -> "Trajectory":
        return replace(self, **kw)

    def monitor(self, name: str) -> np.ndarray:
        return self.monitors[:, flow.MONITOR_NAMES.index(name)]


@dataclass(frozen=True)
class ALCFit:
    """Affine fits of the shape functions over a trailing t-window."""

    slopes: np.ndarray
    intercepts: np.ndarray
    t_lo: float
    t_hi: float
    max_relative_deviation: float
    note: str = ALC_NOTE


# -- power series off the singular orbit ----------------------------------


def _poly_mul(a: np.ndarray, b: np.ndarray, n: int) -> np.ndarray:
    """Product of coefficient arrays truncated to degree n."""
    return np.convolve(a, b)[: n + 1]


def _series_residuals(c: np.ndarray, n: int) -> list:
    """Coefficient arrays of the four polynomial flow identities.

    With denominators cleared, a series solution satisfies
        E1 = 2 A1' A2^2 B2^2 - A1^2 (B2^2 - A2^2)            = 0
        E2 = 2 A2' A2 B1 B2 - A2 (B2^2 - A2^2 + B1^2) + A1 B1 B2 = 0
        E3 = B1' A2 B2 - (A2^2 + B2^2 - B1^2)                = 0
        E4 = 2 B2' A2 B1 B2 - B2 (A2^2 - B2^2 + B1^2) - A1 A2 B1 = 0
    identically in t.
    """
    a1, a2, b1, b2 = (c[:, j] for j in range(4))
    k = np.arange(len(a1))
    da1, da2, db1, db2 = (np.append((k * f)[1:], 0.0) for f in (a1, a2, b1, b2))
    m = _poly_mul
    a2sq, b2sq, b1sq = m(a2, a2, n), m(b2, b2, n), m(b1, b1, n)
    a1sq = m(a1, a1, n)
    b1b2 = m(b1, b2, n)
    e1 = 2.0 * m(da1, m(a2sq, b2sq, n), n) - m(a1sq, b2sq - a2sq, n)
    e2 = 2.0 * m(da2, m(a2, b1b2, n), n) - m(a2, b2sq - a2sq + b1sq, n) + m(a1, b1b2, n)
    e3 = m(db1, m(a2, b2, n), n) - (a2sq + b2sq - b1sq)
    e4 = 2.0 * m(db2, m(a2, b1b2, n), n) - m(b2, a2sq - b2sq + b1sq, n) - m(a1, m(a2, b1, n), n)
    return [e1, e2, e3, e4]


def series_start(mu: float, order: int = 4) -> SeriesStart:
    """Unique power-series solution leaving the singular orbit at parameter mu.

    Matches the flow identities order by order from the seed
    (mu, lambda, 0, lambda); each order is a well-conditioned 4x4 linear
    solve obtained by probing the cleared-denominator residuals.
    """
    if not 0.0 < mu < 1.0:
        raise ValueError(f"mu must lie in (0, 1), got {mu}")
    if not 3 <= order <= 8:
        raise ValueError(f"order must lie in 3..8, got {order}")
    lam = math.sqrt((1.0 - mu * mu) / 2.0)
    c = np.zeros((order + 1, 4))
    c[0] = (mu, lam, 0.0, lam)
    for k in range(1, order + 1):
        # E1, E3 matched at t^(k-1) pin a_k and b_k individually; with
        # those fixed, E2, E4 at t^k are affine in (p_k, q_k).  The
        # sequential order matters at k = 1 where p_1 b_1 is bilinear.
        def res(i, m):
            return _series_residuals(c[: k + 1], k + 1)[i][m]

        for slot, eq in ((0, 0), (2, 2)):
            c[k][slot] = 0.0
            r0 = res(eq, k - 1)
            c[k][slot] = 1.0
            r1 = res(eq, k - 1)
            c[k][slot] = -r0 / (r1 - r0)
        c[k][1] = c[k][3] = 0.0
        base = np.array([res(1, k), res(3, k)])
        cols = []
        for slot in (1, 3):
            c[k][slot] = 1.0
            cols.append(np.array([res(1, k), res(3, k)]) - base)
            c[k][slot] = 0.0
        c[k][[1, 3]] = np.linalg.solve(np.column_stack(cols), -base)
    return SeriesStart(mu, lam, order, c)


def eval_series(s: SeriesStart, t: float) -> ShapeState:
    """Evaluate the truncated series; rejects offsets beyond its trust radius."""
    dmax = s.truncation_offset()
    if not 0.0 <= t <= dmax:
        raise ValueError(f"t={t} outside the series trust interval [0, {dmax:.3e}]")
    powers = t ** np.arange(s.order + 1)
    return ShapeState.from_array(powers @ s.coefficients)


def series_offset(s: SeriesStart) -> float:
    """Launch offset used for family trajectories (trust radius, <= 1e-2)."""
    return s.truncation_offset()


# -- Dormand-Prince 5(4) ---------------------------------------------------

_DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_DP_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
_DP_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
# difference between 5th and embedded 4th order weights
_DP_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])


def _integrate(field, x0, y0, x1, rtol, atol, max_step=np.inf, project=None, stop=None,
               record_every=1):
    """Adaptive DP54 driver; returns (xs, ys, termination, stats).

    field(x, y) -> dy/dx.  project(y) -> y runs after every accepted
    step (its displacement is logged as drift).  stop(x, y) -> str | None
    is checked after every accepted step; a non-None reason terminates
    with that reason recorded.
    """
    y = np.asarray(y0, dtype=float).copy()
    x = float(x0)
    xs, ys = [x], [y.copy()]
    stats = {"steps": 0, "rejected": 0, "max_drift": 0.0, "error_sum": 0.0}
    f0 = field(x, y)
    scale = atol + rtol * np.abs(y)
    d0 = np.linalg.norm(y / scale) / math.sqrt(y.size)
    d1 = np.linalg.norm(f0 / scale) / math.sqrt(y.size)
    h = min(max_step, x1 - x, 1e-2 * d0 / d1 if d1 > 0 else 1e-6)
    h = max(h, 1e-12)
    termination = REACHED_HORIZON
    since_record = 0
    k = np.zeros((7, y.size))
    while x < x1:
        h = min(h, x1 - x, max_step)
        if h < 1e-13 * max(1.0, abs(x)):
            termination = STEP_FAILURE
            break
        failed = False
        try:
            k[0] = field(x, y)
            for i in range(1, 7):
                yi = y + h * (_DP_A[i] @ k[:i])
                k[i] = field(x + _DP_C[i] * h, yi)
        except (ValueError, ZeroDivisionError, FloatingPointError):
            failed = True
        if not failed:
            y1 = y + h * (_DP_B5 @ k)
            err_vec = h * (_DP_E @ k)
            scale = atol + rtol * np.maximum(np.abs(y), np.abs(y1))
            err = np.linalg.norm(err_vec / scale) / math.sqrt(y.size)
        if failed or not np.all(np.isfinite(y1)) or not np.isfinite(err):
            stats["rejected"] += 1
            h *= 0.2
            continue
        if err > 1.0:
            stats["rejected"] += 1
            h *= max(0.2, 0.9 * err ** -0.2)
            continue
        x += h
        stats["steps"] += 1
        stats["error_sum"] += float(np.max(np.abs(err_vec)))
        if project is not None:
            yp = project(y1)
            stats["max_drift"] = max(stats["max_drift"], float(np.max(np.abs(yp - y1))))
            y1 = yp
        y = y1
        since_record += 1
        if since_record >= record_every or x >= x1:
            xs.append(x)
            ys.append(y.copy())
            since_record = 0
        reason = stop(x, y) if stop is not None else None
        if reason is not None:
            if xs[-1] != x:
                xs.append(x)
                ys.append(y.copy())
            termination = reason
            break
        h *= min(5.0, max(0.2, 0.9 * err ** -0.2)) if err > 0 else 5.0
    if xs[-1] != x:
        xs.append(x)
        ys.append(y.copy())
    return np.array(xs), np.array(ys), termination, stats


# -- trajectory assembly ----------------------------------------------------


def _monitor_block(spheres: np.ndarray, f: np.ndarray) -> np.ndarray:
    rows = []
    for a, fi in zip(spheres, f):
        rows.append(flow.monitors(flow.SphereState.from_array(a), float(fi)).as_array())
    return np.array(rows)


def _shape_trajectory(ts, ys, termination, stats) -> Trajectory:
    shapes = ys[:, :4]
    f = np.linalg.norm(shapes, axis=1)
    spheres = shapes / f[:, None]
    stats = dict(stats)
    stats["u"] = ys[:, 4].copy()
    return Trajectory("t", ts, shapes, spheres, f, _monitor_block(spheres, f),
                      termination, stats)


def integrate_shape(start: ShapeState, t0: float, t1: float, tol: float = 1e-10,
                    atol: float = 1e-12, stride: int = 1, max_step: float = np.inf,
                    u0: float = 0.0) -> Trajectory:
    """Integrate the shape flow from a strictly positive state.

    The sphere parameter u (du = dt / f) rides along as a quadrature
    variable and is exposed in stats["u"].  Terminates early when any
    shape component drops below 1e-9 or the step size collapses; the
    reason is recorded on the trajectory, never silently.
    """
    r = start.as_array()
    if np.any(r <= 0.0):
        raise ValueError(f"start must be strictly positive, got {start}")
    if t1 <= t0:
        raise ValueError("t1 must exceed t0")

    def field(_, y):
        return np.append(flow.velocity(y[:4]), 1.0 / np.linalg.norm(y[:4]))

    def stop(_, y):
        return POSITIVITY_VIOLATION if np.min(y[:4]) < POSITIVITY_FLOOR else None

    ts, ys, term, stats = _integrate(field, t0, np.append(r, u0), t1, tol, atol,
                                     max_step=max_step, stop=stop, record_every=stride)
    return _shape_trajectory(ts, ys, term, stats)


def integrate_sphere(start: flow.SphereState, u0: float, u1: float, f0: float = 1.0,
                     tol: float = 1e-10, atol: float = 1e-12, max_step: float = 0.25,
                     stride: int = 1) -> Trajectory:
    """Integrate the tangential system in u with the scale riding along.

    The state is renormalized to the unit sphere after every accepted
    step (pre-projection drift is logged in stats["max_drift"]);
    d(ln f)/du = <V(S), S> tracks the radial factor from f0.
    """
    if f0 <= 0.0:
        raise ValueError("f0 must be positive")
    a0 = start.as_array()
    if abs(np.linalg.norm(a0) - 1.0) > 1e-9:
        raise ValueError(f"start must be a unit vector, got |S| = {np.linalg.norm(a0)}")

    def field(_, y):
        a = y[:4]
        v = flow.velocity(a)
        beta = float(np.dot(v, a))
        return np.append(v - beta * a, beta)

    def project(y):
        out = y.copy()
        out[:4] /= np.linalg.norm(out[:4])
        return out

    us, ys, term, stats = _integrate(field, u0, np.append(a0, math.log(f0)), u1, tol,
                                     atol, max_step=max_step, project=project,
                                     record_every=stride)
    spheres = ys[:, :4]
    f = np.exp(ys[:, 4])
    return Trajectory("u", us, spheres * f[:, None], spheres, f,
                      _monitor_block(spheres, f), term, dict(stats))


def unstable_direction(mu: float) -> np.ndarray:
    """Unit chart tangent along which trajectories leave the arc J.

    The desingularized field linearizes to [[2, 0, 0], [mu/lam, -2, 0],
    [0, 0, 0]] at (0, 0, mu); the outgoing eigenvector is
    (1, mu/(4 lam), 0) up to scale.
    """
    lam = math.sqrt((1.0 - mu * mu) / 2.0)
    e = np.array([1.0, mu / (4.0 * lam), 0.0])
    return e / np.linalg.norm(e)


def launch_sphere(mu: float, eps: float = 1e-5, u_max: float = 60.0, tol: float = 1e-10,
                  atol: float = 1e-12, max_step: float = 0.25, target=None,
                  conv_tol: float = 1e-6, stride: int = 1) -> Trajectory:
    """Unique sphere trajectory leaving the singular arc at parameter mu.

    Starts at (0, 0, mu) + eps * e_unstable in the chart, integrates the
    desingularized system in v until alpha3 reaches 0.01, then switches
    to the tangential system in u (du = x dv accumulated through the
    first phase).  The scale f rides along via d(ln f) = beta du with
    f = 1 at launch.  The trajectory is run to the u horizon and marked
    converged when it enters and stays within conv_tol of the target
    (default: the limit direction).
    """
    if not 0.0 < mu < 1.0:
        raise ValueError(f"mu must lie in (0, 1), got {mu}")
    if not 0.0 < eps <= 1e-4:
        raise ValueError(f"eps must lie in (0, 1e-4], got {eps}")
    tgt = (target if target is not None else flow.SINF).as_array()

    # phase 1: chart state (x, y, z, u, ln f) in the chart time v
    p0 = np.array([0.0, 0.0, mu]) + eps * unstable_direction(mu)

    def chart_field(_, y):
        p = flow.ChartPoint(y[0], y[1], y[2])
        g = flow.modified_field(p)
        return np.array([g[0], g[1], g[2], y[0], flow.chart_log_scale_rate(p)])

    def chart_stop(_, y):
        return "switch" if y[0] >= CHART_SWITCH_X else None

    vs, cys, term, cstats = _integrate(chart_field, 0.0, np.append(p0, [0.0, 0.0]),
                                       2000.0, tol, atol, stop=chart_stop)
    if term != "switch":
        raise RuntimeError(f"chart phase did not reach the switch threshold ({term})")
    chart_spheres = np.array(
        [flow.chart_to_sphere(flow.ChartPoint(*y[:3])).as_array() for y in cys]
    )
    chart_u = cys[:, 3]
    chart_lnf = cys[:, 4]

    # phase 2: tangential system in u
    u_switch = float(chart_u[-1])
    tail = integrate_sphere(flow.SphereState.from_array(chart_spheres[-1]), u_switch,
                            u_max, f0=float(math.exp(chart_lnf[-1])), tol=tol, atol=atol,
                            max_step=max_step, stride=stride)

    params = np.concatenate([chart_u[:-1], tail.params])
    spheres = np.concatenate([chart_spheres[:-1], tail.spheres])
    f = np.concatenate([np.exp(chart_lnf[:-1]), tail.f])
    shapes = spheres * f[:, None]
    stats = dict(tail.stats)
    stats["chart"] = {"v_span": float(vs[-1]), "steps": cstats["steps"],
                      "u_switch": u_switch}
    traj = Trajectory("u", params, shapes, spheres, f,
                      _monitor_block(spheres, f), tail.termination, stats)
    if traj.termination == REACHED_HORIZON:
        converged, _ = detect_convergence(traj, flow.SphereState.from_array(tgt), conv_tol)
        if converged:
            traj = traj.replace(termination=CONVERGED)
    return traj


def detect_convergence(traj: Trajectory, target=None, tol: float = 1e-6):
    """First parameter value after which the trajectory stays within tol of target.

    Returns (True, parameter) on success, (False, None) when the
    trajectory never enters, or enters but leaves again before its end.
    """
    tgt = (target if target is not None else flow.SINF).as_array()
    dist = np.linalg.norm(traj.spheres - tgt, axis=1)
    # suffix maximum: within tolerance from index i onward
    suffix = np.maximum.accumulate(dist[::-1])[::-1]
    inside = suffix <= tol
    if not inside.any():
        return False, None
    return True, float(traj.params[int(np.argmax(inside))])


def alc_fit(traj: Trajectory, window_fraction: float = 0.5) -> ALCFit:
    """Affine fit of the shape functions over the trailing t-window.

    Certifies the asymptotically conic behaviour: each metric function
    approaches an affine function of t, one of them a constant.
    """
    if traj.kind != "t":
        raise ValueError("asymptotic fit needs a t-parameterized trajectory")
    span = traj.params[-1] - traj.params[0]
    if span < 30.0:
        raise ValueError(f"t horizon {span:.3g} too short for an asymptotic fit")
    if not 0.0 < window_fraction <= 1.0:
        raise ValueError("window_fraction must lie in (0, 1]")
    t_lo = traj.params[-1] - window_fraction * span
    sel = traj.params >= t_lo
    if traj.params[-1] - traj.params[sel][0] < 10.0:
        raise ValueError("fit window shorter than 10 in t")
    ts = traj.params[sel]
    slopes = np.empty(4)
    intercepts = np.empty(4)
    dev = 0.0
    for j in range(4):
        vals = traj.shapes[sel, j]
        slope, intercept = np.polyfit(ts, vals, 1)
        slopes[j] = slope
        intercepts[j] = intercept
        fit = slope * ts + intercept
        # |1 - y/fit| with fit values indistinguishable from zero skipped
        # (an identically zero function deviates by zero from its fit)
        denom = np.where(np.abs(fit) > 1e-12 * max(float(np.max(np.abs(vals))), 1e-300),
                         np.abs(fit), np.inf)
        dev = max(dev, float(np.max(np.abs(vals - fit) / denom)))
    return ALCFit(slopes, intercepts, float(ts[0]), float(ts[-1]), dev)


def escapes_invariant_region(traj: Trajectory) -> bool:
    """True when the wall function G1 = a2 a4 - a1 a3 goes negative.

    Once a trajectory crosses G1 = 0 while G2 > 0 it cannot return
    (d G1 / du = -(2/alpha2) G2 on the wall); such trajectories run to
    the corner alpha2 = alpha3 = alpha4 = 0 and the shape degenerates at
    finite t, so no complete metric arises.
    """
    return bool(np.any(traj.monitor("G1") < 0.0))


def critical_parameter(lo: float = 0.5, hi: float = 0.6, tol: float = 1e-9,
                       t_max: float = 60.0) -> float:
    """Family edge: largest mu whose trajectory stays in the invariant region.

    Below the returned value trajectories converge to the limit
    direction (asymptotically conic with a circle fiber); above it they
    cross the G1 wall and the metric closes up singularly at finite t.
    The critical trajectory itself approaches the conic stationary
    direction S1.  Located by bisection on the wall crossing; the
    bracket must straddle the transition.
    """

    def escapes(mu):
        return escapes_invariant_region(
            family_shape_trajectory(mu, t_max=t_max, tol=1e-12))

    if escapes(lo) or not escapes(hi):
        raise ValueError(f"bracket ({lo}, {hi}) does not straddle the transition")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if escapes(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def family_shape_trajectory(mu: float, t_max: float = 200.0, tol: float = 1e-10,
                            atol: float = 1e-12, order: int = 4, stride: int = 1,
                            max_step: float = np.inf) -> Trajectory:
    """Series launch followed by shape integration: the standard family run.

    The launch offset keeps the series truncation below 1e-12 (safely
    under the integrator tolerance); the sphere parameter u is started
    at its exact value at the offset (quadrature of 1/f over the series).
    """
    s = series_start(mu, order)
    delta = s.truncation_offset(1e-12)
    start = eval_series(s, delta)

    def inv_f(t):
        powers = t ** np.arange(s.order + 1)
        return 1.0 / np.linalg.norm(powers @ s.coefficients)

    u0, _ = quad(inv_f, 0.0, delta, epsabs=1e-14, epsrel=1e-12)
    return integrate_shape(start, delta, t_max, tol=tol, atol=atol, stride=stride,
                           max_step=max_step, u0=u0)
