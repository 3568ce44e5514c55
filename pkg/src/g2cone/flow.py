"""Shape flow of the torsion-free metrics and its decomposition on S^3.

The quadruple R = (A1, A2, B1, B2) evolves by dR/dt = V(R) where V is
degree-0 homogeneous.  Writing R = f S with |S| = 1 splits the flow
into the tangential system dS/du = W(S) = V(S) - <V(S), S> S on the
unit sphere and the radial equations d(ln f)/du = <V(S), S>, dt = f du.

Near the arc J = {(mu, lambda, 0, lambda)} of singular initial shapes
the tangential field has a 1/alpha3 pole; the chart (x, y, z) =
(alpha3, alpha4 - alpha2, alpha1) and the time change du = x dv make
x W a smooth field that vanishes exactly on J.

Also provided: the five discrete symmetries of the flow, the cubic
first integral, and the scalar monitors used to certify the qualitative
behaviour of trajectories (monotone quantities, wall functions, and the
radial log-derivative).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exterior import DerivVector, ShapeState

__all__ = [
    "SphereState",
    "ChartPoint",
    "MonitorVector",
    "S0",
    "S1",
    "SINF",
    "CHART_RADIUS",
    "CHART_MIN_RADICAND",
    "rhs",
    "velocity",
    "first_integral",
    "first_integral_sphere",
    "to_sphere",
    "from_sphere",
    "tangential_field",
    "radial_log_derivative",
    "chart_to_sphere",
    "sphere_to_chart",
    "modified_field",
    "chart_log_scale_rate",
    "apply_symmetry",
    "symmetry",
    "symmetry_group",
    "monitors",
    "MONITOR_NAMES",
]

# chart validity: disc of this radius in (x, y), and enough room under
# the square root to recover alpha2, alpha4
CHART_RADIUS = 0.35
CHART_MIN_RADICAND = 0.05

# denominators smaller than this produce flagged-missing monitor entries
_MONITOR_EPS = 1e-8


@dataclass(frozen=True)
class SphereState:
    """Unit shape direction (alpha1, alpha2, alpha3, alpha4) on S^3."""

    alpha1: float
    alpha2: float
    alpha3: float
    alpha4: float

    def as_array(self) -> np.ndarray:
        return np.array([self.alpha1, self.alpha2, self.alpha3, self.alpha4], dtype=float)

    @staticmethod
    def from_array(a) -> "SphereState":
        return SphereState(float(a[0]), float(a[1]), float(a[2]), float(a[3]))


@dataclass(frozen=True)
class ChartPoint:
    """Coordinates (x, y, z) = (alpha3, alpha4 - alpha2, alpha1) near the arc J."""

    x: float
    y: float
    z: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)

    def radicand(self) -> float:
        return 2.0 - 2.0 * self.x**2 - self.y**2 - 2.0 * self.z**2


@dataclass(frozen=True)
class MonitorVector:
    """Scalar functionals along a trajectory; NaN marks a flagged-missing entry."""

    F: float
    F1: float
    F2: float
    F3: float
    F4: float
    F5: float
    G1: float
    G2: float
    beta: float

    def as_array(self) -> np.ndarray:
        return np.array(
            [self.F, self.F1, self.F2, self.F3, self.F4, self.F5, self.G1, self.G2, self.beta]
        )


MONITOR_NAMES = ("F", "F1", "F2", "F3", "F4", "F5", "G1", "G2", "beta")

# stationary directions of the tangential flow
S1 = SphereState(
    1.0 / (2.0 * math.sqrt(2.0)),
    1.0 / (2.0 * math.sqrt(2.0)),
    math.sqrt(3.0) / (2.0 * math.sqrt(2.0)),
    math.sqrt(3.0) / (2.0 * math.sqrt(2.0)),
)
SINF = SphereState(
    0.0,
    math.sqrt(3.0) / math.sqrt(10.0),
    math.sqrt(2.0) / math.sqrt(5.0),
    math.sqrt(3.0) / math.sqrt(10.0),
)


def S0(mu: float) -> SphereState:
    """Singular-arc point (mu, lambda, 0, lambda) with 2 lambda^2 + mu^2 = 1."""
    if not 0.0 < mu < 1.0:
        raise ValueError(f"mu must lie in (0, 1), got {mu}")
    lam = math.sqrt((1.0 - mu * mu) / 2.0)
    return SphereState(mu, lam, 0.0, lam)


# -- the vector field ---------------------------------------------------


def velocity(r: np.ndarray) -> np.ndarray:
    """V(R): right-hand side of the shape system on a raw 4-vector.

    Defined wherever the denominators A2, B1, B2 are nonzero; A1 never
    divides, so the wall A1 = 0 is inside the domain (and is invariant).
    """
    a1, a2, b1, b2 = r
    if a2 == 0.0 or b1 == 0.0 or b2 == 0.0:
        raise ZeroDivisionError(f"vector field undefined at {tuple(r)}")
    v1 = 0.5 * (a1 * a1 / (a2 * a2) - a1 * a1 / (b2 * b2))
    v2 = 0.5 * ((b2 * b2 - a2 * a2 + b1 * b1) / (b1 * b2) - a1 / a2)
    v3 = (a2 * a2 + b2 * b2 - b1 * b1) / (a2 * b2)
    v4 = 0.5 * ((a2 * a2 - b2 * b2 + b1 * b1) / (a2 * b1) + a1 / b2)
    return np.array([v1, v2, v3, v4])


def rhs(state: ShapeState) -> DerivVector:
    """Torsion-free evolution of the shape (A1, A2, B1, B2)."""
    return DerivVector.from_array(velocity(state.as_array()))


def first_integral(state: ShapeState | np.ndarray) -> float:
    """F = 2 A1 A2 B2 - B1 (B2^2 - A2^2), constant along the flow."""
    r = state.as_array() if isinstance(state, ShapeState) else np.asarray(state, dtype=float)
    a1, a2, b1, b2 = r
    return 2.0 * a1 * a2 * b2 - b1 * (b2 * b2 - a2 * a2)


def first_integral_sphere(s: SphereState) -> float:
    """F restricted to the unit sphere (the cubic scales as f^3)."""
    return first_integral(s.as_array())


# -- radial / tangential split ------------------------------------------


def to_sphere(state: ShapeState) -> tuple:
    """Split R = f S; returns (S, f) with f = |R|."""
    r = state.as_array()
    f = float(np.linalg.norm(r))
    if f == 0.0:
        raise ValueError("cannot project the zero shape to the sphere")
    return SphereState.from_array(r / f), f


def from_sphere(s: SphereState, f: float) -> ShapeState:
    """Rebuild the shape from direction and scale."""
    if f <= 0.0:
        raise ValueError(f"scale must be positive, got {f}")
    return ShapeState.from_array(f * s.as_array())


def _w(alpha: np.ndarray) -> np.ndarray:
    v = velocity(alpha)
    return v - np.dot(v, alpha) * alpha


def tangential_field(s: SphereState) -> np.ndarray:
    """W(S) = V(S) - <V(S), S> S; tangent to the sphere where defined."""
    a = s.as_array()
    if a[1] == 0.0 or a[2] == 0.0 or a[3] == 0.0:
        raise ZeroDivisionError(f"tangential field undefined at {s}")
    return _w(a)


def radial_log_derivative(s: SphereState) -> float:
    """beta = <V(S), S>, the logarithmic growth rate of the scale f."""
    a = s.as_array()
    if a[1] == 0.0 or a[2] == 0.0 or a[3] == 0.0:
        raise ZeroDivisionError(f"radial rate undefined at {s}")
    return float(np.dot(velocity(a), a))


# -- chart around the singular arc J -------------------------------------


def chart_to_sphere(p: ChartPoint) -> SphereState:
    """Recover the sphere point from chart coordinates.

    alpha2 = (sqrt(2 - 2x^2 - y^2 - 2z^2) - y)/2 and alpha4 the same with
    +y; rejects points where the radicand is negative.
    """
    rad = p.radicand()
    if rad < 0.0:
        raise ValueError(f"chart radicand negative at {p}")
    root = math.sqrt(rad)
    return SphereState(p.z, 0.5 * (root - p.y), p.x, 0.5 * (root + p.y))


def sphere_to_chart(s: SphereState) -> ChartPoint:
    """Inverse chart map, valid near J where alpha4 >= alpha2."""
    return ChartPoint(s.alpha3, s.alpha4 - s.alpha2, s.alpha1)


def _check_chart(p: ChartPoint) -> None:
    if p.x * p.x + p.y * p.y > CHART_RADIUS**2:
        raise ValueError(f"chart point {p} outside radius {CHART_RADIUS}")
    if p.radicand() < CHART_MIN_RADICAND:
        raise ValueError(f"chart radicand too small at {p}")


def _desingularized(p: ChartPoint) -> tuple:
    """x W as a smooth 4-vector at the chart point, plus x <V, S>.

    V = Vreg + P / alpha3 with P supported on the (alpha2, alpha4)
    components, so x W = q - <q, S> S with q = x Vreg + P extends
    smoothly through x = 0.  alpha4^2 - alpha2^2 is evaluated as
    y (alpha2 + alpha4), exact near the arc where the difference is tiny.
    """
    s = chart_to_sphere(p)
    a1, a2, a3, a4 = s.alpha1, s.alpha2, s.alpha3, s.alpha4
    x, y = p.x, p.y
    diff24 = y * (a2 + a4)  # alpha4^2 - alpha2^2 without cancellation
    vreg = np.array(
        [
            0.5 * (a1 * a1 / (a2 * a2) - a1 * a1 / (a4 * a4)),
            0.5 * (a3 / a4 - a1 / a2),
            (a2 * a2 + a4 * a4 - a3 * a3) / (a2 * a4),
            0.5 * (a3 / a2 + a1 / a4),
        ]
    )
    pole = np.array([0.0, 0.5 * diff24 / a4, 0.0, -0.5 * diff24 / a2])
    sv = s.as_array()
    q = x * vreg + pole
    xbeta = float(np.dot(q, sv))
    xw = q - xbeta * sv
    return xw, xbeta


def modified_field(p: ChartPoint) -> np.ndarray:
    """Desingularized chart field (x W_x, x W_y, x W_z); vanishes exactly on J."""
    _check_chart(p)
    xw, _ = _desingularized(p)
    return np.array([xw[2], xw[3] - xw[1], xw[0]])


def chart_log_scale_rate(p: ChartPoint) -> float:
    """x <V(S), S>: d(ln f)/dv in the chart time, smooth through x = 0."""
    _check_chart(p)
    _, xbeta = _desingularized(p)
    return xbeta


# -- discrete symmetries --------------------------------------------------

# (signed permutation on (a1..a4), parameter reversal u -> -u)
_SYMMETRIES = {
    1: (np.array([[-1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0], [0, 1, 0, 0]], dtype=float), False),
    2: (np.diag([-1.0, 1.0, 1.0, -1.0]), True),
    3: (np.diag([-1.0, -1.0, 1.0, 1.0]), True),
    4: (np.diag([1.0, 1.0, -1.0, -1.0]), False),
    5: (np.diag([1.0, -1.0, -1.0, 1.0]), False),
}


def symmetry(k: int) -> tuple:
    """The k-th discrete symmetry (matrix, reverses_parameter), k = 1..5."""
    if k not in _SYMMETRIES:
        raise IndexError(f"symmetry index must be 1..5, got {k}")
    return _SYMMETRIES[k]


def apply_symmetry(obj, k: int):
    """Apply symmetry k to a SphereState or to a sphere trajectory.

    For trajectories the parameter axis is negated and the sample order
    reversed when the symmetry includes u -> -u; the scale f is carried
    along unchanged (signed permutations preserve |R|) and the monitors
    are recomputed on the transformed samples.
    """
    mat, reverse = symmetry(k)
    if isinstance(obj, SphereState):
        return SphereState.from_array(mat @ obj.as_array())
    # duck-typed trajectory: params, spheres, f, shapes, monitors arrays
    spheres = obj.spheres @ mat.T
    params = obj.params
    f = obj.f
    if reverse:
        spheres = spheres[::-1].copy()
        f = f[::-1].copy()
        params = (-params)[::-1].copy()
    mon = np.array([monitors(SphereState.from_array(a), float(fi)).as_array()
                    for a, fi in zip(spheres, f)])
    return obj.replace(params=params, spheres=spheres, f=f,
                       shapes=spheres * f[:, None], monitors=mon)


def symmetry_group() -> list:
    """Closure of the five symmetries under composition.

    Elements are (matrix, reversal) pairs; the group is finite since the
    matrices are signed permutations.
    """
    seen = {}
    frontier = [(np.eye(4), False)]
    seen[(tuple(np.eye(4).astype(int).ravel()), False)] = (np.eye(4), False)
    while frontier:
        mat, rev = frontier.pop()
        for k in _SYMMETRIES:
            gmat, grev = _SYMMETRIES[k]
            nmat, nrev = gmat @ mat, grev ^ rev
            key = (tuple(nmat.astype(int).ravel()), nrev)
            if key not in seen:
                seen[key] = (nmat, nrev)
                frontier.append((nmat, nrev))
    return list(seen.values())


# -- monitors --------------------------------------------------------------


def monitors(s: SphereState, f: float) -> MonitorVector:
    """All scalar monitors at (S, f); entries at singular loci come back NaN.

    A denominator within 1e-8 of zero means the value would be numerical
    noise (this happens by construction at the endpoints of the family
    trajectories), so it is reported missing instead.
    """
    a1, a2, a3, a4 = s.alpha1, s.alpha2, s.alpha3, s.alpha4
    nan = float("nan")
    fs = first_integral_sphere(s)
    f_int = f**3 * fs

    d24 = (a4 - a2) * (a4 + a2)  # alpha4^2 - alpha2^2, factored
    f1 = a1 * a2 * a4 / fs if abs(fs) > _MONITOR_EPS else nan

    f2 = nan
    if min(abs(a1), abs(a4 - a2)) > _MONITOR_EPS and abs(a2 * a4) > _MONITOR_EPS:
        arg = a3 * d24 / (a4 * a2 * a1)
        f2 = math.log(arg) if arg > 0.0 else nan

    f3 = math.log(a2 / a4) if a2 > _MONITOR_EPS and a4 > _MONITOR_EPS else nan
    f4 = a3 / a4 if abs(a4) > _MONITOR_EPS else nan
    f5 = a4 * a4 - a3 * a3
    g1 = a2 * a4 - a1 * a3
    g2 = a1 * a4 - a2 * a3
    try:
        beta = radial_log_derivative(s)
    except ZeroDivisionError:
        beta = nan
    return MonitorVector(f_int, f1, f2, f3, f4, f5, g1, g2, beta)
