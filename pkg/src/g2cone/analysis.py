"""Stationary directions, linearizations, closed-form solution oracles.

The tangential flow has exactly two stationary directions up to the
discrete symmetries: the conic point S1 (where the two classical
explicit solutions meet the sphere) and the limit direction S_inf of
the one-parameter family.  This module catalogues them, linearizes the
sphere flow and the desingularized chart flow around them, and wraps
the three classical closed-form solutions together with the r -> t
reparameterization so they can serve as exact oracles for the
integrator and the flow field.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from . import flow
from .exterior import ShapeState

__all__ = [
    "StationaryReport",
    "ClosedFormCurve",
    "EigenResidualError",
    "CLOSED_FORM_KINDS",
    "stationary_points",
    "tangent_basis",
    "linearize",
    "eig_small",
    "closed_form",
    "closed_form_domain",
    "dr_dt",
    "r_to_t",
    "verify_solution",
    "S1_EIGENVALUES",
    "CHART_EIGENVALUES",
]

# closed forms of the tangential eigenvalues at S1 (simple, all real)
S1_EIGENVALUES = (
    -2.0 * math.sqrt(2.0),
    -7.0 * math.sqrt(2.0) / 3.0 - math.sqrt(290.0) / 3.0,
    -7.0 * math.sqrt(2.0) / 3.0 + math.sqrt(290.0) / 3.0,
)

# eigenvalues of the desingularized chart field on the singular arc;
# independent of mu
CHART_EIGENVALUES = (2.0, -2.0, 0.0)


class EigenResidualError(RuntimeError):
    """Eigenpairs could not be certified to the requested residual."""


@dataclass
class StationaryReport:
    """A stationary direction of the sphere flow with optional eigendata."""

    point: flow.SphereState
    name: str
    orbit_size: int
    eigenvalues: np.ndarray | None = None
    eigenvectors: np.ndarray | None = None  # rows are tangent 4-vectors
    classification: tuple | None = None  # counts (negative, zero, positive)
    field_residual: float = field(default=0.0)


@dataclass(frozen=True)
class ClosedFormCurve:
    """One of the classical explicit solutions, parameterized by r."""

    kind: str
    r_min: float
    r_min_open: bool

    def state(self, r: float) -> ShapeState:
        return closed_form(self.kind, r)

    def t(self, r: float) -> float:
        return r_to_t(self.kind, r)


CLOSED_FORM_KINDS = ("bgg", "bs", "singular")


# -- stationary directions --------------------------------------------------


def _orbit_size(point: np.ndarray) -> int:
    images = set()
    for mat, _ in flow.symmetry_group():
        images.add(tuple(np.round(mat @ point, 12)))
    return len(images)


def stationary_points(with_eigendata: bool = False) -> list:
    """The stationary directions S1 and S_inf of the tangential flow.

    Each satisfies V(S) parallel to S; the report records the residual
    |W(S)| and the size of the orbit under the discrete symmetry group.
    With eigendata requested, the tangential linearization is attached.
    """
    reports = []
    for name, s in (("S1", flow.S1), ("Sinf", flow.SINF)):
        res = float(np.linalg.norm(flow.tangential_field(s)))
        rep = StationaryReport(point=s, name=name, orbit_size=_orbit_size(s.as_array()),
                               field_residual=res)
        if with_eigendata:
            jac = linearize(s, "tangential")
            w, v = eig_small(jac)
            basis = tangent_basis(s.as_array())
            rep.eigenvalues = w
            rep.eigenvectors = np.array([basis.T @ v[:, i] for i in range(len(w))])
            re = w.real
            rep.classification = (int(np.sum(re < -1e-8)), int(np.sum(np.abs(re) <= 1e-8)),
                                  int(np.sum(re > 1e-8)))
        reports.append(rep)
    return reports


def tangent_basis(s: np.ndarray) -> np.ndarray:
    """Deterministic orthonormal basis of the tangent space at s on S^3."""
    basis = []
    for i in np.argsort(np.abs(s)):  # start away from the dominant component
        e = np.zeros(4)
        e[i] = 1.0
        v = e - np.dot(e, s) * s
        for b in basis:
            v -= np.dot(v, b) * b
        n = np.linalg.norm(v)
        if n > 1e-8:
            basis.append(v / n)
        if len(basis) == 3:
            break
    return np.array(basis)


_FD_STEP = 1e-6


def linearize(point, system: str) -> np.ndarray:
    """Jacobian of the chosen flow at a stationary point, by central differences.

    system="tangential": the degree-0 extension W(R/|R|) differentiated
    at a SphereState and expressed in an orthonormal tangent basis
    (3 x 3; eigenvalues are basis independent).
    system="modified-chart": the Jacobian of the desingularized chart
    field at a ChartPoint on the singular arc.
    Rejects points where the respective field is not below 1e-8.
    """
    if system == "tangential":
        s = point.as_array()
        if np.linalg.norm(flow.tangential_field(point)) > 1e-8:
            raise ValueError(f"{point} is not stationary for the tangential flow")
        basis = tangent_basis(s)

        def w_ext(r):
            return flow._w(r / np.linalg.norm(r))

        jac = np.empty((3, 3))
        for j in range(3):
            fp = w_ext(s + _FD_STEP * basis[j])
            fm = w_ext(s - _FD_STEP * basis[j])
            jac[:, j] = basis @ ((fp - fm) / (2.0 * _FD_STEP))
        return jac
    if system == "modified-chart":
        p = point.as_array()
        if np.linalg.norm(flow.modified_field(point)) > 1e-8:
            raise ValueError(f"{point} is not stationary for the chart flow")
        jac = np.empty((3, 3))
        for j in range(3):
            dp = np.zeros(3)
            dp[j] = _FD_STEP
            fp = flow.modified_field(flow.ChartPoint(*(p + dp)))
            fm = flow.modified_field(flow.ChartPoint(*(p - dp)))
            jac[:, j] = (fp - fm) / (2.0 * _FD_STEP)
        return jac
    raise ValueError(f"unknown system {system!r}")


def eig_small(m: np.ndarray):
    """Eigenpairs of a small (n <= 4) dense matrix with certified residuals.

    Returns (values, vectors) sorted by (real, imag) part; raises
    EigenResidualError when any |M v - w v| exceeds 1e-8 ||M||.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] > 4:
        raise ValueError(f"need a square matrix of size <= 4, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix entries must be finite")
    w, v = np.linalg.eig(m)
    order = np.lexsort((w.imag, w.real))
    w, v = w[order], v[:, order]
    norm = np.linalg.norm(m)
    for i in range(len(w)):
        res = np.linalg.norm(m @ v[:, i] - w[i] * v[:, i])
        if res > 1e-8 * max(norm, 1.0):
            raise EigenResidualError(
                f"eigenpair residual {res:.3e} exceeds tolerance (defective matrix?)")
    return w, v


# -- classical closed-form solutions ----------------------------------------


def closed_form_domain(kind: str) -> tuple:
    """(r_min, open) for the parameter domain of each closed form."""
    if kind == "bgg":
        return 9.0 / 4.0, False
    if kind == "bs":
        return 1.0, True
    if kind == "singular":
        return 0.0, True
    raise ValueError(f"unknown closed form kind {kind!r}")


def _check_domain(kind: str, r: float) -> None:
    r_min, open_end = closed_form_domain(kind)
    if r < r_min or (open_end and r == r_min):
        raise ValueError(f"r={r} outside the {kind} domain "
                         f"({'(' if open_end else '['}{r_min}, inf)")


def closed_form(kind: str, r: float) -> ShapeState:
    """Shape of the classical solutions at radius r.

    kind="bgg": the asymmetric explicit solution with B1 = 2r/3;
    kind="bs": the round solution with A = (r/3) sqrt(1 - r^-3);
    kind="singular": its formal r -> -r image, sqrt(1 + r^-3), which
    never closes smoothly at the origin.
    """
    _check_domain(kind, r)
    if kind == "bgg":
        a1 = math.sqrt((r - 2.25) * (r + 2.25) / ((r - 0.75) * (r + 0.75)))
        a2 = math.sqrt((r + 0.75) * (r - 2.25) / 3.0)
        b1 = 2.0 * r / 3.0
        b2 = math.sqrt((r - 0.75) * (r + 2.25) / 3.0)
        return ShapeState(a1, a2, b1, b2)
    sign = -1.0 if kind == "bs" else 1.0
    a = (r / 3.0) * math.sqrt(1.0 + sign * r**-3)
    b = r / math.sqrt(3.0)
    return ShapeState(a, a, b, b)


def dr_dt(kind: str, r: float) -> float:
    """dr/dt along each closed form: the metric's radial lapse.

    For the asymmetric solution dt = dr / A1(r); the two round solutions
    carry dt^2 = dr^2 / (1 -+ r^-3) in their metric normal form.
    """
    _check_domain(kind, r)
    if kind == "bgg":
        return closed_form(kind, r).A1
    sign = -1.0 if kind == "bs" else 1.0
    return math.sqrt(1.0 + sign * r**-3)


# t-origins: the bgg cone tip is r = 9/4; the bs bolt is r = 1; the
# singular solution has no smooth closure, so t(1) = 0 is a convention
_T_ORIGIN = {"bgg": 2.25, "bs": 1.0, "singular": 1.0}


def r_to_t(kind: str, r: float) -> float:
    """Arc-length parameter t(r) = integral of 1/(dr/dt), strictly increasing.

    The integrand has an integrable 1/sqrt endpoint singularity at the
    bgg and bs origins; substituting r = r0 + s^2 removes it, so the
    quadrature sees a smooth integrand throughout.
    """
    _check_domain(kind, r)
    r0 = _T_ORIGIN[kind]
    if r == r0:
        return 0.0
    if kind == "singular":
        val, err = quad(lambda rr: 1.0 / dr_dt(kind, rr), r0, r,
                        epsabs=1e-14, epsrel=1e-12, limit=200)
    else:
        # t = int 2 s ds / g(r0 + s^2); g ~ c s at the origin, so the
        # integrand extends continuously to s = 0 (evaluated just off it)
        def integrand(s):
            # keep s^2 above the rounding floor of r0 so the lapse is nonzero
            s = max(s, 1e-7)
            return 2.0 * s / dr_dt(kind, r0 + s * s)

        s_hi = math.sqrt(r - r0)
        val, err = quad(integrand, 0.0, s_hi, epsabs=1e-14, epsrel=1e-12, limit=200)
    if abs(err) > 1e-9 * max(1.0, abs(val)):
        raise RuntimeError(f"quadrature error {err:.2e} too large for t({r})")
    return val


def verify_solution(kind: str, r_samples) -> dict:
    """Exactness report for a closed form along the flow equations.

    At each sample the r-derivative of the shape (central differences,
    step 1e-6 r) is converted to a t-derivative through dr/dt and
    compared with the flow field; the first integral is checked for
    constancy.  Mismatch is max |delta_i| / max(1, |V_i|) over samples.
    """
    r_samples = np.asarray(r_samples, dtype=float)
    worst = 0.0
    fvals = []
    for r in r_samples:
        _check_domain(kind, r)
        h = 1e-6 * r
        dr = (closed_form(kind, r + h).as_array()
              - closed_form(kind, r - h).as_array()) / (2.0 * h)
        dt_deriv = dr * dr_dt(kind, r)
        v = flow.velocity(closed_form(kind, r).as_array())
        worst = max(worst, float(np.max(np.abs(dt_deriv - v) / np.maximum(1.0, np.abs(v)))))
        fvals.append(flow.first_integral(closed_form(kind, r)))
    fvals = np.array(fvals)
    return {
        "kind": kind,
        "max_mismatch": worst,
        "F_mean": float(np.mean(fvals)),
        "F_spread": float(np.max(fvals) - np.min(fvals)),
        "n_samples": int(len(r_samples)),
    }
