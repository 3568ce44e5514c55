import math

import numpy as np
import pytest

from g2cone import flow, shoot
from g2cone.analysis import closed_form, dr_dt
from g2cone.exterior import ShapeState
from helpers import central_derivative, hermite_sample

SQ3 = math.sqrt(3.0)


# -- the vector field ----------------------------------------------------------


def test_rhs_unit_state():
    assert np.allclose(flow.rhs(ShapeState(1, 1, 1, 1)).as_array(), [0, 0, 1, 1], atol=0)


def test_rhs_matches_bgg_chain_rule():
    # d/dt of the asymmetric closed form at r = 3 via dt = dr / A1
    # (h balances truncation against rounding in the central difference)
    r, h = 3.0, 1e-5
    drdr = (closed_form("bgg", r + h).as_array()
            - closed_form("bgg", r - h).as_array()) / (2 * h)
    expected = drdr * dr_dt("bgg", r)
    got = flow.rhs(closed_form("bgg", r)).as_array()
    assert np.max(np.abs(got - expected)) <= 1e-10


def test_rhs_degree_zero_homogeneity():
    rng = np.random.default_rng(2)
    for _ in range(20):
        r = rng.uniform(0.2, 4.0, size=4)
        assert np.allclose(flow.velocity(2.0 * r), flow.velocity(r), rtol=0, atol=1e-13)


def test_rhs_rejects_zero_denominators():
    with pytest.raises(ZeroDivisionError):
        flow.velocity(np.array([1.0, 0.0, 1.0, 1.0]))
    with pytest.raises(ZeroDivisionError):
        flow.velocity(np.array([1.0, 1.0, 0.0, 1.0]))
    # A1 = 0 is inside the domain (the wall is invariant: V1 = 0 there)
    v = flow.velocity(np.array([0.0, 1.0, 1.0, 1.0]))
    assert v[0] == 0.0


# -- first integral -------------------------------------------------------------


def test_first_integral_at_singular_orbit():
    for mu in (0.2, 0.5, 0.8):
        lam = math.sqrt((1 - mu**2) / 2)
        assert flow.first_integral(ShapeState(mu, lam, 0.0, lam)) == pytest.approx(
            2 * mu * lam**2, abs=1e-15)


def test_first_integral_on_closed_forms():
    # the cubic cancels r^3-sized terms, so the float error grows ~ r^3 eps
    for r in (1.6, 2.5, 7.0, 30.0):
        assert flow.first_integral(closed_form("bs", r)) == pytest.approx(
            -1.0 / (3.0 * SQ3), abs=1e-9)
    for r in (2.4, 3.0, 10.0, 40.0):
        assert flow.first_integral(closed_form("bgg", r)) == pytest.approx(
            -27.0 / 8.0, abs=1e-9)
    for r in (0.5, 1.0, 5.0):
        assert flow.first_integral(closed_form("singular", r)) == pytest.approx(
            1.0 / (3.0 * SQ3), abs=1e-9)


def test_first_integral_conserved_along_trajectory(family_shapes):
    for mu in (0.2, 0.5):
        F = family_shapes[mu].monitor("F")
        assert np.max(np.abs(F - F[0])) <= 1e-8 * max(1.0, abs(F[0]))


# -- radial / tangential split ----------------------------------------------------


def test_to_sphere_normalization():
    s, f = flow.to_sphere(ShapeState(1, 1, 1, 1))
    assert f == pytest.approx(2.0, abs=0)
    assert np.allclose(s.as_array(), 0.5)


def test_sphere_round_trip():
    rng = np.random.default_rng(9)
    for _ in range(20):
        state = ShapeState(*rng.uniform(0.1, 5.0, size=4))
        s, f = flow.to_sphere(state)
        back = flow.from_sphere(s, f)
        assert np.max(np.abs(back.as_array() - state.as_array())) <= 1e-15 * f


def test_singular_orbit_is_unit():
    s, f = flow.to_sphere(ShapeState(*flow.S0(0.3).as_array()))
    assert f == pytest.approx(1.0, abs=1e-15)
    assert s.alpha3 == 0.0


def test_to_sphere_rejects_zero():
    with pytest.raises(ValueError):
        flow.to_sphere(ShapeState(0, 0, 0, 0))
    with pytest.raises(ValueError):
        flow.from_sphere(flow.SINF, 0.0)


def test_tangential_field_vanishes_at_stationary_points():
    assert np.linalg.norm(flow.tangential_field(flow.S1)) <= 1e-12
    assert np.linalg.norm(flow.tangential_field(flow.SINF)) <= 1e-12


def test_tangential_field_orthogonal_to_state():
    rng = np.random.default_rng(4)
    for _ in range(30):
        a = rng.uniform(0.05, 1.0, size=4)
        a /= np.linalg.norm(a)
        s = flow.SphereState.from_array(a)
        assert abs(np.dot(flow.tangential_field(s), a)) <= 1e-13


def test_radial_log_derivative_values():
    assert flow.radial_log_derivative(flow.SINF) == pytest.approx(
        math.sqrt(10.0) / 3.0, abs=1e-14)
    # V is parallel to S at the conic point with rate 2 sqrt(2) / 3
    assert flow.radial_log_derivative(flow.S1) == pytest.approx(
        2.0 * math.sqrt(2.0) / 3.0, abs=1e-14)


def test_radial_rate_scale_invariant():
    rng = np.random.default_rng(14)
    for _ in range(10):
        a = rng.uniform(0.1, 1.0, size=4)
        a /= np.linalg.norm(a)
        for c in (2.0, 0.25):
            assert np.dot(flow.velocity(c * a), a) == pytest.approx(
                np.dot(flow.velocity(a), a), abs=1e-13)


# -- chart ---------------------------------------------------------------------


def test_chart_to_sphere_on_arc():
    for mu in (0.2, 0.5, 0.8):
        lam = math.sqrt((1 - mu**2) / 2)
        s = flow.chart_to_sphere(flow.ChartPoint(0.0, 0.0, mu))
        assert np.allclose(s.as_array(), [mu, lam, 0.0, lam], atol=1e-15)


def test_chart_origin_is_midpoint():
    s = flow.chart_to_sphere(flow.ChartPoint(0.0, 0.0, 0.0))
    assert np.allclose(s.as_array(), [0.0, 1 / math.sqrt(2), 0.0, 1 / math.sqrt(2)],
                       atol=1e-16)


def test_chart_round_trip():
    rng = np.random.default_rng(8)
    count = 0
    while count < 100:
        p = flow.ChartPoint(*rng.uniform(-0.2, 0.2, size=2), rng.uniform(0.0, 0.9))
        if p.radicand() < 0.05:
            continue
        count += 1
        s = flow.chart_to_sphere(p)
        q = flow.sphere_to_chart(s)
        assert np.max(np.abs(q.as_array() - p.as_array())) <= 1e-14
        back = flow.chart_to_sphere(q)
        assert np.max(np.abs(back.as_array() - s.as_array())) <= 1e-14


def test_chart_rejects_negative_radicand():
    with pytest.raises(ValueError):
        flow.chart_to_sphere(flow.ChartPoint(0.4, 0.2, 0.95))


def test_modified_field_vanishes_exactly_on_arc():
    for mu in (0.1, 0.5, 0.9):
        assert np.all(flow.modified_field(flow.ChartPoint(0.0, 0.0, mu)) == 0.0)


def test_modified_field_matches_direct_xw_off_arc():
    # away from x = 0 the desingularized field is literally x W in chart parts
    rng = np.random.default_rng(12)
    for _ in range(20):
        p = flow.ChartPoint(rng.uniform(0.05, 0.25), rng.uniform(-0.1, 0.1),
                            rng.uniform(0.1, 0.8))
        if p.radicand() < 0.05:
            continue
        s = flow.chart_to_sphere(p)
        w = flow.tangential_field(s)
        expected = p.x * np.array([w[2], w[3] - w[1], w[0]])
        assert np.max(np.abs(flow.modified_field(p) - expected)) <= 1e-12


def test_modified_field_rejects_outside_chart():
    with pytest.raises(ValueError):
        flow.modified_field(flow.ChartPoint(0.4, 0.0, 0.5))


def test_chart_log_scale_rate_matches_x_beta():
    p = flow.ChartPoint(0.12, 0.03, 0.4)
    s = flow.chart_to_sphere(p)
    assert flow.chart_log_scale_rate(p) == pytest.approx(
        p.x * flow.radial_log_derivative(s), abs=1e-13)


# -- symmetries -------------------------------------------------------------------


def test_symmetry_examples():
    s = flow.SphereState(0.1, 0.2, 0.3, 0.4)
    assert np.allclose(flow.apply_symmetry(s, 1).as_array(), [-0.1, 0.4, 0.3, 0.2])
    assert np.allclose(flow.apply_symmetry(s, 4).as_array(), [0.1, 0.2, -0.3, -0.4])


def test_symmetry_four_is_involution():
    s = flow.SphereState(0.3, -0.1, 0.7, 0.2)
    twice = flow.apply_symmetry(flow.apply_symmetry(s, 4), 4)
    assert np.allclose(twice.as_array(), s.as_array(), atol=0)


def test_symmetry_index_range():
    with pytest.raises(IndexError):
        flow.symmetry(0)
    with pytest.raises(IndexError):
        flow.apply_symmetry(flow.SINF, 6)


def test_field_equivariance_all_symmetries():
    rng = np.random.default_rng(6)
    for k in range(1, 6):
        mat, rev = flow.symmetry(k)
        sign = -1.0 if rev else 1.0
        for _ in range(20):
            a = rng.uniform(0.1, 1.0, size=4)
            a /= np.linalg.norm(a)
            lhs = flow._w(mat @ a)
            rhs = sign * (mat @ flow._w(a))
            assert np.max(np.abs(lhs - rhs)) <= 1e-13


def test_trajectory_equivariance():
    """Integrating a transformed start reproduces the transformed trajectory.

    Time-reversing symmetries are checked against the backward
    integration; resampling uses cubic Hermite interpolation with the
    exact field values at the samples.
    """
    # a point on the mu = 0.4 family path: the flow is well conditioned
    # along it and along all its symmetry images
    base = shoot.launch_sphere(0.4, u_max=2.0)
    start = flow.SphereState.from_array(base.spheres[-1])
    span = 1.5

    def run(s0, backward=False):
        a0 = s0.as_array()
        if not backward:
            return shoot.integrate_sphere(s0, 0.0, span, tol=1e-12, max_step=0.02)
        # integrate the reversed field and flip the parameter afterwards
        import g2cone.shoot as sh

        def field(_, y):
            a = y[:4]
            v = -flow.velocity(a)
            beta = float(np.dot(v, a))
            return np.append(v - beta * a, beta)

        def project(y):
            out = y.copy()
            out[:4] /= np.linalg.norm(out[:4])
            return out

        us, ys, term, stats = sh._integrate(field, 0.0, np.append(a0, 0.0), span,
                                            1e-12, 1e-12, max_step=0.02,
                                            project=project)
        return us, ys[:, :4]

    fwd = run(start)
    fwd_w = np.array([flow._w(a) for a in fwd.spheres])
    for k in range(1, 6):
        mat, rev = flow.symmetry(k)
        image = flow.SphereState.from_array(mat @ start.as_array())
        if not rev:
            other = shoot.integrate_sphere(image, 0.0, span, tol=1e-12, max_step=0.02)
        else:
            us, ys = run(image, backward=True)

            class Back:
                params = us
                spheres = ys

            other = Back()
            other_w = np.array([-flow._w(a) for a in ys])
        ref_w = np.array([flow._w(a) for a in np.atleast_2d(other.spheres)])
        if rev:
            ref_w = other_w
        for u in np.linspace(0.1, span - 0.1, 7):
            mine = hermite_sample(fwd.params, fwd.spheres, fwd_w, u)
            theirs = hermite_sample(np.asarray(other.params),
                                    np.asarray(other.spheres), ref_w, u)
            assert np.max(np.abs(mat @ mine - theirs)) <= 1e-8, f"symmetry {k}"


# -- monitors ----------------------------------------------------------------------


def test_monitors_at_singular_orbit():
    mu = 0.4
    lam = math.sqrt((1 - mu**2) / 2)
    m = flow.monitors(flow.S0(mu), 1.0)
    assert m.G1 == pytest.approx(lam**2, abs=1e-16)
    assert m.G2 == pytest.approx(mu * lam, abs=1e-16)
    assert m.F5 == pytest.approx(lam**2, abs=1e-16)
    assert m.F == pytest.approx(2 * mu * lam**2, abs=1e-16)
    assert m.F4 == 0.0
    assert math.isnan(m.F2)  # alpha4 - alpha2 = 0: singular locus
    assert math.isnan(m.beta)  # alpha3 = 0


def test_monitors_at_conic_point():
    m = flow.monitors(flow.S1, 1.0)
    assert m.G1 == 0.0
    assert m.G2 == 0.0
    assert m.F5 == 0.0


def test_monitors_at_limit_direction():
    m = flow.monitors(flow.SINF, 1.0)
    assert m.F4 == pytest.approx(2.0 / SQ3, abs=1e-15)
    assert m.F5 == pytest.approx(-0.1, abs=1e-15)
    assert math.isnan(m.F1)  # the cubic denominator vanishes here
    assert math.isnan(m.F2)


def test_wall_derivative_identities():
    """dG1/du = -(2/alpha2) G2 on {G1=0}, and symmetrically for G2."""
    rng = np.random.default_rng(7)
    for _ in range(50):
        a1, a3, a4 = rng.uniform(0.2, 1.0, size=3)
        a = np.array([a1, a1 * a3 / a4, a3, a4])
        a /= np.linalg.norm(a)
        w = flow._w(a)
        dg1 = w[1] * a[3] + a[1] * w[3] - w[0] * a[2] - a[0] * w[2]
        g2 = a[0] * a[3] - a[1] * a[2]
        assert abs(dg1 + 2.0 / a[1] * g2) <= 1e-8

        a2, a3, a4 = rng.uniform(0.2, 1.0, size=3)
        a = np.array([a2 * a3 / a4, a2, a3, a4])
        a /= np.linalg.norm(a)
        w = flow._w(a)
        dg2 = w[0] * a[3] + a[0] * w[3] - w[1] * a[2] - a[1] * w[2]
        g1 = a[1] * a[3] - a[0] * a[2]
        assert abs(dg2 + 2.0 / a[1] * g1) <= 1e-8


def test_monotone_relations_along_trajectory():
    """The growth rates of F1 and F2 match their closed forms on samples.

    dF1/du = a1 a3 / Fs holds as printed; the F2 rate is
    Fs / (a2 a4 (a4^2 - a2^2)) -- twice the commonly quoted value, as an
    analytic gradient computation confirms (the sign, which is all the
    monotonicity argument needs, is unaffected).  Checked away from the
    launch point with a high-order central difference in u.
    """
    traj = shoot.family_shape_trajectory(0.5, t_max=3.0, tol=1e-12, max_step=0.002)
    u = traj.stats["u"]
    f1 = traj.monitor("F1")
    f2 = traj.monitor("F2")
    S = traj.spheres
    fs = np.array([flow.first_integral_sphere(flow.SphereState.from_array(a)) for a in S])
    sel = np.nonzero((u > 0.3) & (u < u[-1] - 0.05))[0]
    worst2 = worst3 = 0.0
    for i in sel[::5]:
        a1, a2, a3, a4 = S[i]
        d1 = central_derivative(u, f1, i)
        d2 = central_derivative(u, f2, i)
        worst2 = max(worst2, abs(d1 - a1 * a3 / fs[i]))
        worst3 = max(worst3, abs(d2 - fs[i] / (a4 * a2 * (a4**2 - a2**2))))
    assert worst2 <= 1e-6
    assert worst3 <= 1e-6


def test_relation_f2_rate_pointwise():
    # analytic-gradient confirmation of the F2 rate used above
    rng = np.random.default_rng(31)
    for _ in range(20):
        a = rng.uniform(0.15, 1.0, size=4)
        a[3] = a[1] + rng.uniform(0.05, 0.5)
        a /= np.linalg.norm(a)
        a1, a2, a3, a4 = a
        v = flow.velocity(a)
        lhs = (v[2] / a3 + 2 * (a4 * v[3] - a2 * v[1]) / (a4**2 - a2**2)
               - v[3] / a4 - v[1] / a2 - v[0] / a1)
        rhs = flow.first_integral(a) / (a2 * a4 * (a4**2 - a2**2))
        assert abs(lhs - rhs) <= 1e-10 * max(1.0, abs(rhs))


def test_relation_f3_on_invariant_wall():
    # exact on {alpha1 = 0} (which contains the locus alpha2 = alpha4 used
    # at the limit): d/du ln(alpha2/alpha4) = (a4^2 - a2^2)/(a2 a3 a4)
    rng = np.random.default_rng(21)
    for _ in range(30):
        a2, a3, a4 = rng.uniform(0.2, 1.0, size=3)
        a = np.array([0.0, a2, a3, a4])
        a /= np.linalg.norm(a)
        w = flow._w(a)
        lhs = w[1] / a[1] - w[3] / a[3]
        rhs = (a[3] ** 2 - a[1] ** 2) / (a[1] * a[2] * a[3])
        assert abs(lhs - rhs) <= 1e-13


def test_relation_f4_on_arc_locus():
    # on {alpha1 = 0, alpha2 = alpha4}: d/du (a3/a4) factors through 2/sqrt(3)
    rng = np.random.default_rng(22)
    for _ in range(30):
        a, x = rng.uniform(0.2, 1.0, size=2)
        v = np.array([0.0, a, x, a])
        v /= np.linalg.norm(v)
        w = flow._w(v)
        lhs = w[2] / v[3] - v[2] * w[3] / v[3] ** 2
        rhs = 1.5 / v[3] * (2 / SQ3 + v[2] / v[3]) * (2 / SQ3 - v[2] / v[3])
        assert abs(lhs - rhs) <= 1e-13


def test_apply_symmetry_to_trajectory():
    base = shoot.launch_sphere(0.3, u_max=5.0)
    for k, reverse in ((4, False), (2, True)):
        image = flow.apply_symmetry(base, k)
        mat, _ = flow.symmetry(k)
        if reverse:
            assert np.all(np.diff(image.params) > 0)
            assert image.params[0] == -base.params[-1]
            assert np.allclose(image.spheres[0], mat @ base.spheres[-1], atol=0)
            assert image.f[0] == base.f[-1]
        else:
            assert np.allclose(image.params, base.params, atol=0)
            assert np.allclose(image.spheres, base.spheres @ mat.T, atol=0)
        # shapes stay consistent with the transported scale
        assert np.allclose(image.shapes, image.spheres * image.f[:, None], atol=0)
        # scalar monitors built from squares are preserved under k = 4
        if not reverse:
            assert np.allclose(image.monitor("F5"), base.monitor("F5"), atol=1e-15)


def test_symmetry_group_closure():
    group = flow.symmetry_group()
    assert len(group) == 16
    assert sum(1 for _, rev in group if rev) == 8
    # closed under composition
    mats = {tuple(m.astype(int).ravel()) for m, _ in group}
    for m1, _ in group:
        for m2, _ in group:
            assert tuple((m1 @ m2).astype(int).ravel()) in mats
