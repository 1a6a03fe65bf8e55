import numpy as np
import pytest

import oracles
from deltashell import estimates as es
from deltashell.geometry import circle, segment, sphere
from deltashell.kernels import green_radial

# closed form 2 (1 - exp(-kappa h / 2)) / kappa^2 at kappa = 2, h = 0.1, frozen
SHIFT_3D_K2_H01 = 0.04758129098202021


def test_shift_difference_integral_against_closed_form():
    assert oracles.shift_difference_closed_form(2.0, 0.1) == pytest.approx(SHIFT_3D_K2_H01, rel=1e-14)
    for kappa, h in ((2.0, 0.1), (1.0, 0.03), (5.0, 0.2)):
        assert es.shift_difference_integral(kappa, h, 3) == pytest.approx(
            oracles.shift_difference_closed_form(kappa, h), rel=1e-9)
    assert es.shift_difference_integral(1.0, 0.0, 2) == 0.0
    # halving h roughly halves the integral
    for d in (2, 3):
        r = es.shift_difference_integral(2.0, 0.05, d) / es.shift_difference_integral(2.0, 0.1, d)
        assert 0.4 <= r <= 0.7


def test_surface_integral_oracles():
    cp = es.CurveProbe(circle())
    x, nu, _, _ = cp.frame([0.3])
    for t, kappa in ((0.0, 1.0), (0.2, 2.0), (-0.5, 1.0)):
        p = x[0] + t * nu[0]
        rho = np.linalg.norm(p)
        assert cp.surface_integral(kappa, p, 0.3) == pytest.approx(
            oracles.circle_surface_integral(kappa, rho), rel=1e-8)
    sp = es.SphereProbe(sphere())
    for rho, kappa in ((1.0, 1.0), (1.2, 2.0), (0.5, 1.0), (-1.1, 1.0)):
        assert sp.surface_integral(kappa, rho) == pytest.approx(
            oracles.sphere_surface_integral(kappa, abs(rho)), rel=1e-8)


def test_ball_measures():
    cp = es.CurveProbe(circle())
    x = cp.frame([1.0])[0][0]
    r0 = 0.01
    assert cp.ball_surface_measure(x, r0) == pytest.approx(2 * r0, rel=1e-4)
    assert cp.ball_surface_measure(np.array([5.0, 0.0]), 0.1) == 0.0
    eps = 0.002
    assert cp.ball_layer_measure(x, r0, eps) == pytest.approx(2 * eps * 2 * r0, rel=0.05)
    sp = es.SphereProbe(sphere())
    assert sp.ball_surface_measure(1.0, 0.1) == pytest.approx(np.pi * 0.1**2, rel=1e-12)
    assert sp.ball_surface_measure(3.0, 0.5) == 0.0
    seg = es.CurveProbe(segment(L=1.0))
    assert seg.ball_surface_measure(np.array([0.0, 0.0]), 0.05) == pytest.approx(0.1, rel=1e-9)


def test_surface_kernel_sup_decay():
    rep = es.check_surface_kernel_sup(circle(), [-1.0, -4.0])
    assert rep.passed
    ratio = rep.rows[1].value / rep.rows[0].value
    assert 0.4 <= ratio <= 0.75
    assert all(abs(t) < 0.03 for t in rep.details["argmax_offset"])
    sups = [es.check_surface_kernel_sup(circle(), [lam]).supremum for lam in (-1, -16, -256)]
    assert sups[0] > sups[1] > sups[2] and sups[2] < 0.1 * sups[0]


def test_layer_kernel_scaling():
    eps = es.default_eps(0.3)
    rep = es.check_layer_kernel_scaling(circle(), eps, -4.0)
    assert rep.passed and rep.details["slope"] >= 0.9
    # eps = beta: the whole annulus 0.7 < r < 1.3, seen from a point outside it
    cp = es.CurveProbe(circle())
    x = np.array([1.6, 0.0])
    got = cp.layer_integral(2.0, x, 0.0, float("nan"), 0.3)
    th, wt = np.polynomial.legendre.leggauss(400)
    rr, wr = np.polynomial.legendre.leggauss(80)
    th, wt = np.pi * th, np.pi * wt
    rr, wr = 1.0 + 0.3 * rr, 0.3 * wr
    P = np.stack([np.outer(rr, np.cos(th)), np.outer(rr, np.sin(th))], -1)
    G = green_radial(-4.0, np.linalg.norm(P - x, axis=-1), 2)
    assert got == pytest.approx(np.sum(np.outer(wr * rr, wt) * np.abs(G)), rel=1e-6)


def test_gradient_log_bound_and_far_field():
    eps = es.default_eps(0.3)
    logrep, far = es.check_gradient_logbound(circle(), eps, -4.0)
    assert logrep.passed and far.passed
    const = [r.value for r in logrep.rows if r.id.endswith("constant")]
    # growth per decade of eps is at most a log increment
    assert const[-1] - const[0] <= 3 * np.log(eps[0] / eps[-1]) * const[0]


def test_weingarten_product():
    rep = es.check_weingarten_product(circle(R=0.5), es.default_eps())
    assert rep.passed
    assert rep.rows[0].value == pytest.approx(2.0, rel=1e-12)   # |mu| = 1/R at s = 1


def test_battery_circle_lambda4():
    reports = es.run_battery(circle(), lambdas=(-4.0,))
    failed = [r.id for r in reports if not r.passed]
    assert not failed
    row = reports[0].rows[0].as_dict()
    assert set(row) == {"id", "shape", "lambda", "eps", "r0", "value", "envelope", "ratio", "pass"}


def test_probe_requires_matching_shape():
    with pytest.raises(es.GeometryError):
        es.SphereProbe(circle())
    with pytest.raises(es.GeometryError):
        es.CurveProbe(sphere())
