import numpy as np
import pytest

from deltashell.geometry import (Chart, GeometryError, HypothesisViolation, broken_line,
                                 build_quadrature, circle, hypothesis_check, metric_tensor,
                                 segment, sin_curve, sphere, tube_jacobian, tube_point,
                                 unit_normal, weingarten, wavy)


def _graph_sphere():
    phi = lambda u: np.stack([u[:, 0], u[:, 1], np.sqrt(1 - u[:, 0] ** 2 - u[:, 1] ** 2)], -1)
    return Chart(phi, (-0.7, -0.7), (0.7, 0.7), name="graph")


def test_metric_tensor_examples():
    c2 = circle(R=2.0)
    u = np.linspace(0, 6, 7)[:, None]
    assert np.allclose(metric_tensor(c2.charts[0], u), 4.0)
    plane = Chart(lambda u: np.stack([u[:, 0], u[:, 1], 0 * u[:, 0]], -1), (-1, -1), (1, 1))
    assert np.allclose(metric_tensor(plane, np.array([[0.2, -0.4]])), np.eye(2), atol=1e-9)
    # symbolic derivative of the graph chart at (0.3, 0)
    G = metric_tensor(_graph_sphere(), np.array([[0.3, 0.0]]))[0]
    assert np.allclose(G, [[1 / (1 - 0.09), 0], [0, 1]], atol=1e-8)


def test_domain_error():
    with pytest.raises(GeometryError):
        metric_tensor(segment().charts[0], np.array([[100.0]]))


def test_weingarten_examples():
    for R in (0.5, 1.0, 3.0):
        c = circle(R=R)
        L, mu = weingarten(c.charts[0], np.array([[0.1], [2.0]]), c.orientation)
        assert np.allclose(L, 1 / R) and np.allclose(mu, 1 / R)
    L, _ = weingarten(segment().charts[0], np.array([[0.1]]), -1)
    assert np.allclose(L, 0)
    sc = sin_curve()
    u = np.linspace(-5, 5, 11)
    _, mu = weingarten(sc.charts[0], u[:, None], sc.orientation)
    exact = 2 * u * np.cos(u**2) / (1 + np.sin(u**2) ** 2) ** 1.5
    assert np.allclose(np.abs(mu[:, 0]), np.abs(exact), rtol=1e-5, atol=1e-7)


def test_sphere_curvatures_and_normals():
    s = sphere()
    q = build_quadrature(s, 8)
    assert np.allclose(q.curvatures, 1.0, atol=1e-8)
    assert np.allclose(np.linalg.norm(q.normals, axis=1), 1)
    nu = unit_normal(_graph_sphere(), np.array([[0.0, 0.0]]))
    assert np.allclose(np.abs(nu), [[0, 0, 1]])


def test_tube_jacobian_examples():
    qc = build_quadrature(circle(), 32)
    assert tube_jacobian(qc, 0, 0.5) == pytest.approx(0.5)
    assert tube_jacobian(qc, 3, 0.0) == 1.0
    qs = build_quadrature(sphere(), 8)
    assert tube_jacobian(qs, 0, 0.1) == pytest.approx(0.81, abs=1e-8)
    with pytest.raises(HypothesisViolation):
        tube_jacobian(qc, 0, 0.9, eta=0.5)
    p = tube_point(qc, 0, 0.25)
    assert np.linalg.norm(p.x) == pytest.approx(0.75)


def test_quadrature_weights():
    q = build_quadrature(circle(), 64)
    assert q.weights.sum() == pytest.approx(2 * np.pi, abs=1e-12)
    assert q.integrate(lambda x: x[:, 0] ** 2) == pytest.approx(np.pi, abs=1e-12)
    assert np.all(q.weights > 0)
    for rule in ("atlas", "product"):
        qs = build_quadrature(sphere(), 32, rule=rule)
        assert np.all(qs.weights > 0)
        assert qs.weights.sum() == pytest.approx(4 * np.pi, rel=1e-5)
        assert qs.integrate(lambda x: x[:, 2] ** 2) == pytest.approx(4 * np.pi / 3, rel=1e-5)


def test_weingarten_is_metric_symmetric():
    q = build_quadrature(wavy(0.2, 2.0, 10.0), 64)
    # d = 2: L is a scalar; for the sphere atlas L must be G-symmetric
    qs = build_quadrature(sphere(R=2.0), 12)
    for j in range(0, qs.n, 17):
        ch = qs.surface.charts[qs.chart[j]]
        G = metric_tensor(ch, qs.param[j][None])[0]
        GL = G @ qs.L[j]
        assert np.allclose(GL, GL.T, atol=1e-8)
    assert np.all(np.isfinite(q.L))


def test_hypothesis_check_examples():
    rep = hypothesis_check(circle(), 0.5)
    assert rep.injective and rep.passed
    assert rep.det_min == pytest.approx(0.5, abs=1e-6)
    assert rep.det_max == pytest.approx(1.5, abs=1e-6)
    seg = hypothesis_check(segment(), 0.3)
    assert seg.passed and seg.c_est == pytest.approx(1.0, abs=1e-6) and seg.eta_est < 1e-9
    assert hypothesis_check(sphere(), 0.3).passed
    # (1 + t)^2 reaches 2.25 at |t| = 0.5, so hypothesis (b) cannot hold there
    assert not hypothesis_check(sphere(), 0.5).pass_b
    bad = hypothesis_check(sin_curve(), 0.5)
    assert not bad.pass_b and not bad.passed


def test_broken_line_is_smooth_and_arclength():
    q = build_quadrature(broken_line(np.pi / 4, L=10.0, delta_s=0.5), 256)
    assert q.weights.sum() == pytest.approx(20.0, rel=1e-6)   # arclength window [-L, L]
    assert np.max(np.abs(q.curvatures)) < 4.0
