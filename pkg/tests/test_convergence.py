import numpy as np
import pytest

from deltashell import convergence as cv
from deltashell import operators as op
from deltashell.discrete import operator_norm
from deltashell.fits import envelope, loglog_slope, ratio_spread
from deltashell.geometry import build_quadrature, circle
from deltashell.potential import ParameterError, TransversePotential

EPS = [0.06, 0.03, 0.015, 0.0075]


@pytest.fixture(scope="module")
def small():
    quad = build_quadrature(circle(), 64)
    V = TransversePotential("gaussian", 1.0, 0.3)
    return cv.make_setup(quad, V, -25.0, 8, EPS, n_volume=400)


def test_fit_helpers():
    e = np.array([0.1, 0.05, 0.025, 0.0125])
    assert loglog_slope(e, 3 * e**1.5) == pytest.approx(1.5)
    assert np.isnan(loglog_slope(e, np.array([1, 0, 1, 1.0])))
    r, spread = ratio_spread(2 * envelope("eps_log", e), envelope("eps_log", e))
    assert np.allclose(r, 2) and spread == pytest.approx(1.0)
    with pytest.raises(ValueError):
        envelope("cubic", e)
    fit = cv.fit_rate("B", e, 0.7 * e, "eps_log", cv.RateThresholds())
    assert fit.passed and fit.slope == pytest.approx(1.0)
    # the envelope itself is flatter than slope 0.9 over this range
    flat = cv.fit_rate("B", e, envelope("eps_log", e), "eps_log", cv.RateThresholds())
    assert flat.spread == pytest.approx(1.0) and flat.slope < 0.9 and not flat.passed
    with pytest.raises(ParameterError):
        cv.fit_rate("B", e[:3], e[:3], "eps")
    with pytest.raises(ParameterError):
        cv.fit_rate("B", e[::-1], e, "eps")


def test_monotone_with_jitter():
    assert cv.is_monotone([1.0, 0.5, 0.51, 0.2])
    assert not cv.is_monotone([1.0, 0.5, 0.6, 0.2])


def test_zero_potential_differences_vanish():
    quad = build_quadrature(circle(), 32)
    zero = TransversePotential("zero", 1.0, 0.3)
    s = cv.make_setup(quad, zero, -25.0, 4, EPS, n_volume=200)
    norms = cv.component_norms(s, EPS)
    for key in ("A", "B", "C", "full"):
        assert np.all(norms[key] == 0)


def test_differences_detectable_and_limit_is_krein(small):
    s = small
    B0 = op.assemble_B_eps(s.lam, 0.0, s.grid, s.u, s.v)
    assert operator_norm(op.assemble_B_eps(s.lam, 0.3, s.grid, s.u, s.v) - B0) > 1e-3
    norms = cv.component_norms(small, EPS[:2], full=False)
    assert np.all(norms["B"] > 0) and np.all(norms["A"] > 0)
    heps0 = op.heps_correction(s.lam, 0.0, s.grid, s.u, s.v, s.vgrid)
    krein = op.krein_correction(s.lam, s.alpha, s.quad, s.vgrid)
    assert operator_norm(heps0 - krein) <= 1e-10 * operator_norm(krein)


def test_gaussian_B_rate():
    quad = build_quadrature(circle(), 128)
    V = TransversePotential("gaussian", 1.0, 0.3)
    s = cv.make_setup(quad, V, -25.0, 8, with_volume=False)
    B0 = op.assemble_B_eps(-25.0, 0.0, s.grid, s.u, s.v)
    nb = [operator_norm(op.assemble_B_eps(-25.0, e, s.grid, s.u, s.v) - B0) for e in EPS]
    slope = loglog_slope(EPS, nb)
    assert 0.9 <= slope <= 1.15


def test_sweep_result(small):
    res = cv.convergence_sweep(small, EPS, shape="circle")
    assert res.schur_dominates
    assert set(res.fits) == {"A", "B", "C", "full"}
    for key in ("A", "B", "C"):
        assert res.fits[key].slope >= 0.9
    assert res.passed == (all(f.passed for f in res.fits.values()) and res.monotone)


def test_invertibility_regime(small):
    s = small
    lam, nb = cv.find_lambda_M(s.grid, s.u, s.v, EPS + [0.3])
    assert nb <= 0.5
    rows = cv.invertibility_table(s.grid, s.u, s.v, lam, EPS + [0.3])
    for r in rows:
        assert r.passed
        assert r.inverse_norm <= r.neumann_bound * (1 + 1e-9) <= 2 + 1e-9
    # a 2% less negative lambda violates the bound for some eps
    assert cv.max_B_norm(s.grid, s.u, s.v, lam / 1.03, EPS + [0.3]) > 0.5 or lam > -1e-6


def test_resolution_floor_guard():
    with pytest.raises(cv.ResolutionError):
        cv._check_floor({"B": np.array([1e-3, 1e-9])}, 1e-9)
    cv._check_floor({"B": np.array([1e-3, 1e-6])}, 1e-9)


def test_refinement_study():
    V = TransversePotential("gaussian", 1.0, 0.3)
    rows, change = cv.refinement_study(lambda n: build_quadrature(circle(), n), V, -25.0, EPS,
                                       [32, 64], h=0.2, nt_levels=[4, 8])
    assert [r["N"] for r in rows] == [32, 64]
    assert set(change) == {"A", "B", "C", "full"}
    assert all(np.isfinite(v) and v >= 0 for v in change.values())
