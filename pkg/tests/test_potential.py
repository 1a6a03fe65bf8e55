import numpy as np
import pytest

import oracles
from deltashell.geometry import build_quadrature, circle, segment
from deltashell.potential import (ParameterError, TransversePotential, product_grid,
                                  profile_functions, scale_potential, transversal_average,
                                  two_bump_balanced_weights)
from deltashell.quadrature import gauss_legendre

GAUSS_INTEGRAL = 0.6266173746   # mpmath, frozen (the contract's 0.6260 is a typo)


def test_scaled_potential_examples():
    V = TransversePotential("gaussian", 2.0, 0.3)
    a = np.array([1.0, 0.5])
    t = np.array([0.1, -0.2])
    assert np.allclose(scale_potential(V, 0.3)(a, t), V(a, t))
    Ve = scale_potential(V, 0.03)
    assert Ve.sup() == pytest.approx(10 * V.sup())
    assert Ve(1.0, 0.03) == 0.0
    with pytest.raises(ParameterError):
        scale_potential(V, 0.0)
    with pytest.raises(ParameterError):
        scale_potential(V, 0.31)


def test_transverse_integral_independent_of_eps():
    V = TransversePotential("box", 1.0, 0.3)
    t, om = gauss_legendre(8)
    for eps in (0.3, 0.1, 0.01):
        s = eps * t
        assert eps * np.sum(om * scale_potential(V, eps)(1.0, s)) == pytest.approx(0.3)


def test_coupling_strength_examples():
    q = build_quadrature(circle(), 32)
    box = transversal_average(TransversePotential("box", 1.0, 0.3), q)
    assert np.allclose(box.alpha, 0.3)
    gauss = transversal_average(TransversePotential("gaussian", 1.0, 1.0), q, order=32)
    assert GAUSS_INTEGRAL == pytest.approx(oracles.gaussian_profile_integral(), abs=1e-10)
    assert np.allclose(gauss.alpha, GAUSS_INTEGRAL, atol=1e-9)
    w = two_bump_balanced_weights()
    bal = transversal_average(TransversePotential("two_bump", 1.0, 0.3, w), q, order=200)
    assert np.allclose(bal.alpha, 0.0, atol=1e-6)   # narrow bumps converge slowly
    assert not TransversePotential("two_bump", 1.0, 0.3, w).nonnegative


def test_profile_functions_and_taper():
    V = TransversePotential("box", 2.0, 0.3)
    grid = product_grid(build_quadrature(segment(L=2.0), 64), 4)
    u, v = profile_functions(V, grid)
    assert u.shape == (grid.n,)
    assert np.all(u >= 0) and np.allclose(u, v)
    a = V.node_amplitude(grid.quad)
    assert a.max() == pytest.approx(2.0) and a.min() < 1e-6   # switched off at the ends
    neg = profile_functions(TransversePotential("box", -1.0, 0.3), grid)
    assert np.allclose(neg[1], -neg[0])


def test_unknown_profile():
    with pytest.raises(ParameterError):
        TransversePotential("triangle")
    with pytest.raises(ParameterError):
        TransversePotential("box", 1.0, 0.0)
