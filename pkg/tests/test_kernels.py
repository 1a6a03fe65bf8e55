import numpy as np
import pytest

import oracles
from deltashell.kernels import (GreenKernel, KernelDomainError, SpectralParameter, bessel_k,
                                envelope_check, green, green_gradient, green_radial)

# mpmath values, frozen
K0_AT_1 = 0.42102443824070833
KHALF_AT_2 = 0.11993777196806146
G2_LAM1_R1 = 0.06700812050849714


def test_bessel_values_against_mpmath():
    assert bessel_k(0, 1.0) == pytest.approx(K0_AT_1, rel=1e-13)
    assert bessel_k(0.5, 2.0) == pytest.approx(KHALF_AT_2, rel=1e-13)
    assert KHALF_AT_2 == pytest.approx(np.sqrt(np.pi / 4) * np.exp(-2), rel=1e-14)
    for nu in (0, 1, 0.5, 1.5):
        for z in (1e-3, 0.3, 1.0, 2.0, 7.5, 40.0):
            assert bessel_k(nu, z) == pytest.approx(oracles.bessel_k(nu, z), rel=1e-12)


def test_bessel_k1_small_argument():
    assert bessel_k(1, 1e-6) * 1e-6 == pytest.approx(1.0, abs=1e-5)


def test_bessel_domain():
    with pytest.raises(KernelDomainError):
        bessel_k(0, 0.0)
    with pytest.raises(KernelDomainError):
        bessel_k(1, -1.0)


def test_green_closed_forms():
    assert green(-1.0, np.array([1.0, 0.0, 0.0])) == pytest.approx(np.exp(-1) / (4 * np.pi), rel=1e-14)
    assert green(-1.0, np.array([0.0, 1.0])) == pytest.approx(G2_LAM1_R1, rel=1e-12)
    assert G2_LAM1_R1 == pytest.approx(oracles.bessel_k(0, 1.0) / (2 * np.pi), rel=1e-14)


def test_green_singularity_and_spectral_parameter():
    with pytest.raises(KernelDomainError):
        green(-1.0, np.zeros(2))
    with pytest.raises(KernelDomainError):
        green_gradient(-1.0, np.zeros(3))
    with pytest.raises(ValueError):
        SpectralParameter(0.5)
    assert SpectralParameter.from_kappa(2.0).lam == pytest.approx(-4.0)


def test_green_gradient_closed_form_and_fd():
    g = green_gradient(-1.0, np.array([1.0, 0.0, 0.0]))
    assert g[0] == pytest.approx(-2 * np.exp(-1) / (4 * np.pi), rel=1e-13)
    assert np.allclose(g[1:], 0)
    rng = np.random.default_rng(1)
    h = 1e-6
    for d in (2, 3):
        x = rng.normal(size=d)
        x *= 0.7 / np.linalg.norm(x)
        fd = np.array([(green(-2.0, x + h * e) - green(-2.0, x - h * e)) / (2 * h)
                       for e in np.eye(d)])
        assert np.allclose(green_gradient(-2.0, x), fd, rtol=1e-6)
        assert np.allclose(green_gradient(-2.0, -x), -green_gradient(-2.0, x))


def test_green_decay_and_newtonian_limit():
    r = np.array([5.0, 10.0, 20.0])
    assert np.all(green_radial(-4.0, r, 3) <= np.exp(-2 * r))
    r0 = 1e-7
    assert 4 * np.pi * r0 * green_radial(-1.0, r0, 3) == pytest.approx(1.0, abs=1e-6)


def test_envelope_check():
    radii = np.geomspace(1e-8, 1e-2, 30)
    rep = envelope_check(-1.0, 2, radii)
    assert rep.passed
    assert rep.small_r_constant < 1
    rep3 = envelope_check(-1.0, 3, np.geomspace(1e-6, 20, 50))
    assert rep3.passed
    assert rep3.gradient_constant == pytest.approx(1 / (4 * np.pi), rel=1e-3)


def test_green_kernel_object():
    k = GreenKernel(2, SpectralParameter(-4.0))
    x = np.array([[0.3, 0.4]])
    assert k.kappa == 2.0
    assert k(x)[0] == pytest.approx(green(-4.0, x[0]))
