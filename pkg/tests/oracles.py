"""Independent reference values for the tests.

Everything here is computed with mpmath or with a separate finite-difference
discretization, never with the package's own kernels or quadratures.
"""

import mpmath as mp
import numpy as np
from scipy import fft, interpolate
from scipy.sparse.linalg import LinearOperator, cg

mp.mp.dps = 30


def bessel_k(nu, z):
    return float(mp.besselk(nu, z))


def circle_mode(n, kappa, R=1.0):
    """Eigenvalue of the circle single layer on the Fourier mode n: R I_n(kR) K_n(kR)."""
    return float(R * mp.besseli(n, kappa * R) * mp.besselk(n, kappa * R))


def circle_bound_kappa(alpha, R=1.0):
    """kappa with alpha R I_0(kappa R) K_0(kappa R) = 1."""
    f = lambda k: alpha * R * mp.besseli(0, k * R) * mp.besselk(0, k * R) - 1
    return float(mp.findroot(f, 0.5 / R))


def sphere_constant_mode(kappa, R=1.0):
    """Eigenvalue of the sphere single layer on constants: (1 - exp(-2 kappa R)) / (2 kappa)."""
    return float((1 - mp.exp(-2 * kappa * R)) / (2 * kappa))


def sphere_bound_kappa(alpha, R=1.0):
    f = lambda k: alpha * (1 - mp.exp(-2 * k * R)) / (2 * k) - 1
    return float(mp.findroot(f, 1.0))


def gaussian_profile_integral():
    """Integral of exp(-8 t^2) over (-1, 1)."""
    return float(mp.quad(lambda t: mp.exp(-8 * t**2), [-1, 1]))


def shift_difference_closed_form(kappa, h):
    """Integral over R^3 of |G(z - h e) - G(z)| for the 3-D Yukawa kernel.

    The difference is negative exactly on the half space closer to the shifted
    pole, which gives 2 (1 - exp(-kappa h / 2)) / kappa^2.
    """
    return float(2 * (1 - mp.exp(-kappa * h / 2)) / kappa**2)


def circle_surface_integral(kappa, rho, R=1.0):
    """Integral over the circle of K_0(kappa |x - y|) / (2 pi), x at radius rho."""
    small, big = min(rho, R), max(rho, R)
    return float(R * mp.besseli(0, kappa * small) * mp.besselk(0, kappa * big))


def sphere_surface_integral(kappa, rho, R=1.0):
    """Integral over the sphere of exp(-kappa r) / (4 pi r), x at radius rho."""
    return float(R / (2 * rho * kappa) * (mp.exp(-kappa * abs(rho - R)) - mp.exp(-kappa * (rho + R))))


def fd_resolvent(lam, box_lo, box_width, h, potential, source, points):
    """(-Laplace - V - lambda)^{-1} f with the 5-point stencil and Dirichlet walls.

    Conjugate gradients preconditioned by the exact V = 0 solve (a type-I
    sine transform). `potential` and `source` take (..., 2) arrays; the
    result is interpolated (bicubic) at `points`.
    """
    n = [int(round(box_width[a] / h)) - 1 for a in range(2)]
    hs = [box_width[a] / (n[a] + 1) for a in range(2)]
    axes = [box_lo[a] + hs[a] * np.arange(1, n[a] + 1) for a in range(2)]
    X = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    Vf, F = potential(X), source(X)
    ev = [(4 / hs[a] ** 2) * np.sin(np.pi * np.arange(1, n[a] + 1) / (2 * (n[a] + 1))) ** 2
          for a in range(2)]
    den = ev[0][:, None] + ev[1][None, :] - lam

    def apply(x):
        U = x.reshape(n)
        L = (2 / hs[0] ** 2 + 2 / hs[1] ** 2 - lam) * U - Vf * U
        L[1:] -= U[:-1] / hs[0] ** 2
        L[:-1] -= U[1:] / hs[0] ** 2
        L[:, 1:] -= U[:, :-1] / hs[1] ** 2
        L[:, :-1] -= U[:, 1:] / hs[1] ** 2
        return L.ravel()

    def precondition(r):
        return fft.idstn(fft.dstn(r.reshape(n), type=1) / den, type=1).ravel()

    size = n[0] * n[1]
    sol, info = cg(LinearOperator((size, size), apply), F.ravel(),
                   M=LinearOperator((size, size), precondition), rtol=1e-11, maxiter=1000)
    if info:
        raise RuntimeError(f"FD conjugate gradients did not converge (info={info})")
    interp = interpolate.RegularGridInterpolator(axes, sol.reshape(n), method="cubic")
    return interp(points)
