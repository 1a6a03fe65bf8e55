"""Transverse potentials on the tube around Sigma and the product grid Sigma x (-1, 1)."""

from dataclasses import dataclass

import numpy as np

from .quadrature import gauss_legendre

PROFILES = ("box", "gaussian", "two_bump", "zero")


class ParameterError(ValueError):
    """A parameter outside its admissible range."""


def _bump(t, center, radius):
    """exp(1 - 1 / (1 - y^2)) with y = (t - center) / radius, zero outside."""
    y = (np.asarray(t, dtype=float) - center) / radius
    inside = np.abs(y) < 1
    safe = np.where(inside, y, 0.0)
    return np.where(inside, np.exp(1 - 1 / (1 - safe**2)), 0.0)


TWO_BUMP_SHAPE = ((-0.45, 0.4), (0.5, 0.3))  # (center, radius) of the two bumps


@dataclass(frozen=True)
class TransversePotential:
    """Separable potential V(x_Sigma + s nu) = a(x_Sigma) q(s / beta) supported in |s| < beta.

    Profiles on (-1, 1): "box" q = 1/2, "gaussian" q = exp(-8 t^2) (truncated
    at |t| = 1), "two_bump" q = w1 b1 + w2 b2 with smooth compact bumps of
    different widths, and "zero". `amplitude` scales a; the surface taper
    (open curves) multiplies it node by node.
    """

    profile: str = "box"
    amplitude: float = 1.0
    beta: float = 0.3
    weights: tuple = (1.0, 0.5)

    def __post_init__(self):
        if self.profile not in PROFILES:
            raise ParameterError(f"unknown profile {self.profile!r}")
        if not self.beta > 0:
            raise ParameterError("beta must be positive")

    def q(self, t):
        t = np.asarray(t, dtype=float)
        inside = np.abs(t) < 1
        if self.profile == "box":
            val = np.full(t.shape, 0.5)
        elif self.profile == "gaussian":
            val = np.exp(-8 * t**2)
        elif self.profile == "two_bump":
            (c1, r1), (c2, r2) = TWO_BUMP_SHAPE
            val = self.weights[0] * _bump(t, c1, r1) + self.weights[1] * _bump(t, c2, r2)
        else:
            val = np.zeros(t.shape)
        return np.where(inside, val, 0.0)

    @property
    def is_zero(self):
        return self.profile == "zero" or self.amplitude == 0

    @property
    def nonnegative(self):
        if self.is_zero:
            return True
        if self.profile == "two_bump":
            return self.amplitude * min(self.weights) >= 0
        return self.amplitude >= 0

    def node_amplitude(self, quad):
        """a(x_Sigma[j]) including the end taper of open curves."""
        a = np.full(quad.n, float(self.amplitude))
        taper = quad.surface.taper
        if taper is not None and not quad.surface.closed:
            a = a * taper(quad.param[:, 0])
        return a

    def __call__(self, a, s):
        """V at tube coordinate s for node amplitude(s) a."""
        return np.asarray(a) * self.q(np.asarray(s) / self.beta)

    def sup(self):
        t = np.linspace(-1, 1, 4001)[1:-1]
        return float(abs(self.amplitude) * np.max(np.abs(self.q(t))))


def two_bump_balanced_weights(w1=1.0):
    """Weights (w1, w2) for which the two-bump profile integrates to zero."""
    (c1, r1), (c2, r2) = TWO_BUMP_SHAPE
    x, w = gauss_legendre(200)
    i1 = r1 * np.sum(w * _bump(x, 0, 1))
    i2 = r2 * np.sum(w * _bump(x, 0, 1))
    return (w1, -w1 * i1 / i2)


@dataclass(frozen=True)
class ScaledPotential:
    """V_eps(x_Sigma + t nu) = (beta / eps) V(x_Sigma + (beta / eps) t nu), zero for |t| >= eps."""

    base: TransversePotential
    eps: float

    def __call__(self, a, t):
        scale = self.base.beta / self.eps
        return scale * np.asarray(a) * self.base.q(np.asarray(t) / self.eps)

    def sup(self):
        return self.base.beta / self.eps * self.base.sup()


def scale_potential(V, eps):
    if not (0 < eps <= V.beta):
        raise ParameterError(f"eps must lie in (0, beta], got {eps} with beta = {V.beta}")
    return ScaledPotential(V, float(eps))


@dataclass(frozen=True)
class CouplingStrength:
    """Coupling alpha(x_Sigma[j]) of the limiting delta-interaction."""

    alpha: np.ndarray

    def __array__(self, dtype=None):
        return np.asarray(self.alpha, dtype=dtype)


def transversal_average(V, quad, order=16):
    """alpha_j = beta sum_m omega_m a_j q(t_m): the Gauss rule for int V(x_j + s nu) ds."""
    t, om = gauss_legendre(order)
    a = V.node_amplitude(quad)
    return CouplingStrength(V.beta * a * np.sum(om * V.q(t)))


@dataclass(frozen=True)
class ProductGrid:
    """Sigma-rule tensor a Gauss rule {(t_m, omega_m)} on (-1, 1); flat index j * nt + m."""

    quad: object
    t: np.ndarray
    omega: np.ndarray

    @property
    def nt(self):
        return len(self.t)

    @property
    def n(self):
        return self.quad.n * self.nt

    @property
    def weights(self):
        return np.outer(self.quad.weights, self.omega).ravel()

    def tube_jacobian(self, eps):
        """det(1 - eps t_m W(x_j)) on the flat index."""
        mu = self.quad.curvatures
        return np.prod(1 - eps * self.t[None, :, None] * mu[:, None, :], axis=-1).ravel()


def product_grid(quad, order=16):
    t, om = gauss_legendre(order)
    return ProductGrid(quad, t, om)


def profile_functions(V, grid):
    """u = |beta V(x + beta t nu)|^{1/2} and v = sign(V) u on the flat product index."""
    a = V.node_amplitude(grid.quad)
    val = V.beta * a[:, None] * V.q(grid.t)[None, :]
    u = np.sqrt(np.abs(val)).ravel()
    return u, np.sign(val).ravel() * u
