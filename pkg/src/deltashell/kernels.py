"""Free resolvent kernel of -Laplace - lambda and the Bessel functions behind it."""

from dataclasses import dataclass

import numpy as np
from scipy import special

UNDERFLOW_ARG = 700.0


class KernelDomainError(ValueError):
    """Raised for arguments outside the domain of a kernel or Bessel function."""


@dataclass(frozen=True)
class SpectralParameter:
    """A negative spectral parameter lambda with decay rate kappa = sqrt(-lambda)."""

    lam: float

    def __post_init__(self):
        if not np.isfinite(self.lam) or self.lam >= 0:
            raise KernelDomainError(f"spectral parameter must be negative, got {self.lam}")

    @property
    def kappa(self):
        return float(np.sqrt(-self.lam))

    @classmethod
    def from_kappa(cls, kappa):
        if kappa <= 0:
            raise KernelDomainError(f"kappa must be positive, got {kappa}")
        return cls(-float(kappa) ** 2)


def bessel_k(order, z):
    """Modified Bessel function of the second kind K_order(z) for z > 0.

    Orders 1/2 and 3/2 use their closed forms; other orders go through scipy.
    """
    z = np.asarray(z, dtype=float)
    if np.any(z <= 0) or np.any(~np.isfinite(z)):
        raise KernelDomainError("bessel_k requires z > 0")
    if order == 0:
        out = special.k0(z)
    elif order == 1:
        out = special.k1(z)
    elif order == 0.5:
        out = np.sqrt(np.pi / (2 * z)) * np.exp(-z)
    elif order == 1.5:
        out = np.sqrt(np.pi / (2 * z)) * np.exp(-z) * (1 + 1 / z)
    else:
        out = special.kv(order, z)
    return out[()] if out.ndim == 0 else out


def _as_lambda(lam):
    return lam if isinstance(lam, SpectralParameter) else SpectralParameter(float(lam))


def green_radial(lam, r, d):
    """G_lambda as a function of the distance r > 0 in dimension d.

    Entries with kappa*r beyond the double range return exactly 0.
    """
    kappa = _as_lambda(lam).kappa
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise KernelDomainError("green kernel is singular at r = 0")
    z = kappa * r
    far = z > UNDERFLOW_ARG
    zs = np.where(far, 1.0, z)
    if d == 2:
        out = special.k0(zs) / (2 * np.pi)
    elif d == 3:
        out = np.exp(-zs) / (4 * np.pi * np.where(far, 1.0, r))
    else:
        nu = d / 2 - 1
        rs = np.where(far, 1.0, r)
        out = (2 * np.pi) ** (-d / 2) * (kappa / rs) ** nu * special.kv(nu, zs)
    out = np.where(far, 0.0, out)
    return out[()] if out.ndim == 0 else out


def green_radial_derivative(lam, r, d):
    """dG/dr, from d/dz[z^-nu K_nu(z)] = -z^-nu K_{nu+1}(z) with nu = d/2 - 1."""
    kappa = _as_lambda(lam).kappa
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise KernelDomainError("green gradient is singular at r = 0")
    z = kappa * r
    far = z > UNDERFLOW_ARG
    zs = np.where(far, 1.0, z)
    rs = np.where(far, 1.0, r)
    if d == 2:
        out = -kappa * special.k1(zs) / (2 * np.pi)
    elif d == 3:
        out = -np.exp(-zs) * (1 + zs) / (4 * np.pi * rs**2)
    else:
        nu = d / 2 - 1
        out = -(2 * np.pi) ** (-d / 2) * kappa ** (d / 2) * rs ** (-nu) * special.kv(nu + 1, zs)
    out = np.where(far, 0.0, out)
    return out[()] if out.ndim == 0 else out


def green(lam, x):
    """G_lambda(x) for points x of shape (..., d), x != 0."""
    x = np.asarray(x, dtype=float)
    r = np.linalg.norm(x, axis=-1)
    if np.any(r == 0):
        raise KernelDomainError("green kernel is singular at x = 0")
    return green_radial(lam, r, x.shape[-1])


def green_gradient(lam, x):
    """Gradient of G_lambda at x != 0; points along -x/|x|."""
    x = np.asarray(x, dtype=float)
    r = np.linalg.norm(x, axis=-1)
    if np.any(r == 0):
        raise KernelDomainError("green gradient is singular at x = 0")
    dr = green_radial_derivative(lam, r, x.shape[-1])
    return (np.asarray(dr) / r)[..., None] * x


@dataclass(frozen=True)
class GreenKernel:
    """G_lambda in dimension d, bundled for repeated evaluation."""

    d: int
    param: SpectralParameter

    @property
    def kappa(self):
        return self.param.kappa

    def __call__(self, x):
        return green(self.param, x)

    def radial(self, r):
        return green_radial(self.param, r, self.d)

    def gradient(self, x):
        return green_gradient(self.param, x)


@dataclass
class EnvelopeReport:
    d: int
    lam: float
    small_r_constant: float
    far_constant: float
    gradient_constant: float
    passed: bool


def envelope_check(lam, d, radii):
    """Fit the small-r and large-r envelopes of G_lambda and |grad G_lambda|.

    Small r: |G| <= c (1 + |ln(kappa r)|) for d = 2, c r^(2-d) otherwise.
    Large r: |G| <= c exp(-kappa r). Gradient: |grad G| r^(d-1) <= c.
    """
    param = _as_lambda(lam)
    kappa = param.kappa
    r = np.sort(np.asarray(radii, dtype=float))
    g = np.abs(green_radial(param, r, d))
    dg = np.abs(green_radial_derivative(param, r, d))
    near = r * kappa <= 1
    far = ~near
    if d == 2:
        small_env = 1 + np.abs(np.log(kappa * r))
    else:
        small_env = r ** (2.0 - d)
    c_small = float(np.max(g[near] / small_env[near])) if near.any() else 0.0
    # exp(-kappa r) times the algebraic prefactor, bounded by its value at r = 1/kappa
    c_far = float(np.max(g[far] / np.exp(-kappa * r[far]))) if far.any() else 0.0
    c_grad = float(np.max(dg[near] * r[near] ** (d - 1))) if near.any() else 0.0
    finite = np.isfinite([c_small, c_far, c_grad]).all()
    return EnvelopeReport(d, param.lam, c_small, c_far, c_grad, bool(finite))
