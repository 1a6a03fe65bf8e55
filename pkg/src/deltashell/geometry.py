"""Hypersurfaces in R^2 and R^3 given by chart atlases.

A chart maps parameters u in a box U to R^d. From its first and second
derivatives we get the metric tensor G = Dphi^T Dphi, the unit normal, and the
Weingarten map L = G^{-1} h with h_ab = <d_a d_b phi, nu>, so that
d_a nu = -sum_b L_ba d_b phi. With the outward normal of a circle of radius R
this gives L = -1/R and det(1 - tL) = 1 + t/R.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import special
from scipy.spatial import cKDTree

from .quadrature import gauss_legendre

FD_RELATIVE_STEP = 1e-5
RANK_TOL = 1e-8
COND_MAX = 1e12


class GeometryError(ValueError):
    """Invalid geometry: degenerate chart, parameter outside a domain, or similar."""


class HypothesisViolation(GeometryError):
    """A tube Jacobian left the interval (1 - eta, 1 + eta)."""


def _atleast_2d_param(u, m):
    u = np.asarray(u, dtype=float)
    single = u.ndim <= 1 and (u.size == m)
    return u.reshape(-1, m), single


@dataclass(frozen=True)
class Chart:
    """Parametrization phi: U -> R^d of part of a hypersurface.

    `phi`, `dphi`, `d2phi` take an (n, d-1) array of parameters and return
    arrays of shape (n, d), (n, d, d-1) and (n, d, d-1, d-1). Missing
    derivatives fall back to central differences with step width * 1e-5.
    """

    phi: Callable
    lo: tuple
    hi: tuple
    dphi: Optional[Callable] = None
    d2phi: Optional[Callable] = None
    periodic: tuple = ()
    name: str = ""

    @property
    def m(self):
        return len(self.lo)

    @property
    def width(self):
        return np.asarray(self.hi, float) - np.asarray(self.lo, float)

    def is_periodic(self, a):
        return bool(self.periodic) and bool(self.periodic[a])

    def check_domain(self, u):
        u = np.asarray(u, dtype=float).reshape(-1, self.m)
        lo, hi = np.asarray(self.lo, float), np.asarray(self.hi, float)
        for a in range(self.m):
            if self.is_periodic(a):
                continue
            slack = 1e-12 * (hi[a] - lo[a])
            if np.any(u[:, a] < lo[a] - slack) or np.any(u[:, a] > hi[a] + slack):
                raise GeometryError(f"parameter outside chart domain [{lo[a]}, {hi[a]}]")

    def point(self, u):
        u2, single = _atleast_2d_param(u, self.m)
        self.check_domain(u2)
        x = np.asarray(self.phi(u2), dtype=float)
        return x[0] if single else x

    def jacobian(self, u):
        u2, single = _atleast_2d_param(u, self.m)
        self.check_domain(u2)
        if self.dphi is not None:
            J = np.asarray(self.dphi(u2), dtype=float)
        else:
            J = self._fd(self.phi, u2)
        return J[0] if single else J

    def hessian(self, u):
        u2, single = _atleast_2d_param(u, self.m)
        self.check_domain(u2)
        if self.d2phi is not None:
            H = np.asarray(self.d2phi(u2), dtype=float)
        else:
            jac = self.dphi if self.dphi is not None else (lambda v: self._fd(self.phi, v))
            H = self._fd(jac, u2)
        return H[0] if single else H

    def _fd(self, f, u):
        h = self.width * FD_RELATIVE_STEP
        cols = []
        for a in range(self.m):
            e = np.zeros(self.m)
            e[a] = h[a]
            cols.append((np.asarray(f(u + e)) - np.asarray(f(u - e))) / (2 * h[a]))
        return np.stack(cols, axis=-1)


def metric_tensor(chart, u):
    """First fundamental form G(u) = Dphi(u)^T Dphi(u)."""
    J = chart.jacobian(u)
    return np.swapaxes(J, -1, -2) @ J


def unit_normal(chart, u, orientation=1):
    """Unit normal field; the sign convention is fixed by `orientation` (+1 or -1).

    d = 2: orientation +1 is the tangent rotated clockwise (outward for a
    counter-clockwise closed curve). d = 3: orientation +1 is d_1 phi x d_2 phi.
    """
    J = chart.jacobian(u)
    if J.shape[-2] == 2:
        t = J[..., :, 0]
        n = np.stack([t[..., 1], -t[..., 0]], axis=-1)
    elif J.shape[-2] == 3:
        n = np.cross(J[..., :, 0], J[..., :, 1])
    else:
        raise GeometryError("normals are implemented for d = 2, 3")
    return orientation * n / np.linalg.norm(n, axis=-1, keepdims=True)


def weingarten(chart, u, orientation=1):
    """Weingarten matrix L(u) and its eigenvalues (principal curvatures), sorted.

    L solves Dphi L = -d(nu o phi) in the basis {d_j phi}.
    """
    J = chart.jacobian(u)
    H = chart.hessian(u)
    nu = unit_normal(chart, u, orientation)
    G = np.swapaxes(J, -1, -2) @ J
    sv = np.linalg.svd(J, compute_uv=False)
    if np.any(sv[..., -1] <= RANK_TOL):
        raise GeometryError("chart is not of full rank")
    if np.any(np.linalg.cond(G) > COND_MAX):
        raise GeometryError("degenerate metric tensor (condition number above 1e12)")
    h = np.einsum("...iab,...i->...ab", H, nu)
    L = np.linalg.solve(G, h)
    # L is G-self-adjoint: its eigenvalues are those of G^{-1/2} h G^{-1/2}
    w, V = np.linalg.eigh(G)
    Gmh = V @ (np.swapaxes(V, -1, -2) / np.sqrt(w)[..., :, None])
    mu = np.linalg.eigvalsh(Gmh @ h @ Gmh)
    return L, np.sort(mu, axis=-1)


@dataclass(frozen=True)
class Hypersurface:
    """A hypersurface given by charts, a partition of unity and a normal orientation.

    `pou` maps ambient points (n, d) to the unnormalized partition weights
    (n, n_charts); None means a single chart covering everything.
    `taper` is a smooth window on the chart parameter used to switch the
    coupling off near the ends of truncated open curves.
    """

    charts: tuple
    d: int
    closed: bool
    orientation: int = 1
    pou: Optional[Callable] = None
    taper: Optional[Callable] = None
    name: str = ""
    params: dict = field(default_factory=dict)
    beta: Optional[float] = None
    eta: Optional[float] = None
    c: Optional[float] = None

    def flipped(self):
        """The same surface with the opposite normal field."""
        return Hypersurface(self.charts, self.d, self.closed, -self.orientation, self.pou,
                            self.taper, self.name, dict(self.params), self.beta, self.eta,
                            self.c)

    def pou_weights(self, x):
        x = np.atleast_2d(x)
        if self.pou is None:
            return np.ones((x.shape[0], 1))
        s = np.asarray(self.pou(x), dtype=float)
        return s / s.sum(axis=1, keepdims=True)

    @property
    def is_curve(self):
        return self.d == 2

    @property
    def is_sphere(self):
        return self.params.get("kind") == "sphere"


@dataclass(frozen=True)
class CurveLayout:
    """Periodic parameter layout of a curve rule: tau_j = 2 pi (j + shift) / N."""

    N: int
    closed: bool
    tau: np.ndarray
    speed: np.ndarray  # |d phi / d tau|


@dataclass(frozen=True)
class SphereLayout:
    """Gauss(cos theta) x trapezoid(phi) layout of a sphere rule."""

    R: float
    center: np.ndarray
    nlat: int
    nlon: int


@dataclass(frozen=True)
class SurfaceQuadrature:
    """Nodes on the surface with weights that absorb the partition of unity and sqrt det G."""

    nodes: np.ndarray
    weights: np.ndarray
    normals: np.ndarray
    L: np.ndarray
    curvatures: np.ndarray
    param: np.ndarray
    chart: np.ndarray
    surface: Hypersurface
    layout: object = None

    @property
    def n(self):
        return len(self.weights)

    @property
    def d(self):
        return self.nodes.shape[1]

    def integrate(self, f):
        """Sum of w_j f(x_j) for a callable f on (n, d) points or an array of node values."""
        vals = f(self.nodes) if callable(f) else np.asarray(f)
        return float(np.sum(self.weights * vals))

    def tube_jacobian(self, t, index=None):
        """det(1 - t L) = prod_k (1 - t mu_k) per node; t may broadcast against nodes."""
        mu = self.curvatures if index is None else self.curvatures[index]
        t = np.asarray(t, dtype=float)
        return np.prod(1 - t[..., None] * mu, axis=-1)


@dataclass(frozen=True)
class TubePoint:
    node: int
    t: float
    x: np.ndarray


def tube_point(quad, j, t):
    """The point x_Sigma[j] + t nu[j] in tube coordinates."""
    return TubePoint(int(j), float(t), quad.nodes[j] + t * quad.normals[j])


def tube_jacobian(quad, j, t, eta=None):
    """det(1 - t W(x_Sigma[j])); raises when it leaves (1 - eta, 1 + eta)."""
    val = float(np.prod(1 - t * quad.curvatures[j]))
    eta = quad.surface.eta if eta is None else eta
    if eta is not None and not (1 - eta < val < 1 + eta):
        raise HypothesisViolation(f"det(1 - tW) = {val} outside (1 - eta, 1 + eta), eta = {eta}")
    return val


# ----------------------------------------------------------------------------
# built-in shapes

def _smoothstep(x):
    """C-infinity step: 0 for x <= 0, 1 for x >= 1."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(x > 0, np.exp(-1 / np.where(x > 0, x, 1)), 0.0)
        b = np.where(x < 1, np.exp(-1 / np.where(x < 1, 1 - x, 1)), 0.0)
    return a / (a + b)


def end_taper(half_length, width):
    """Window on [-half_length, half_length]: 1 in the middle, 0 at the ends."""
    def taper(s):
        s = np.asarray(s, dtype=float).reshape(-1)
        return _smoothstep((half_length - np.abs(s)) / width)
    return taper


def circle(R=1.0, center=(0.0, 0.0), orientation=-1):
    """Circle of radius R, counter-clockwise; the default inward normal gives curvature +1/R."""
    c = np.asarray(center, dtype=float)

    def phi(u):
        t = u[:, 0]
        return c + R * np.stack([np.cos(t), np.sin(t)], axis=-1)

    def dphi(u):
        t = u[:, 0]
        return (R * np.stack([-np.sin(t), np.cos(t)], axis=-1))[:, :, None]

    def d2phi(u):
        t = u[:, 0]
        return (-R * np.stack([np.cos(t), np.sin(t)], axis=-1))[:, :, None, None]

    chart = Chart(phi, (0.0,), (2 * np.pi,), dphi, d2phi, periodic=(True,), name="circle")
    return Hypersurface((chart,), 2, True, orientation, name="circle",
                        params={"kind": "circle", "R": float(R), "center": c})


def segment(L=1.0, taper_width=None, orientation=-1):
    """Straight segment {(s, 0): |s| <= L}; orientation -1 is the upward normal."""

    def phi(u):
        s = u[:, 0]
        return np.stack([s, np.zeros_like(s)], axis=-1)

    def dphi(u):
        one = np.ones(len(u))
        return np.stack([one, 0 * one], axis=-1)[:, :, None]

    def d2phi(u):
        return np.zeros((len(u), 2, 1, 1))

    chart = Chart(phi, (-L,), (L,), dphi, d2phi, name="segment")
    width = 0.25 * L if taper_width is None else taper_width
    return Hypersurface((chart,), 2, False, orientation, taper=end_taper(L, width),
                        name="segment", params={"kind": "segment", "L": float(L)})


def _turning_curve(psi, dpsi, L, cal_breaks, name, params, taper_width, orientation):
    """Arclength-parametrized curve with tangent angle psi(s), phi(0) = 0.

    Positions are integrated with composite Gauss panels between `cal_breaks`
    and continued linearly where psi is constant.
    """
    xg, wg = gauss_legendre(24)

    def position(s):
        s = np.asarray(s, dtype=float)
        out = np.zeros(s.shape + (2,))
        for k, sk in np.ndenumerate(s):
            lo, hi = (0.0, sk) if sk >= 0 else (sk, 0.0)
            br = np.concatenate([[lo], [b for b in cal_breaks if lo < b < hi], [hi]])
            acc = np.zeros(2)
            for a, b in zip(br[:-1], br[1:]):
                xs = a + 0.5 * (b - a) * (xg + 1)
                ps = psi(xs)
                acc += 0.5 * (b - a) * np.array([wg @ np.cos(ps), wg @ np.sin(ps)])
            out[k] = acc if sk >= 0 else -acc
        return out

    def phi(u):
        return position(u[:, 0])

    def dphi(u):
        ps = psi(u[:, 0])
        return np.stack([np.cos(ps), np.sin(ps)], axis=-1)[:, :, None]

    def d2phi(u):
        ps = psi(u[:, 0])
        k = dpsi(u[:, 0])
        return (k[:, None] * np.stack([-np.sin(ps), np.cos(ps)], axis=-1))[:, :, None, None]

    chart = Chart(phi, (-L,), (L,), dphi, d2phi, name=name)
    width = 0.25 * L if taper_width is None else taper_width
    return Hypersurface((chart,), 2, False, orientation, taper=end_taper(L, width),
                        name=name, params=params)


def broken_line(theta, L=10.0, delta_s=0.5, taper_width=None, orientation=-1):
    """Two rays enclosing the angle 2 theta, joined by a corner smoothed over width delta_s.

    The tangent angle is psi(s) = (pi/2 - theta) erf(s / delta_s); theta = pi/2
    is the straight line. Arclength parametrization on [-L, L].
    """
    if not (0 < theta <= np.pi / 2):
        raise GeometryError("broken line needs 0 < theta <= pi/2")
    turn = np.pi / 2 - theta

    def psi(s):
        return turn * special.erf(np.asarray(s) / delta_s)

    def dpsi(s):
        return turn * 2 / (np.sqrt(np.pi) * delta_s) * np.exp(-(np.asarray(s) / delta_s) ** 2)

    reach = 7 * delta_s
    breaks = np.linspace(-reach, reach, 29)
    base = _turning_curve(psi, dpsi, L, breaks, "broken_line",
                          {"kind": "broken_line", "theta": float(theta), "L": float(L),
                           "delta_s": float(delta_s)}, taper_width, orientation)
    return base


def wavy(amplitude, period, L, taper_width=None, orientation=-1):
    """Periodic wavy curve with curvature amplitude * cos(2 pi s / period), arclength in [-L, L]."""
    omega = 2 * np.pi / period

    def psi(s):
        return amplitude / omega * np.sin(omega * np.asarray(s))

    def dpsi(s):
        return amplitude * np.cos(omega * np.asarray(s))

    n_per = int(np.ceil(L / period)) + 1
    breaks = np.arange(-n_per * 8, n_per * 8 + 1) * period / 8
    return _turning_curve(psi, dpsi, L, breaks, "wavy",
                          {"kind": "wavy", "amplitude": float(amplitude),
                           "period": float(period), "L": float(L)}, taper_width, orientation)


def sin_curve(umax=6.0, orientation=-1):
    """Graph curve u -> (u, int_0^u sin(s^2) ds), |u| <= umax; orientation -1 is the left normal.

    Its Weingarten map 2u cos(u^2) / (1 + sin^2(u^2))^{3/2} is unbounded as |u| grows.
    """
    c = np.sqrt(np.pi / 2)

    def phi(u):
        x = u[:, 0]
        S, _ = special.fresnel(x / c)
        return np.stack([x, c * S], axis=-1)

    def dphi(u):
        x = u[:, 0]
        return np.stack([np.ones_like(x), np.sin(x**2)], axis=-1)[:, :, None]

    def d2phi(u):
        x = u[:, 0]
        return np.stack([np.zeros_like(x), 2 * x * np.cos(x**2)], axis=-1)[:, :, None, None]

    chart = Chart(phi, (-umax,), (umax,), dphi, d2phi, name="sin_curve")
    return Hypersurface((chart,), 2, False, orientation, taper=end_taper(umax, 0.25 * umax),
                        name="sin_curve", params={"kind": "sin_curve", "umax": float(umax)})


SPHERE_POU_SHARPNESS = 0.5


def sphere(R=1.0, center=(0.0, 0.0, 0.0), orientation=-1):
    """Sphere of radius R covered by two spherical-coordinate charts.

    Chart 0 has its poles on the z-axis, chart 1 on the x-axis. The partition
    of unity uses s(w) = exp(-c / w) with w the squared distance (over R^2)
    from the chart's polar axis, so each weight vanishes to all orders at that
    chart's poles. Orientation +1 is the outward normal; the default -1 is
    inward, with principal curvatures +1/R.
    """
    c0 = np.asarray(center, dtype=float)
    # chart 1 is chart 0 composed with the cyclic permutation (a, b, c) -> (c, a, b)
    perms = (np.arange(3), np.array([2, 0, 1]))

    def make(perm, name):
        def phi(u):
            th, ph = u[:, 0], u[:, 1]
            p = np.stack([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)], -1)
            return c0 + R * p[:, perm]

        def dphi(u):
            th, ph = u[:, 0], u[:, 1]
            dth = np.stack([np.cos(th) * np.cos(ph), np.cos(th) * np.sin(ph), -np.sin(th)], -1)
            dph = np.stack([-np.sin(th) * np.sin(ph), np.sin(th) * np.cos(ph), 0 * th], -1)
            return R * np.stack([dth[:, perm], dph[:, perm]], axis=-1)

        def d2phi(u):
            th, ph = u[:, 0], u[:, 1]
            tt = np.stack([-np.sin(th) * np.cos(ph), -np.sin(th) * np.sin(ph), -np.cos(th)], -1)
            tp = np.stack([-np.cos(th) * np.sin(ph), np.cos(th) * np.cos(ph), 0 * th], -1)
            pp = np.stack([-np.sin(th) * np.cos(ph), -np.sin(th) * np.sin(ph), 0 * th], -1)
            H = np.empty((len(u), 3, 2, 2))
            H[:, :, 0, 0] = tt[:, perm]
            H[:, :, 0, 1] = H[:, :, 1, 0] = tp[:, perm]
            H[:, :, 1, 1] = pp[:, perm]
            return R * H

        return Chart(phi, (0.0, 0.0), (np.pi, 2 * np.pi), dphi, d2phi,
                     periodic=(False, True), name=name)

    charts = (make(perms[0], "sphere_z"), make(perms[1], "sphere_x"))

    def pou(x):
        y = (np.atleast_2d(x) - c0) / R
        wz = y[:, 0] ** 2 + y[:, 1] ** 2  # distance^2 from the z-axis
        wx = y[:, 1] ** 2 + y[:, 2] ** 2  # distance^2 from the x-axis
        with np.errstate(divide="ignore"):
            sz = np.where(wz > 0, np.exp(-SPHERE_POU_SHARPNESS / np.where(wz > 0, wz, 1)), 0.0)
            sx = np.where(wx > 0, np.exp(-SPHERE_POU_SHARPNESS / np.where(wx > 0, wx, 1)), 0.0)
        return np.stack([sz, sx], axis=-1)

    return Hypersurface(charts, 3, True, orientation, pou=pou, name="sphere",
                        params={"kind": "sphere", "R": float(R), "center": c0})


# ----------------------------------------------------------------------------
# quadrature

def _node_data(surface, chart, u):
    x = chart.point(u)
    J = chart.jacobian(u)
    nu = unit_normal(chart, u, surface.orientation)
    L, mu = weingarten(chart, u, surface.orientation)
    G = np.swapaxes(J, -1, -2) @ J
    return x, J, nu, L, mu, np.sqrt(np.linalg.det(G))


def _curve_quadrature(surface, N):
    chart = surface.charts[0]
    lo, hi = chart.lo[0], chart.hi[0]
    shift = 0.0 if surface.closed else 0.5
    tau = 2 * np.pi * (np.arange(N) + shift) / N
    u = (lo + (hi - lo) * tau / (2 * np.pi))[:, None]
    x, J, nu, L, mu, jac = _node_data(surface, chart, u)
    dudtau = (hi - lo) / (2 * np.pi)
    speed = jac * dudtau
    w = speed * 2 * np.pi / N
    layout = CurveLayout(N, surface.closed, tau, speed)
    return SurfaceQuadrature(x, w, nu, L, mu, u, np.zeros(N, int), surface, layout)


def _sphere_atlas_quadrature(surface, N):
    parts = []
    for i, chart in enumerate(surface.charts):
        th, wth = gauss_legendre(N, 0.0, np.pi)
        ph = 2 * np.pi * np.arange(2 * N) / (2 * N)
        TH, PH = np.meshgrid(th, ph, indexing="ij")
        u = np.stack([TH.ravel(), PH.ravel()], axis=-1)
        x, J, nu, L, mu, jac = _node_data(surface, chart, u)
        chi = surface.pou_weights(x)[:, i]
        w = chi * jac * np.repeat(wth, 2 * N) * (np.pi / N)
        keep = w > 0
        parts.append((x[keep], w[keep], nu[keep], L[keep], mu[keep], u[keep],
                      np.full(keep.sum(), i)))
    cat = [np.concatenate(p) for p in zip(*parts)]
    return SurfaceQuadrature(*cat, surface=surface, layout=None)


def sphere_product_quadrature(surface, nlat):
    """Gauss nodes in cos(theta) times 2*nlat trapezoid nodes in phi on chart 0.

    Exact for spherical harmonics of degree up to 2*nlat - 1; this is the rule
    the sphere operators are assembled on.
    """
    if not surface.is_sphere:
        raise GeometryError("product rule is only defined for the sphere")
    R = surface.params["R"]
    chart = surface.charts[0]
    z, wz = gauss_legendre(nlat)
    nlon = 2 * nlat
    th = np.arccos(z)[::-1]
    wz = wz[::-1]
    ph = 2 * np.pi * np.arange(nlon) / nlon
    TH, PH = np.meshgrid(th, ph, indexing="ij")
    u = np.stack([TH.ravel(), PH.ravel()], axis=-1)
    x, J, nu, L, mu, jac = _node_data(surface, chart, u)
    w = R**2 * np.repeat(wz, nlon) * (2 * np.pi / nlon)
    layout = SphereLayout(R, surface.params["center"], nlat, nlon)
    return SurfaceQuadrature(x, w, nu, L, mu, u, np.zeros(len(w), int), surface, layout)


def build_quadrature(surface, N, rule="auto"):
    """Surface rule with N nodes per chart direction.

    Curves: periodic trapezoid in the chart parameter (spectrally accurate for
    closed curves). Sphere: the two-chart atlas with partition of unity
    (rule "atlas", the default) or the product rule (rule "product").
    """
    if N < 8:
        raise GeometryError("need at least 8 nodes per chart")
    if surface.is_curve:
        if N % 2:
            raise GeometryError("curve rules use an even number of nodes")
        return _curve_quadrature(surface, N)
    if surface.is_sphere and rule == "product":
        return sphere_product_quadrature(surface, N)
    if surface.is_sphere and rule in ("auto", "atlas"):
        return _sphere_atlas_quadrature(surface, N)
    raise GeometryError(f"no quadrature rule {rule!r} for {surface.name}")


# ----------------------------------------------------------------------------
# hypothesis check

@dataclass
class HypothesisReport:
    injective: bool
    eta_est: float
    c_est: float
    det_min: float
    det_max: float
    pass_b: bool
    pass_c: bool

    @property
    def passed(self):
        return self.injective and self.pass_b and self.pass_c


def _param_samples(surface, chart_index, density):
    chart = surface.charts[chart_index]
    axes = []
    for a in range(chart.m):
        n = density * (2 if chart.m == 2 and a == 1 else 1)
        lo, hi = chart.lo[a], chart.hi[a]
        if chart.is_periodic(a):
            axes.append(lo + (hi - lo) * np.arange(n) / n)
        else:
            axes.append(lo + (hi - lo) * (np.arange(n) + 0.5) / n)
    grids = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=-1)


def _param_distance2(chart, u, v):
    diff = np.abs(u - v)
    for a in range(chart.m):
        if chart.is_periodic(a):
            period = chart.hi[a] - chart.lo[a]
            diff[..., a] = np.minimum(diff[..., a], period - diff[..., a])
    return np.sum(diff**2, axis=-1)


def hypothesis_check(surface, beta, density=64, n_t=9, core=0.25, tol=1e-8):
    """Sampled check of the standing tube hypothesis on Sigma x (-beta, beta).

    Reports the range of det(1 - tW) (eta_est = max |det - 1|; hypothesis (b)
    needs eta_est < 1), the bi-Lipschitz constant c_est from the minimal ratio
    |iota(u,t) - iota(v,s)|^2 / (|u - v|^2 + |t - s|^2) over sample pairs, and
    injectivity: every det > 0 and no two distinct samples map within `tol`.
    For multi-chart atlases each chart is sampled where its partition weight
    exceeds `core`.
    """
    ts = beta * np.linspace(-1, 1, n_t) * (1 - 1e-12)
    det_min, det_max = np.inf, -np.inf
    ratio_min = np.inf
    injective = True
    for i, chart in enumerate(surface.charts):
        u = _param_samples(surface, i, density)
        x = chart.point(u)
        if len(surface.charts) > 1:
            keep = surface.pou_weights(x)[:, i] >= core
            u, x = u[keep], x[keep]
        nu = unit_normal(chart, u, surface.orientation)
        _, mu = weingarten(chart, u, surface.orientation)
        det = np.prod(1 - ts[:, None, None] * mu[None], axis=-1)
        det_min = min(det_min, float(det.min()))
        det_max = max(det_max, float(det.max()))
        if np.any(det <= 0):
            injective = False
        # tube samples: (n_t * n_u, d) with parameters (u, t)
        P = (x[None] + ts[:, None, None] * nu[None]).reshape(-1, surface.d)
        U = np.broadcast_to(u[None], (n_t,) + u.shape).reshape(-1, chart.m)
        T = np.repeat(ts, len(u))
        tree = cKDTree(P)
        close = tree.query_pairs(tol, output_type="ndarray")
        if len(close):
            pd = _param_distance2(chart, U[close[:, 0]], U[close[:, 1]]) + \
                (T[close[:, 0]] - T[close[:, 1]]) ** 2
            if np.any(pd > tol):
                injective = False
        ratio_min = min(ratio_min, _min_lipschitz_ratio(chart, P, U, T))
    eta_est = max(abs(det_min - 1), abs(det_max - 1))
    c_est = float(np.sqrt(max(ratio_min, 0.0)))
    return HypothesisReport(injective, eta_est, c_est, det_min, det_max,
                            pass_b=eta_est < 1, pass_c=c_est > 1e-6)


def _ratio_over(chart, P, U, T, rows, cols):
    num = np.sum((P[rows] - P[cols]) ** 2, axis=-1)
    den = _param_distance2(chart, U[rows], U[cols]) + (T[rows] - T[cols]) ** 2
    mask = den > 0
    return float(np.min(num[mask] / den[mask])) if mask.any() else np.inf


def _min_lipschitz_ratio(chart, P, U, T, chunk=2048, n_exhaustive=4000, k=16, seed=0):
    """min |iota(p) - iota(q)|^2 / dist_param(p, q)^2 over sample pairs.

    All pairs up to n_exhaustive samples; beyond that all pairs of a fixed
    random subsample (far pairs) plus the k nearest ambient neighbours of
    every sample (near-contact pairs).
    """
    n = len(P)
    best = np.inf
    sub = np.arange(n)
    if n > n_exhaustive:
        sub = np.sort(np.random.default_rng(seed).choice(n, n_exhaustive, replace=False))
        _, nb = cKDTree(P).query(P, k=min(k + 1, n))
        rows = np.repeat(np.arange(n), nb.shape[1] - 1)
        best = _ratio_over(chart, P, U, T, rows, nb[:, 1:].ravel())
    for a in range(0, len(sub), chunk):
        ia = sub[a:a + chunk]
        rows = np.repeat(ia, len(sub))
        cols = np.tile(sub, len(ia))
        best = min(best, _ratio_over(chart, P, U, T, rows, cols))
    return best
