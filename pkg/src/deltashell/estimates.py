"""Numerical checks of the integral bounds on G_lambda behind the convergence rates.

Suprema over R^d are replaced by maxima over structured samples: points on
Sigma, points at normal offsets {eps/2, eps, 2 eps, 1/kappa, 3/kappa} on both
sides, and seeded random points. Curves are integrated in the chart
parameter with panels graded towards the nearly singular point. The sphere
uses rotation invariance: the target sits on the polar axis and the surface
integral reduces to the polar angle.

Every check returns an EstimateReport whose rows carry the sampled value,
the envelope it is compared with and their ratio; the constants of the
integral bounds are reported as measured ratios, not certified.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .fits import envelope, loglog_slope, ratio_spread
from .geometry import GeometryError, _node_data
from .kernels import green_radial, green_radial_derivative
from .quadrature import composite_gauss, gauss_legendre, graded_breaks

PANEL_ORDER = 8
GRADING_LEVELS = 12
DEFAULT_EPS_FRACTIONS = (0.2, 0.1, 0.05, 0.025)


@dataclass(frozen=True)
class EstimateThresholds:
    slope_min: float = 0.9
    ratio_factor: float = 3.0
    exponent_tol: float = 0.1
    sup_ratio_factor: float = 1.5
    far_tol: float = 0.01
    halving: tuple = (0.4, 0.7)


@dataclass
class EstimateRow:
    id: str
    shape: str
    lam: float
    eps: float
    r0: float
    value: float
    envelope: float
    ratio: float
    passed: bool

    def as_dict(self):
        return {"id": self.id, "shape": self.shape, "lambda": self.lam, "eps": self.eps,
                "r0": self.r0, "value": self.value, "envelope": self.envelope,
                "ratio": self.ratio, "pass": self.passed}


@dataclass
class EstimateReport:
    """Rows of one estimate check; `passed` is the conjunction of its criteria."""

    id: str
    shape: str
    rows: list
    passed: bool
    details: dict = field(default_factory=dict)

    @property
    def supremum(self):
        return max(r.value for r in self.rows)

    @property
    def ratios(self):
        return np.array([r.ratio for r in self.rows])


def _graded_rule(a, b, centers, n=PANEL_ORDER, levels=GRADING_LEVELS):
    """Composite Gauss on [a, b] graded towards every point in `centers`."""
    pts = [graded_breaks(a, b, float(np.clip(c, a, b)), levels=levels) for c in centers]
    return composite_gauss(np.unique(np.concatenate(pts)), n)


def _kappa(lam):
    if not lam < 0:
        raise ValueError("lambda must be negative")
    return float(np.sqrt(-lam))


# ----------------------------------------------------------------------------
# probes: the geometry each check integrates over

class CurveProbe:
    """Curve in the plane, integrated in its chart parameter."""

    d = 2

    def __init__(self, surface):
        if not surface.is_curve:
            raise GeometryError("CurveProbe needs a curve")
        self.surface = surface
        self.chart = surface.charts[0]
        self.lo, self.hi = float(self.chart.lo[0]), float(self.chart.hi[0])
        self.closed = surface.closed

    def frame(self, u):
        """Points, normals, speeds and curvatures at parameters u."""
        u = np.asarray(u, dtype=float).reshape(-1, 1)
        x, _, nu, _, mu, jac = _node_data(self.surface, self.chart, u)
        return x, nu, jac, mu[:, 0]

    def positions(self, n):
        W = self.hi - self.lo
        if self.closed:
            return self.lo + W * (np.arange(n) + 0.25) / n
        return self.lo + W * (np.arange(n) + 1) / (n + 1)

    def param_rule(self, u0):
        if self.closed:
            half = 0.5 * (self.hi - self.lo)
            return _graded_rule(u0 - half, u0 + half, [u0])
        return _graded_rule(self.lo, self.hi, [u0])

    def max_curvature(self, n=512):
        u = self.lo + (self.hi - self.lo) * (np.arange(n) + 0.5) / n
        return float(np.max(np.abs(self.frame(u)[3])))

    def samples(self, offsets, n_pos, rng, n_random):
        """(x, u0, t): x = phi(u0) + t nu(u0); random points carry t = nan."""
        u0 = self.positions(n_pos)
        X, nu, _, _ = self.frame(u0)
        out = [(X[i] + t * nu[i], u0[i], t) for i in range(n_pos) for t in offsets]
        if n_random:
            lo, hi = X.min(0) - 1.0, X.max(0) + 1.0
            dense = self.lo + (self.hi - self.lo) * (np.arange(256) + 0.5) / 256
            Xd = self.frame(dense)[0]
            for p in rng.uniform(lo, hi, size=(n_random, 2)):
                k = int(np.argmin(np.sum((Xd - p) ** 2, axis=1)))
                out.append((p, dense[k], float("nan")))
        return out

    # integrals ---------------------------------------------------------------

    def surface_integral(self, kappa, x, u0):
        """int_Sigma |G(x - y)| dsigma(y)."""
        u, w = self.param_rule(u0)
        Y, _, sp, _ = self.frame(u)
        r = np.linalg.norm(x - Y, axis=1)
        return float(np.sum(w * sp * np.abs(green_radial(-kappa**2, r, 2))))

    def layer_integral(self, kappa, x, u0, t0, eps):
        """int_{Omega_eps} |G(x - y)| dy in tube coordinates."""
        u, wu = self.param_rule(u0)
        t0 = 0.0 if np.isnan(t0) else t0
        t, wt = _graded_rule(-eps, eps, [t0])
        Y, nu, sp, mu = self.frame(u)
        P = Y[:, None, :] + t[None, :, None] * nu[:, None, :]
        r = np.linalg.norm(x - P, axis=-1)
        jac = sp[:, None] * (1 - t[None, :] * mu[:, None])
        return float(np.einsum("i,j,ij->", wu, wt, jac * np.abs(green_radial(-kappa**2, r, 2))))

    def shift_surface_difference(self, kappa, x, u0, t0, eps):
        """int_Sigma int_{-1}^{1} |G(x - y - eps s nu) - G(x - y)| ds dsigma(y)."""
        u, wu = self.param_rule(u0)
        t0 = 0.0 if np.isnan(t0) else t0
        s, ws = _graded_rule(-1.0, 1.0, [t0 / eps, 0.0])
        Y, nu, sp, _ = self.frame(u)
        lam = -kappa**2
        g0 = green_radial(lam, np.linalg.norm(x - Y, axis=1), 2)
        P = Y[:, None, :] + eps * s[None, :, None] * nu[:, None, :]
        g1 = green_radial(lam, np.linalg.norm(x - P, axis=-1), 2)
        return float(np.einsum("i,j,ij->", wu * sp, ws, np.abs(g1 - g0[:, None])))

    def gradient_constant_path(self, kappa, x, u0, t0, eps):
        """int_0^1 int_{-1}^1 int_Sigma |grad G(x - y - eps theta s nu)|, x fixed.

        The integrand depends on theta s only; with zeta = theta s the double
        integral becomes int_{-1}^{1} f(zeta) (-ln|zeta|) dzeta.
        """
        u, wu = self.param_rule(u0)
        t0 = 0.0 if np.isnan(t0) else t0
        z, wz = _graded_rule(-1.0, 1.0, [0.0, t0 / eps])
        Y, nu, sp, _ = self.frame(u)
        P = Y[:, None, :] + eps * z[None, :, None] * nu[:, None, :]
        r = np.linalg.norm(x - P, axis=-1)
        dG = np.abs(green_radial_derivative(-kappa**2, r, 2))
        return float(np.einsum("i,j,ij->", wu * sp, wz * -np.log(np.abs(z)), dG))

    def gradient_linear_path(self, kappa, u0, eps):
        """Same triple integral along x(theta) = x_Sigma + eps theta nu(x_Sigma)."""
        x0, n0, _, _ = self.frame([u0])
        u, wu = self.param_rule(u0)
        s, ws = _graded_rule(-1.0, 1.0, [1.0])
        th, wth = _graded_rule(0.0, 1.0, [0.0], levels=8)
        Y, nu, sp, _ = self.frame(u)
        total = 0.0
        for a, wa in zip(th, wth):
            xa = x0[0] + eps * a * n0[0]
            P = Y[:, None, :] + eps * a * s[None, :, None] * nu[:, None, :]
            r = np.linalg.norm(xa - P, axis=-1)
            dG = np.abs(green_radial_derivative(-kappa**2, r, 2))
            total += wa * np.einsum("i,j,ij->", wu * sp, ws, dG)
        return float(total)

    # measures ------------------------------------------------------------------

    def _inside_intervals(self, x, radius, n=4096):
        """Parameter intervals where |phi(u) - x| < radius, with refined endpoints."""
        W = self.hi - self.lo
        u = self.lo + W * np.arange(n + 1) / n
        if self.closed:
            u = u[:-1]
        X = self.frame(u)[0]
        f = np.sum((X - x) ** 2, axis=1) - radius**2

        def g(v):
            return float(np.sum((self.frame([v])[0][0] - x) ** 2) - radius**2)

        inside = f < 0
        if not inside.any():
            return []
        if inside.all():
            return [(self.lo, self.hi)]
        idx = np.arange(len(u))
        nxt = (idx + 1) % len(u) if self.closed else np.minimum(idx + 1, len(u) - 1)
        up = np.where(inside & ~inside[nxt])[0]      # leaves the ball after u[k]
        down = np.where(~inside & inside[nxt])[0]    # enters the ball after u[k]
        step = W / n

        def root(k):
            a = u[k]
            b = a + step
            return optimize.brentq(g, a, b, xtol=1e-14)

        exits = sorted(root(k) for k in up)
        entries = sorted(root(k) for k in down)
        if not self.closed:
            if inside[0]:
                entries = [self.lo] + entries
            if inside[-1]:
                exits = exits + [self.hi]
        else:
            if exits and entries and exits[0] < entries[0]:
                exits = exits[1:] + [exits[0] + W]
        return list(zip(entries, exits))

    def ball_surface_measure(self, x, r0):
        total = 0.0
        xg, wg = gauss_legendre(24)
        for a, b in self._inside_intervals(x, r0):
            v = a + 0.5 * (b - a) * (xg + 1)
            total += 0.5 * (b - a) * np.sum(wg * self.frame(v)[2])
        return float(total)

    def ball_layer_measure(self, x, r0, eps, n_panel=64):
        """Lebesgue measure of Omega_eps intersected with B(x, r0)."""
        total = 0.0
        for a, b in self._inside_intervals(x, r0 + eps):
            pad = 2 * (self.hi - self.lo) / 4096
            a, b = a - pad, b + pad
            if not self.closed:
                a, b = max(a, self.lo), min(b, self.hi)
            v, wv = composite_gauss(np.linspace(a, b, n_panel + 1), PANEL_ORDER)
            Y, nu, sp, mu = self.frame(v)
            p = Y - x
            pn = np.sum(p * nu, axis=1)
            disc = pn**2 - np.sum(p * p, axis=1) + r0**2
            root = np.sqrt(np.maximum(disc, 0.0))
            lo_t = np.clip(-pn - root, -eps, eps)
            hi_t = np.clip(-pn + root, -eps, eps)
            prim = lambda t: t - 0.5 * mu * t**2
            inner = np.where(disc > 0, prim(hi_t) - prim(lo_t), 0.0)
            total += np.sum(wv * sp * inner)
        return float(total)

    def weingarten_product(self, eps, s, n=512):
        """max over nodes of |1 - prod_k (1 - eps s mu_k)|."""
        u = self.lo + (self.hi - self.lo) * (np.arange(n) + 0.5) / n
        mu = self.frame(u)[3]
        return float(np.max(np.abs(eps * np.outer(s, mu))))   # d = 2: det = 1 - eps s mu


class SphereProbe:
    """Sphere of radius R; targets are placed on the polar axis."""

    d = 3

    def __init__(self, surface):
        if not surface.is_sphere:
            raise GeometryError("SphereProbe needs the sphere")
        self.surface = surface
        self.R = float(surface.params["R"])
        self.closed = True

    def max_curvature(self):
        return 1.0 / self.R

    def samples(self, offsets, n_pos, rng, n_random):
        """(rho, None, t) with rho = R + t the signed axis coordinate of the target."""
        out = [(self.R + t, None, t) for t in offsets]
        if n_random:
            for rho in rng.uniform(-2 * self.R, 2 * self.R, size=n_random):
                out.append((float(rho), None, float("nan")))
        return out

    def _theta_rule(self, rho):
        # the target is nearest the north pole for rho > 0 and the south pole otherwise
        return _graded_rule(0.0, np.pi, [0.0 if rho >= 0 else np.pi])

    def _dist(self, rho, th, rad):
        # (rho - rad)^2 + 4 rho rad sin^2(th / 2): no cancellation near the pole
        return np.sqrt(np.maximum((rho - rad) ** 2 + 4 * rho * rad * np.sin(0.5 * th) ** 2, 0.0))

    def surface_integral(self, kappa, rho, _u0=None):
        th, w = self._theta_rule(rho)
        r = self._dist(rho, th, self.R)
        return float(2 * np.pi * self.R**2 * np.sum(w * np.sin(th)
                                                    * green_radial(-kappa**2, r, 3)))

    def layer_integral(self, kappa, rho, _u0, t0, eps):
        th, wth = self._theta_rule(rho)
        t0 = 0.0 if np.isnan(t0) else t0
        t, wt = _graded_rule(-eps, eps, [t0])
        rad = self.R + t
        r = self._dist(rho, th[:, None], rad[None, :])
        f = np.sin(th)[:, None] * rad[None, :] ** 2 * green_radial(-kappa**2, r, 3)
        return float(2 * np.pi * np.einsum("i,j,ij->", wth, wt, f))

    def shift_surface_difference(self, kappa, rho, _u0, t0, eps):
        th, wth = self._theta_rule(rho)
        t0 = 0.0 if np.isnan(t0) else t0
        s, ws = _graded_rule(-1.0, 1.0, [t0 / eps, 0.0])
        lam = -kappa**2
        g0 = green_radial(lam, self._dist(rho, th, self.R), 3)
        g1 = green_radial(lam, self._dist(rho, th[:, None], self.R + eps * s[None, :]), 3)
        f = np.sin(th)[:, None] * np.abs(g1 - g0[:, None])
        return float(2 * np.pi * self.R**2 * np.einsum("i,j,ij->", wth, ws, f))

    def gradient_constant_path(self, kappa, rho, _u0, t0, eps):
        th, wth = self._theta_rule(rho)
        t0 = 0.0 if np.isnan(t0) else t0
        z, wz = _graded_rule(-1.0, 1.0, [0.0, t0 / eps])
        r = self._dist(rho, th[:, None], self.R + eps * z[None, :])
        dG = np.abs(green_radial_derivative(-kappa**2, r, 3))
        f = np.sin(th)[:, None] * dG
        return float(2 * np.pi * self.R**2
                     * np.einsum("i,j,ij->", wth, wz * -np.log(np.abs(z)), f))

    def gradient_linear_path(self, kappa, _u0, eps):
        th, wth = self._theta_rule(1.0)
        s, ws = _graded_rule(-1.0, 1.0, [1.0])
        a, wa = _graded_rule(0.0, 1.0, [0.0], levels=8)
        total = 0.0
        for ak, wk in zip(a, wa):
            r = self._dist(self.R + eps * ak, th[:, None], self.R + eps * ak * s[None, :])
            dG = np.abs(green_radial_derivative(-kappa**2, r, 3))
            total += wk * np.einsum("i,j,ij->", wth, ws, np.sin(th)[:, None] * dG)
        return float(2 * np.pi * self.R**2 * total)

    def _cap_fraction(self, rho, rad, r0):
        """1 - cos(theta_c): the polar cap of the sphere |y| = rad inside B(rho e_z, r0)."""
        rho = np.abs(rho)
        with np.errstate(divide="ignore", invalid="ignore"):
            c = (rho**2 + rad**2 - r0**2) / (2 * rho * rad)
        c = np.where(rho * rad > 0, c, np.where(rad < r0 - rho, -1.0, 1.0))
        return 1 - np.clip(c, -1.0, 1.0)

    def ball_surface_measure(self, rho, r0):
        return float(2 * np.pi * self.R**2 * self._cap_fraction(rho, self.R, r0))

    def ball_layer_measure(self, rho, r0, eps):
        a, b = self.R - eps, self.R + eps
        kinks = [abs(rho) - r0, abs(rho) + r0, r0 - abs(rho)]
        br = np.unique([a, b] + [k for k in kinks if a < k < b])
        rad, w = composite_gauss(br, 24)
        return float(np.sum(w * 2 * np.pi * rad**2 * self._cap_fraction(rho, rad, r0)))

    def weingarten_product(self, eps, s):
        k = np.asarray(s) * eps / self.R
        return float(np.max(np.abs(1 - (1 - k) ** 2)))


def make_probe(surface):
    if surface.is_curve:
        return CurveProbe(surface)
    if surface.is_sphere:
        return SphereProbe(surface)
    raise GeometryError(f"no estimate integrator for {surface.name}")


def default_eps(beta=0.3):
    return [f * beta for f in DEFAULT_EPS_FRACTIONS]


def sample_offsets(kappa, eps):
    base = [0.0, 0.5 * eps, eps, 2 * eps, 1 / kappa, 3 / kappa]
    return sorted(set(base + [-t for t in base[1:]]))


def _shape_name(surface):
    return surface.params.get("kind", surface.name)


# ----------------------------------------------------------------------------
# the checks

def check_surface_kernel_sup(surface, lambdas, eps=0.06, thresholds=EstimateThresholds(),
                             n_pos=4, n_random=8, seed=0):
    """sup_x int_Sigma |G(x - y)| dsigma(y) against the (-lambda)^{-1/2} decay.

    Row ratios are C(lambda) / (C(lambda_0) (lambda_0 / lambda)^{1/2}) with
    lambda_0 the first entry; the check passes if every ratio is within the
    factor thresholds.sup_ratio_factor of 1 and every maximizer lies on Sigma.
    """
    probe = make_probe(surface)
    rng = np.random.default_rng(seed)
    shape = _shape_name(surface)
    values, argmax = [], []
    for lam in lambdas:
        kappa = _kappa(lam)
        smp = probe.samples(sample_offsets(kappa, eps), n_pos, rng, n_random)
        vals = [probe.surface_integral(kappa, x, u0) for x, u0, _ in smp]
        k = int(np.argmax(vals))
        values.append(vals[k])
        argmax.append(smp[k][2])
    lam0 = lambdas[0]
    env = [values[0] * np.sqrt(lam0 / lam) for lam in lambdas]
    f = thresholds.sup_ratio_factor
    spacing = 0.5 * eps
    rows, ok = [], True
    for lam, v, e, t in zip(lambdas, values, env, argmax):
        r = v / e
        good = (1 / f <= r <= f) and (not np.isnan(t)) and abs(t) < spacing
        ok &= good
        rows.append(EstimateRow("surface_kernel_sup", shape, lam, float("nan"), float("nan"),
                                v, e, r, good))
    return EstimateReport("surface_kernel_sup", shape, rows, bool(ok),
                          {"argmax_offset": argmax})


def check_layer_kernel_scaling(surface, eps_list, lam, thresholds=EstimateThresholds(),
                               n_pos=4, n_random=4, seed=0):
    """sup_x int_{Omega_eps} |G(x - y)| dy / eps stays bounded and decays linearly."""
    probe = make_probe(surface)
    rng = np.random.default_rng(seed)
    shape = _shape_name(surface)
    kappa = _kappa(lam)
    values = []
    for eps in eps_list:
        smp = probe.samples(sample_offsets(kappa, eps), n_pos, rng, n_random)
        values.append(max(probe.layer_integral(kappa, x, u0, t, eps) for x, u0, t in smp))
    eps_arr = np.asarray(eps_list, float)
    ratios, spread = ratio_spread(values, eps_arr)
    slope = loglog_slope(eps_arr, values)
    ok = spread < thresholds.sup_ratio_factor and slope >= thresholds.slope_min
    rows = [EstimateRow("layer_kernel_scaling", shape, lam, e, float("nan"), v, e, r, bool(ok))
            for e, v, r in zip(eps_list, values, ratios)]
    return EstimateReport("layer_kernel_scaling", shape, rows, bool(ok),
                          {"slope": slope, "spread": spread})


def check_ball_measure_bounds(surface, r0_list, eps_list, thresholds=EstimateThresholds(),
                              n_pos=4, n_random=8, seed=0):
    """Surface and layer measure of balls against r0^{d-1} and eps r0^{d-1}.

    Returns two reports: the surface measure (power-law exponent in r0) and
    the layer measure (bounded ratio over the (eps, r0) sweep, linear in eps
    at the largest r0).
    """
    probe = make_probe(surface)
    d = probe.d
    rng = np.random.default_rng(seed)
    shape = _shape_name(surface)
    r0_arr = np.asarray(r0_list, float)
    eps_max = max(eps_list)
    smp = probe.samples([0.0, 0.5 * eps_max, eps_max, 0.5], n_pos, rng, n_random)

    surf = np.array([max(probe.ball_surface_measure(x, r0) for x, _, _ in smp) for r0 in r0_arr])
    env = r0_arr ** (d - 1)
    ratios, spread = ratio_spread(surf, env)
    expo = loglog_slope(r0_arr, surf)
    ok_s = expo >= d - 1 - thresholds.exponent_tol and spread <= thresholds.ratio_factor
    rows_s = [EstimateRow("ball_measure_surface", shape, float("nan"), float("nan"), r0, v, e,
                          r, bool(ok_s)) for r0, v, e, r in zip(r0_arr, surf, env, ratios)]

    layer = np.array([[max(probe.ball_layer_measure(x, r0, eps) for x, _, _ in smp)
                       for r0 in r0_arr] for eps in eps_list])
    env_l = np.outer(eps_list, env)
    rat_l, spread_l = ratio_spread(layer.ravel(), env_l.ravel())
    eps_slope = loglog_slope(eps_list, layer[:, -1])
    ok_l = spread_l <= thresholds.ratio_factor and eps_slope >= thresholds.slope_min
    rows_l = []
    for i, eps in enumerate(eps_list):
        for k, r0 in enumerate(r0_arr):
            rows_l.append(EstimateRow("ball_measure_layer", shape, float("nan"), eps, r0,
                                      layer[i, k], env_l[i, k], rat_l[i * len(r0_arr) + k],
                                      bool(ok_l)))
    return (EstimateReport("ball_measure_surface", shape, rows_s, bool(ok_s),
                           {"exponent": expo, "spread": spread}),
            EstimateReport("ball_measure_layer", shape, rows_l, bool(ok_l),
                           {"eps_slope": eps_slope, "spread": spread_l}))


def shift_difference_integral(kappa, h, d):
    """int_{R^d} |G(z - h e) - G(z)| dz by polar quadrature around the shifted pole.

    The integrand is sign-definite on each side of the bisecting hyperplane
    and symmetric under reflection in it, so twice the integral over the
    half-space z.e > h/2 of G(z - h e) - G(z) is computed.
    """
    if h == 0:
        return 0.0
    lam = -kappa**2
    rho_cut = h + 40.0 / kappa
    phi_c = np.arccos(-h / (2 * rho_cut))
    ph1, w1 = _graded_rule(0.0, np.pi / 2, [np.pi / 2], levels=4)
    ph2, w2 = _graded_rule(np.pi / 2, phi_c, [np.pi / 2], levels=10)
    ph3, w3 = _graded_rule(phi_c, np.pi, [phi_c], levels=4)
    phis = np.concatenate([ph1, ph2, ph3])
    wph = np.concatenate([w1, w2, w3])
    total = 0.0
    for ph, wp in zip(phis, wph):
        c = np.cos(ph)
        top = rho_cut if c >= 0 else min(rho_cut, h / (2 * -c))
        br = np.unique(np.concatenate([[0.0, top], np.minimum(top, h * 4.0 ** -np.arange(12)),
                                       np.minimum(top, np.geomspace(h, rho_cut, 24))]))
        rho, wr = composite_gauss(br, PANEL_ORDER)
        dist0 = np.sqrt(np.maximum(h**2 + rho**2 + 2 * h * rho * c, 0.0))
        f = green_radial(lam, rho, d) - green_radial(lam, dist0, d)
        if d == 2:
            total += wp * np.sum(wr * rho * f)
        else:
            total += wp * 2 * np.pi * np.sin(ph) * np.sum(wr * rho**2 * f)
    # the phi integral covers [0, pi]; in 2-D the lower half-plane doubles it
    return float(2 * (2 * total if d == 2 else total))


def check_shift_difference_bounds(surface, eps_list, lam, thresholds=EstimateThresholds(),
                                  n_pos=4, n_random=4, seed=0, s_samples=(0.25, 0.5, 1.0)):
    """The two difference bounds: whole-space (linear in eps) and surface (eps(1+|ln eps|)).

    Returns (whole-space report, surface report).
    """
    probe = make_probe(surface)
    d = probe.d
    rng = np.random.default_rng(seed)
    shape = _shape_name(surface)
    kappa = _kappa(lam)
    eps_arr = np.asarray(eps_list, float)

    vol = np.array([max(shift_difference_integral(kappa, e * s, d) for s in s_samples)
                    for e in eps_arr])
    ratios, _ = ratio_spread(vol, eps_arr)
    slope = loglog_slope(eps_arr, vol)
    step = (vol[1:] / vol[:-1]) / (eps_arr[1:] / eps_arr[:-1])
    lo, hi = thresholds.halving
    ok_v = slope >= thresholds.slope_min and np.all((step >= 2 * lo) & (step <= 2 * hi))
    rows_v = [EstimateRow("shift_difference", shape, lam, e, float("nan"), v, e, r, bool(ok_v))
              for e, v, r in zip(eps_arr, vol, ratios)]

    surf = []
    for eps in eps_arr:
        smp = probe.samples(sample_offsets(kappa, eps), n_pos, rng, n_random)
        surf.append(max(probe.shift_surface_difference(kappa, x, u0, t, eps)
                        for x, u0, t in smp))
    env = envelope("eps_log", eps_arr)
    ratios_s, spread = ratio_spread(surf, env)
    ok_s = spread <= thresholds.ratio_factor
    rows_s = [EstimateRow("shift_surface_difference", shape, lam, e, float("nan"), v, en, r,
                          bool(ok_s)) for e, v, en, r in zip(eps_arr, surf, env, ratios_s)]
    return (EstimateReport("shift_difference", shape, rows_v, bool(ok_v),
                           {"slope": slope, "normalized_steps": step.tolist()}),
            EstimateReport("shift_surface_difference", shape, rows_s, bool(ok_s),
                           {"slope": loglog_slope(eps_arr, surf), "spread": spread}))


def check_gradient_logbound(surface, eps_list, lam, thresholds=EstimateThresholds(),
                            n_pos=2, far=1.0):
    """Triple integral of |grad G| along constant and linear paths against 1 + |ln eps|.

    Returns (log-bound report, far-field report). The far-field target sits at
    normal distance `far` from Sigma, where the value must not depend on eps.
    """
    probe = make_probe(surface)
    shape = _shape_name(surface)
    kappa = _kappa(lam)
    eps_arr = np.asarray(eps_list, float)
    rng = np.random.default_rng(0)
    env = envelope("log", eps_arr)

    const = []
    for eps in eps_arr:
        smp = probe.samples([0.0, 0.5 * eps, eps], n_pos, rng, 0)
        const.append(max(probe.gradient_constant_path(kappa, x, u0, t, eps) for x, u0, t in smp))
    u_lin = None if isinstance(probe, SphereProbe) else probe.positions(n_pos)[0]
    linear = [probe.gradient_linear_path(kappa, u_lin, eps) for eps in eps_arr]

    rows, ok = [], True
    details = {}
    for path, vals in (("constant", const), ("linear", linear)):
        ratios, spread = ratio_spread(vals, env)
        good = spread <= thresholds.ratio_factor
        ok &= good
        details[f"{path}_spread"] = spread
        rows += [EstimateRow(f"gradient_log_bound:{path}", shape, lam, e, float("nan"), v, en,
                             r, bool(good)) for e, v, en, r in zip(eps_arr, vals, env, ratios)]

    (xf, uf, _), = probe.samples([far], 1, rng, 0)
    farv = np.array([probe.gradient_constant_path(kappa, xf, uf, far, eps) for eps in eps_arr])
    rel = farv / farv[0]
    ok_f = bool(np.all(np.abs(rel - 1) <= thresholds.far_tol))
    rows_f = [EstimateRow("gradient_far_field", shape, lam, e, far, v, farv[0], r, ok_f)
              for e, v, r in zip(eps_arr, farv, rel)]
    return (EstimateReport("gradient_log_bound", shape, rows, bool(ok), details),
            EstimateReport("gradient_far_field", shape, rows_f, ok_f, {"distance": far}))


def check_weingarten_product(surface, eps_list, n_s=41):
    """max |1 - det(1 - eps s W)| / eps against 2 max|mu| (d - 1)."""
    probe = make_probe(surface)
    shape = _shape_name(surface)
    s = np.linspace(-1, 1, n_s)
    bound = 2 * probe.max_curvature() * (probe.d - 1)
    rows, ok = [], True
    for eps in eps_list:
        v = probe.weingarten_product(eps, s) / eps
        good = v <= bound
        ok &= good
        rows.append(EstimateRow("weingarten_product", shape, float("nan"), eps, float("nan"),
                                v, bound, v / bound, bool(good)))
    return EstimateReport("weingarten_product", shape, rows, bool(ok))


def run_battery(surface, lambdas=(-1.0, -4.0), eps_list=None, r0_list=(0.05, 0.1, 0.2, 0.4),
                thresholds=EstimateThresholds(), seed=0):
    """All estimate checks for one shape; returns the list of reports."""
    eps_list = default_eps() if eps_list is None else list(eps_list)
    reports = [check_surface_kernel_sup(surface, list(lambdas), max(eps_list), thresholds,
                                        seed=seed)]
    for lam in lambdas:
        reports.append(check_layer_kernel_scaling(surface, eps_list, lam, thresholds, seed=seed))
        reports.extend(check_shift_difference_bounds(surface, eps_list, lam, thresholds,
                                                     seed=seed))
        reports.extend(check_gradient_logbound(surface, eps_list, lam, thresholds))
    reports.extend(check_ball_measure_bounds(surface, list(r0_list), eps_list, thresholds,
                                             seed=seed))
    reports.append(check_weingarten_product(surface, eps_list))
    return reports
