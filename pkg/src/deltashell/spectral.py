"""Discrete eigenvalues below the essential spectrum from the Birman-Schwinger principle.

lambda < threshold is an eigenvalue of the delta-interaction (resp. of H_eps)
iff 1 is an eigenvalue of the symmetrized operator alpha^{1/2} M(lambda)
alpha^{1/2} (resp. B_eps(lambda)). The eigenvalues mu_k(lambda) of these
operators decrease as lambda decreases, so the number of eigenvalues below
lambda equals #{k : mu_k(lambda) > 1}, and each one is the root of one branch.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, optimize
from scipy.sparse.linalg import eigsh

from .geometry import GeometryError, broken_line, build_quadrature
from .operators import layer_kernel, _kappa, _layer_det
from .potential import ParameterError, TransversePotential, product_grid, profile_functions
from .quadrature import gauss_legendre

ROOT_XTOL = 1e-11
CLUSTER_RTOL = 1e-7
DENSE_EIG_MAX = 1500


class TruncationWarning(UserWarning):
    """A bound state carries noticeable mass near the ends of a truncated curve."""


@dataclass
class SpectralReport:
    """Eigenvalues below `threshold`, ascending, with Birman-Schwinger branch data."""

    eigenvalues: np.ndarray
    threshold: float
    residuals: np.ndarray
    multiplicities: np.ndarray
    window: tuple
    branch: np.ndarray = field(default_factory=lambda: np.zeros(0, int))
    monotone: bool = True
    label: str = ""

    @property
    def count(self):
        """Number of eigenvalues counted with multiplicity."""
        return int(np.sum(self.multiplicities))

    @property
    def distinct(self):
        return len(self.eigenvalues)

    def rows(self):
        return [{"index": i, "lambda": float(lam), "kappa": float(np.sqrt(-lam)),
                 "multiplicity": int(m), "residual": float(r), "threshold": self.threshold}
                for i, (lam, m, r) in enumerate(zip(self.eigenvalues, self.multiplicities,
                                                   self.residuals))]


def essential_threshold(surface, alpha):
    """0 for compact Sigma; -alpha^2/4 for a truncated line-like curve with coupling alpha."""
    if surface.closed:
        return 0.0
    a = float(np.max(np.asarray(alpha)))
    return -0.25 * a * a


def _top_eigenvalues(S, k):
    """k largest eigenvalues of the symmetric matrix S, descending."""
    n = S.shape[0]
    k = min(k, n)
    if n <= DENSE_EIG_MAX or k >= n - 1:
        vals = linalg.eigvalsh(S, subset_by_index=[n - k, n - 1], check_finite=False)
    else:
        v0 = np.ones(n) / np.sqrt(n)
        vals = eigsh(S, k=k, which="LA", v0=v0, return_eigenvectors=False, tol=1e-13)
    return np.sort(vals)[::-1]


def _count_above_one(S):
    vals = linalg.eigvalsh(S, subset_by_value=[1.0, np.inf], check_finite=False)
    return len(vals)


class _BirmanSchwinger:
    """lambda -> symmetrized Birman-Schwinger matrix, with a small cache."""

    def __init__(self, builder):
        self._builder = builder
        self._cache = {}

    def matrix(self, lam):
        key = float(lam)
        if key not in self._cache:
            if len(self._cache) > 8:
                self._cache.clear()
            S = self._builder(key)
            self._cache[key] = 0.5 * (S + S.T)
        return self._cache[key]

    def branch(self, lam, k):
        """mu_k(lambda), k = 0 the largest."""
        return _top_eigenvalues(self.matrix(lam), k + 1)[k]

    def count(self, lam):
        return _count_above_one(self.matrix(lam))


def _check_window(window, threshold):
    lo, hi = map(float, window)
    if not lo < hi:
        raise ParameterError(f"empty lambda window {window}")
    if hi >= threshold:
        raise ParameterError(f"window upper end {hi} must lie below the threshold {threshold}")
    return lo, hi


def _solve(bs, window, threshold, label, n_scan=9):
    lo, hi = _check_window(window, threshold)
    n_hi, n_lo = bs.count(hi), bs.count(lo)
    roots, branches = [], []
    for k in range(n_lo, n_hi):
        # mu_k(lo) <= 1 < mu_k(hi): one crossing of branch k inside the window
        f = lambda lam, k=k: bs.branch(lam, k) - 1.0
        roots.append(optimize.brentq(f, lo, hi, xtol=ROOT_XTOL, rtol=4 * np.finfo(float).eps))
        branches.append(k)
    roots = np.asarray(roots)
    residuals = np.array([abs(bs.branch(r, k) - 1.0) for r, k in zip(roots, branches)])

    # sampled monotonicity of mu_max along the window
    grid = -np.geomspace(-lo, -hi, n_scan) if hi < 0 else np.linspace(lo, hi, n_scan)
    mu = np.array([bs.branch(x, 0) for x in grid])
    monotone = bool(np.all(np.diff(mu) * np.sign(grid[1] - grid[0]) > -1e-12))

    vals, mult, res, br = _cluster(roots, residuals, np.asarray(branches, int))
    return SpectralReport(vals, threshold, res, mult, (lo, hi), br, monotone, label)


def _cluster(roots, residuals, branches):
    if len(roots) == 0:
        return np.zeros(0), np.zeros(0, int), np.zeros(0), np.zeros(0, int)
    order = np.argsort(roots)
    roots, residuals, branches = roots[order], residuals[order], branches[order]
    vals, mult, res, br = [roots[0]], [1], [residuals[0]], [branches[0]]
    for r, e, b in zip(roots[1:], residuals[1:], branches[1:]):
        if abs(r - vals[-1]) <= CLUSTER_RTOL * max(1.0, abs(r)):
            mult[-1] += 1
            res[-1] = max(res[-1], e)
        else:
            vals.append(r)
            mult.append(1)
            res.append(e)
            br.append(b)
    return np.array(vals), np.array(mult), np.array(res), np.array(br)


def node_coupling(quad, alpha):
    """alpha on the nodes, tapered at the ends of open curves."""
    a = np.broadcast_to(np.asarray(alpha, dtype=float), (quad.n,)).copy()
    taper = quad.surface.taper
    if taper is not None and not quad.surface.closed:
        a *= taper(quad.param[:, 0])
    return a


def delta_eigenvalues(quad, alpha, window, threshold=None):
    """Eigenvalues of the delta-interaction with coupling alpha >= 0 inside `window`.

    `quad` must be a rule the layer kernel supports (curves, or the sphere
    product rule).
    """
    a_nodes = node_coupling(quad, alpha)
    if np.any(a_nodes < 0):
        raise ParameterError("the eigenvalue search needs alpha >= 0")
    if threshold is None:
        threshold = essential_threshold(quad.surface, alpha)
    if not np.any(a_nodes):
        lo, hi = _check_window(window, threshold)
        return SpectralReport(np.zeros(0), threshold, np.zeros(0), np.zeros(0, int), (lo, hi),
                              label="delta")
    s = np.sqrt(a_nodes * quad.weights)

    def build(lam):
        K = layer_kernel(quad, _kappa(lam), [0.0], [0.0]).reshape(quad.n, quad.n)
        return s[:, None] * (K / quad.weights[None, :]) * s[None, :]

    return _solve(_BirmanSchwinger(build), window, threshold, "delta")


def bs_density(quad, alpha, lam, k=0):
    """Normalized Birman-Schwinger eigenvector of branch k at lambda, as nodal density."""
    a_nodes = node_coupling(quad, alpha)
    s = np.sqrt(a_nodes * quad.weights)
    K = layer_kernel(quad, _kappa(lam), [0.0], [0.0]).reshape(quad.n, quad.n)
    S = s[:, None] * (K / quad.weights[None, :]) * s[None, :]
    n = S.shape[0]
    _, vec = linalg.eigh(0.5 * (S + S.T), subset_by_index=[n - 1 - k, n - 1 - k])
    return vec[:, 0]


def heps_eigenvalues(grid, V, eps, window, threshold=None):
    """Eigenvalues of H_eps = -Delta - V_eps with V >= 0 inside `window`.

    Uses the product-grid B_eps, made symmetric by the weights w omega
    det(1 - eps s W) of its natural inner product.
    """
    if not V.nonnegative:
        raise ParameterError("the eigenvalue search needs V >= 0")
    quad = grid.quad
    if threshold is None:
        threshold = essential_threshold(quad.surface, V.amplitude * V.beta
                                        * _profile_integral(V))
    u, _ = profile_functions(V, grid)
    if V.is_zero or not np.any(u):
        lo, hi = _check_window(window, threshold)
        return SpectralReport(np.zeros(0), threshold, np.zeros(0), np.zeros(0, int), (lo, hi),
                              label="heps")
    det = _layer_det(grid, eps)
    s = u * np.sqrt(det * grid.weights)
    off = eps * grid.t
    w_col = np.repeat(quad.weights, grid.nt)  # layer_kernel carries w_j' on its columns

    def build(lam):
        K = layer_kernel(quad, _kappa(lam), off, off).reshape(grid.n, grid.n)
        K /= w_col[None, :]
        return s[:, None] * K * s[None, :]

    return _solve(_BirmanSchwinger(build), window, threshold, f"heps eps={eps:g}")


def _profile_integral(V):
    t, om = gauss_legendre(32)
    return float(np.sum(om * V.q(t)))


@dataclass
class BrokenLineDemo:
    theta: float
    alpha: float
    delta: SpectralReport
    heps: SpectralReport
    edge_mass: float
    threshold: float

    @property
    def bound_state_below_threshold(self):
        return bool(np.any(self.delta.eigenvalues < self.threshold))


def broken_line_bound_state_demo(theta, alpha, L=40.0, delta_s=0.5, N=1024, eps=None,
                                 beta=0.3, nt=8, edge=0.75, window=None):
    """Bound states below -alpha^2/4 for a smoothed broken line truncated to arclength 2L.

    Reports the delta-interaction and (unless eps is None) H_eps with a box
    profile of the same coupling. Warns when the Birman-Schwinger density of
    the lowest state puts more than 1% of its mass where |s| > edge * L.
    """
    if not 0 < theta < np.pi / 2 + 1e-15:
        raise GeometryError("theta must lie in (0, pi/2]")
    surf = broken_line(theta, L, delta_s)
    quad = build_quadrature(surf, N)
    thr = -0.25 * alpha**2
    if window is None:
        window = (-1.2 * alpha**2, thr - 1e-9)
    rep = delta_eigenvalues(quad, alpha, window, thr)
    edge_mass = 0.0
    if rep.distinct:
        dens = bs_density(quad, alpha, rep.eigenvalues[0], 0)
        outer = np.abs(quad.param[:, 0]) > edge * L
        edge_mass = float(np.sum(dens[outer] ** 2) / np.sum(dens**2))
        if edge_mass > 0.01:
            warnings.warn(f"bound state has {100 * edge_mass:.1f}% of its mass near the "
                          f"truncation ends; increase L", TruncationWarning, stacklevel=2)
    if eps is None:
        hrep = SpectralReport(np.zeros(0), thr, np.zeros(0), np.zeros(0, int), tuple(window),
                              label="heps skipped")
    else:
        V = TransversePotential("box", alpha / beta, beta)
        hrep = heps_eigenvalues(product_grid(quad, nt), V, eps, window, thr)
    return BrokenLineDemo(float(theta), float(alpha), rep, hrep, edge_mass, thr)
