"""Dense operators between weighted grids, their norms, and the volume grid for L^2(R^d)."""

from dataclasses import dataclass

import numpy as np
from scipy import linalg
from scipy.sparse.linalg import LinearOperator, eigsh
from scipy.special import k1
from scipy.spatial import cKDTree

from .quadrature import gauss_legendre

DENSE_NORM_MAX = 1500


class GridError(ValueError):
    """Invalid grid: non-positive weights, or points too close to Sigma."""


@dataclass
class DiscreteOperator:
    """Matrix acting on nodal values, with the weights defining both L^2 inner products.

    (D f)_i = sum_j matrix[i, j] f_j, and ||f||^2 = sum_j w_in[j] |f_j|^2 on the
    domain (w_out on the codomain).
    """

    matrix: np.ndarray
    w_in: np.ndarray
    w_out: np.ndarray
    name: str = ""

    def __post_init__(self):
        n_out, n_in = self.matrix.shape
        if len(self.w_in) != n_in or len(self.w_out) != n_out:
            raise GridError(f"{self.name}: weights do not match the matrix shape")

    @property
    def shape(self):
        return self.matrix.shape

    def __matmul__(self, other):
        if isinstance(other, DiscreteOperator):
            return DiscreteOperator(self.matrix @ other.matrix, other.w_in, self.w_out,
                                    f"{self.name}*{other.name}")
        return self.matrix @ other

    def __sub__(self, other):
        return DiscreteOperator(self.matrix - other.matrix, self.w_in, self.w_out,
                                f"{self.name}-{other.name}")

    def __add__(self, other):
        return DiscreteOperator(self.matrix + other.matrix, self.w_in, self.w_out,
                                f"{self.name}+{other.name}")

    def normalized(self):
        """W_out^{1/2} D W_in^{-1/2}: its Euclidean 2-norm is the weighted operator norm."""
        _check_weights(self.w_in, self.w_out)
        return np.sqrt(self.w_out)[:, None] * self.matrix / np.sqrt(self.w_in)[None, :]

    def adjoint(self):
        """Weighted adjoint W_in^{-1} D^T W_out."""
        return DiscreteOperator(self.matrix.T * self.w_out[None, :] / self.w_in[:, None],
                                self.w_out, self.w_in, f"{self.name}*")

    def symmetry_defect(self):
        """Relative size of the antisymmetric part of the normalized matrix."""
        S = self.normalized()
        return float(np.max(np.abs(S - S.T)) / max(np.max(np.abs(S)), 1e-300))


def _check_weights(*ws):
    for w in ws:
        if np.any(~(np.asarray(w) > 0)):
            raise GridError("weights must be strictly positive")


def operator_norm(D, tol=1e-10):
    """Weighted operator norm: largest singular value of W_out^{1/2} D W_in^{-1/2}.

    Dense singular values up to DENSE_NORM_MAX rows and columns; beyond that Lanczos on
    the normal operator with a fixed start vector (deterministic).
    """
    S = D.normalized()
    if max(S.shape) <= DENSE_NORM_MAX:
        return float(linalg.svdvals(S, check_finite=False)[0])
    return _lanczos_norm(S, tol)


def _lanczos_norm(S, tol):
    n = S.shape[1]
    if S.shape[0] < n:
        S = S.T
        n = S.shape[1]
    op = LinearOperator((n, n), matvec=lambda x: S.T @ (S @ x), dtype=float)
    v0 = np.ones(n) / np.sqrt(n) + 1e-3 * np.cos(np.arange(n))
    val = eigsh(op, k=1, which="LA", tol=tol, v0=v0, return_eigenvectors=False)
    return float(np.sqrt(max(val[0], 0.0)))


def inverse_norm(D, tol=1e-10, lu=None):
    """||D^{-1}|| in the weighted norm, i.e. 1 / smallest singular value of the normalized matrix.

    Dense singular values up to DENSE_NORM_MAX; beyond that Lanczos on the
    inverse normal operator through an LU factorization of D.matrix (pass
    `lu` to reuse one).
    """
    if D.shape[0] != D.shape[1] or not np.array_equal(D.w_in, D.w_out):
        raise GridError("inverse_norm needs a square operator on one weighted space")
    n = D.shape[0]
    if n <= DENSE_NORM_MAX and lu is None:
        return 1.0 / float(linalg.svdvals(D.normalized(), check_finite=False)[-1])
    _check_weights(D.w_in)
    lu = linalg.lu_factor(D.matrix, check_finite=False) if lu is None else lu
    sw = np.sqrt(D.w_in)

    def apply(x):
        # S = W^{1/2} D W^{-1/2}; returns S^{-T} S^{-1} x
        y = sw * linalg.lu_solve(lu, x / sw, check_finite=False)
        return linalg.lu_solve(lu, y * sw, trans=1, check_finite=False) / sw

    op = LinearOperator((n, n), matvec=apply, dtype=float)
    v0 = np.ones(n) / np.sqrt(n) + 1e-3 * np.cos(np.arange(n))
    val = eigsh(op, k=1, which="LA", tol=tol, v0=v0, return_eigenvectors=False)
    return float(np.sqrt(max(val[0], 0.0)))


def schur_bound(D):
    """Schur-test bound sqrt(max_i sum_j |D_ij| * max_j sum_i |D_ij| w_out_i / w_in_j).

    This is the kernel bound sup-row times sup-column for the integral kernel
    D_ij / w_in_j, and it dominates operator_norm(D).
    """
    _check_weights(D.w_in, D.w_out)
    A = np.abs(D.matrix)
    rows = A.sum(axis=1).max()
    cols = ((D.w_out @ A) / D.w_in).max()
    return float(np.sqrt(rows * cols))


@dataclass
class VolumeGrid:
    """Uniform cell-centred grid on a box, with the cells near Sigma removed.

    `keep` marks the retained cells of the full tensor grid (shape `shape`);
    weights are cell volumes h^d. The weights of the retained cells plus the
    excluded volume add up to the box volume.
    """

    points: np.ndarray
    weights: np.ndarray
    h: float
    lo: np.ndarray
    shape: tuple
    keep: np.ndarray
    delta_vol: float
    min_distance: float

    @property
    def n(self):
        return len(self.weights)

    @property
    def d(self):
        return self.points.shape[1]

    @property
    def box_volume(self):
        return float(np.prod(np.asarray(self.shape) * self.h))

    @property
    def excluded_volume(self):
        return float((self.keep.size - self.keep.sum()) * self.h**self.d)

    def axes(self):
        return [self.lo[a] + self.h * (np.arange(self.shape[a]) + 0.5) for a in range(self.d)]


def distance_to_nodes(points, nodes):
    return cKDTree(nodes).query(points)[0]


def build_volume_grid(quad, kappa, reach, h=None, n_target=None, delta_vol=None, pad=6.0,
                      dense_nodes=None):
    """Volume grid on the bounding box of the tube of half-width `reach`, padded by pad/kappa.

    Cells whose centre lies within delta_vol of Sigma are dropped (default
    delta_vol = h / 2). `dense_nodes` (optional) is a finer sampling of Sigma
    used for the distance test.
    """
    nodes = quad.nodes if dense_nodes is None else dense_nodes
    lo = nodes.min(axis=0) - reach - pad / kappa
    hi = nodes.max(axis=0) + reach + pad / kappa
    d = nodes.shape[1]
    if h is None:
        if n_target is None:
            raise GridError("give a spacing h or a target point count")
        h = float((np.prod(hi - lo) / n_target) ** (1 / d))
    shape = tuple(int(np.ceil((hi[a] - lo[a]) / h)) for a in range(d))
    # centre the enlarged box on the requested one
    lo = 0.5 * (lo + hi) - 0.5 * h * np.asarray(shape)
    axes = [lo[a] + h * (np.arange(shape[a]) + 0.5) for a in range(d)]
    grids = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=-1)
    dv = 0.5 * h if delta_vol is None else float(delta_vol)
    dist = distance_to_nodes(pts, nodes)
    keep = dist > dv
    if not keep.any():
        raise GridError("volume grid is empty after exclusion")
    return VolumeGrid(pts[keep], np.full(keep.sum(), h**d), float(h), lo, shape,
                      keep.reshape(shape), dv, float(dist[keep].min()))


def cell_self_integral(kappa, h, d, n=32):
    """Integral of G_lambda over the cube [-h/2, h/2]^d centred at the singularity.

    Polar integration with the closed-form radial primitive; the angular
    integrals over the faces use Gauss rules.
    """
    if d == 2:
        # 8 congruent triangles: 0 <= theta <= pi/4, 0 <= r <= (h/2) / cos(theta)
        th, w = gauss_legendre(n, 0.0, np.pi / 4)
        rho = 0.5 * h / np.cos(th)
        radial = (1 - kappa * rho * k1(kappa * rho)) / kappa**2
        return float(8 * np.sum(w * radial) / (2 * np.pi))
    if d == 3:
        # 6 faces; on the face x = h/2 parametrize by (y, z) in [-h/2, h/2]^2
        y, wy = gauss_legendre(n, -0.5 * h, 0.5 * h)
        Y, Z = np.meshgrid(y, y, indexing="ij")
        W = np.outer(wy, wy)
        a = 0.5 * h
        rho = np.sqrt(a**2 + Y**2 + Z**2)
        # solid-angle element on the face: a / rho^3 dy dz
        radial = (1 - (1 + kappa * rho) * np.exp(-kappa * rho)) / (4 * np.pi * kappa**2)
        return float(6 * np.sum(W * radial * a / rho**3))
    raise GridError("cell self-integral implemented for d = 2, 3")
