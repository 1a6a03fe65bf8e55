"""Discretized boundary and layer operators and the two resolvent formulas.

Layer kernels. For curves, the kernel between the offset points
X = x_j + t nu_j and Y = x_j' + s nu_j' is integrated in the periodic curve
parameter with the split

    G = -(1/4pi) (1 + kappa^2 r^2 / 4) ln Q + smooth,
    Q(D) = delta^2 + 4 b sin^2(D / 2),  delta = |t - s|,
    b = |phi'|^2 (1 - t L)(1 - s L)   (at the target node),

where D is the parameter offset. Q matches |X - Y|^2 to second order at the
closest point (exactly for concentric circles), both ln Q and (1 - cos D) ln Q
integrate exactly against trigonometric polynomials, and the remainder is C^3.
For the sphere the kernel is rotation invariant between concentric shells and
is applied through its Funk-Hecke eigenvalues on a Gauss x trapezoid grid.
"""

import numpy as np
from scipy import linalg

from .discrete import (DiscreteOperator, GridError, cell_self_integral, distance_to_nodes,
                       operator_norm)
from .geometry import CurveLayout, GeometryError, HypothesisViolation, SphereLayout
from .kernels import SpectralParameter, green_radial
from .quadrature import gauss_legendre, log_split_parameters, periodic_log_weights

SINGULAR_TOL = 1e-8


class SpectralParameterError(ValueError):
    """The spectral parameter is too close to the spectrum for the requested formula."""


def _kappa(lam):
    return SpectralParameter(float(lam)).kappa


# ----------------------------------------------------------------------------
# layer kernels on Sigma-rules

def _curve_layer_kernel(quad, kappa, toff, soff):
    lay = quad.layout
    N = lay.N
    speed = lay.speed
    Lc = quad.L[:, 0, 0]
    x, nu = quad.nodes, quad.normals
    toff, soff = np.asarray(toff, float), np.asarray(soff, float)

    delta2 = (toff[:, None] - soff[None, :]) ** 2
    b = (speed**2)[:, None, None] * (1 - toff[None, :, None] * Lc[:, None, None]) \
        * (1 - soff[None, None, :] * Lc[:, None, None])
    if np.any(b <= 0):
        raise GeometryError("offset exceeds the local radius of curvature")
    q, C = log_split_parameters(delta2[None], b)
    W0, W1 = periodic_log_weights(q, C, N)  # (N, nt, ns, N) by offset index l

    j = np.arange(N)
    lidx = (j[None, :] - j[:, None]) % N
    P0 = W0[j[:, None], :, :, lidx].transpose(0, 2, 1, 3)  # (N, nt, N, ns)
    del W0
    P1 = W1[j[:, None], :, :, lidx].transpose(0, 2, 1, 3)
    del W1

    S2 = np.sin(np.pi * lidx / N) ** 2  # sin^2(D/2)
    Q = delta2[None, :, None, :] + 4 * b[:, :, None, :] * S2[:, None, :, None]
    X = x[:, None, :] + toff[None, :, None] * nu[:, None, :]
    Y = x[:, None, :] + soff[None, :, None] * nu[:, None, :]
    r2 = (X[:, :, None, None, 0] - Y[None, None, :, :, 0]) ** 2 \
        + (X[:, :, None, None, 1] - Y[None, None, :, :, 1]) ** 2
    coincident = r2 == 0
    if np.any(coincident & (Q > 0)):
        raise GeometryError("distinct parameters map to the same point")
    a0 = -(1 + kappa**2 * delta2 / 4) / (4 * np.pi)
    a1 = -(kappa**2) * b / (8 * np.pi)
    a = a0[None, :, None, :] + a1[:, :, None, :] * (2 * S2[:, None, :, None])
    r = np.sqrt(np.where(coincident, 1.0, r2))
    with np.errstate(divide="ignore"):
        smooth = green_radial(-kappa**2, r, 2) - a * np.log(np.where(coincident, 1.0, Q))
    smooth[coincident] = (-np.log(kappa / 2) - np.euler_gamma) / (2 * np.pi)
    K = a0[None, :, None, :] * P0
    K += a1[:, :, None, :] * P1
    K += (2 * np.pi / N) * smooth
    K *= speed[None, None, :, None]
    return K


def _legendre_table(lmax, x):
    P = np.empty((lmax + 1,) + np.shape(x))
    P[0] = 1.0
    if lmax >= 1:
        P[1] = x
    for l in range(1, lmax):
        P[l + 1] = ((2 * l + 1) * x * P[l] - l * P[l - 1]) / (l + 1)
    return P


def sphere_shell_eigenvalues(kappa, R, r1, r2, lmax, n_r=None):
    """Funk-Hecke eigenvalues of f -> int_{|y|=R} G(r1 e - (r2/R) y) f(y) dsigma(y).

    lambda_l = (2 pi R^2 / (r1 r2)) int_{|r1 - r2|}^{r1 + r2} G(r) P_l(u(r)) r dr
    with u = (r1^2 + r2^2 - r^2) / (2 r1 r2); G(r) r = exp(-kappa r) / (4 pi)
    is smooth, so a plain Gauss rule is accurate.
    """
    r1, r2 = np.broadcast_arrays(np.asarray(r1, float), np.asarray(r2, float))
    n_r = n_r or max(48, lmax + 40)
    z, w = gauss_legendre(n_r)
    lo, hi = np.abs(r1 - r2), r1 + r2
    half = 0.5 * (hi - lo)
    rr = lo[..., None] + half[..., None] * (z + 1)
    u = (r1[..., None] ** 2 + r2[..., None] ** 2 - rr**2) / (2 * r1[..., None] * r2[..., None])
    P = _legendre_table(lmax, np.clip(u, -1, 1))
    integ = np.exp(-kappa * rr) / (4 * np.pi)
    vals = np.sum(P * (integ * w * half[..., None])[None], axis=-1)
    return np.moveaxis(vals * (2 * np.pi * R**2 / (r1 * r2))[None], 0, -1)


def _sphere_layer_kernel(quad, kappa, toff, soff):
    lay = quad.layout
    R, n = lay.R, quad.n
    lmax = lay.nlat - 1
    e = (quad.nodes - lay.center) / R
    cg = np.clip(e @ e.T, -1, 1)
    Pl = _legendre_table(lmax, cg)
    toff, soff = np.asarray(toff, float), np.asarray(soff, float)
    r1 = (R + toff)[:, None]
    r2 = (R + soff)[None, :]
    lam_l = sphere_shell_eigenvalues(kappa, R, r1, r2, lmax)  # (nt, ns, lmax+1)
    l = np.arange(lmax + 1)
    # addition theorem: sum_m Y_lm(e) Y_lm(e') = (2l+1)/(4 pi) P_l(e.e'); weights absorb R^2
    coef = lam_l * (2 * l + 1) / (4 * np.pi * R**2)
    nt, ns = len(toff), len(soff)
    K = (coef.reshape(nt * ns, lmax + 1) @ Pl.reshape(lmax + 1, n * n))
    K = K.reshape(nt, ns, n, n).transpose(2, 0, 3, 1)
    return K * quad.weights[None, None, :, None]


def layer_kernel(quad, kappa, toff, soff):
    """Kernel matrix K[j, m, j', m'] ~ G(x_j + t_m nu_j - x_j' - s_m' nu_j') w_j'.

    `toff`, `soff` are the (already eps-scaled) normal offsets of targets and
    sources. Sigma-weights are folded into the columns; transverse weights are not.
    """
    if isinstance(quad.layout, CurveLayout):
        return _curve_layer_kernel(quad, kappa, toff, soff)
    if isinstance(quad.layout, SphereLayout):
        return _sphere_layer_kernel(quad, kappa, toff, soff)
    raise GeometryError("layer operators need a curve rule or the sphere product rule")


# ----------------------------------------------------------------------------
# boundary operators

def assemble_M(lam, quad):
    """M(lambda) on the Sigma-grid: (M xi)(x) = int_Sigma G(x - y) xi(y) dsigma(y)."""
    K = layer_kernel(quad, _kappa(lam), [0.0], [0.0])
    n = quad.n
    return DiscreteOperator(K.reshape(n, n), quad.weights, quad.weights, "M")


def _kernel_block(kappa, d, X, Y):
    diff = X[:, None, :] - Y[None, :, :]
    r = np.sqrt(np.sum(diff**2, axis=-1))
    if np.any(r == 0):
        raise GridError("volume point coincides with a surface node")
    return green_radial(-kappa**2, r, d)


def _check_clearance(vgrid, sources, eps=0.0):
    dist = distance_to_nodes(vgrid.points, sources).min()
    if dist < vgrid.delta_vol * (1 - 1e-12):
        raise GridError(f"a volume point lies {dist:.3e} from Sigma, inside the exclusion "
                        f"margin {vgrid.delta_vol}")
    if eps > 0.5 * vgrid.delta_vol + 1e-14:
        raise GridError(f"layer half-width {eps} exceeds half the exclusion margin "
                        f"{vgrid.delta_vol}; rebuild the volume grid with a wider margin")


def assemble_gamma(lam, quad, vgrid):
    """gamma(lambda): Sigma-grid -> volume grid, entries G(y_k - x_j) w_j."""
    _check_clearance(vgrid, quad.nodes)
    Km = _kernel_block(_kappa(lam), quad.d, vgrid.points, quad.nodes)
    return DiscreteOperator(Km * quad.weights[None, :], quad.weights, vgrid.weights, "gamma")


def assemble_gamma_star(lam, quad, vgrid):
    """gamma(lambda)*: volume grid -> Sigma-grid, entries G(x_j - y_k) vw_k."""
    _check_clearance(vgrid, quad.nodes)
    Km = _kernel_block(_kappa(lam), quad.d, quad.nodes, vgrid.points)
    return DiscreteOperator(Km * vgrid.weights[None, :], vgrid.weights, quad.weights,
                            "gamma*")


def free_resolvent(lam, vgrid):
    """R(lambda) on the volume grid; the self cell uses the exact cell integral."""
    kappa = _kappa(lam)
    P = vgrid.points
    diff = P[:, None, :] - P[None, :, :]
    r = np.sqrt(np.sum(diff**2, axis=-1))
    np.fill_diagonal(r, 1.0)
    Rm = green_radial(lam, r, vgrid.d) * vgrid.weights[None, :]
    np.fill_diagonal(Rm, cell_self_integral(kappa, vgrid.h, vgrid.d))
    return DiscreteOperator(Rm, vgrid.weights, vgrid.weights, "R")


def free_resolvent_apply(lam, vgrid, f, chunk=2048):
    """R(lambda) f without forming the full matrix."""
    f = np.asarray(f, dtype=float)
    kappa = _kappa(lam)
    P, w = vgrid.points, vgrid.weights
    out = np.empty(vgrid.n)
    self_val = cell_self_integral(kappa, vgrid.h, vgrid.d)
    for a in range(0, vgrid.n, chunk):
        idx = np.arange(a, min(a + chunk, vgrid.n))
        r = np.sqrt(np.sum((P[idx, None, :] - P[None, :, :]) ** 2, axis=-1))
        r[np.arange(len(idx)), idx] = 1.0
        Km = green_radial(lam, r, vgrid.d)
        Km[np.arange(len(idx)), idx] = 0.0
        out[idx] = Km @ (w * f) + self_val * f[idx]
    return out


def krein_correction(lam, alpha, quad, vgrid, M=None, gamma=None, gamma_star=None):
    """gamma (1 - alpha M)^{-1} alpha gamma* as a volume-grid operator."""
    alpha = np.broadcast_to(np.asarray(alpha, dtype=float), (quad.n,))
    M = assemble_M(lam, quad) if M is None else M
    g = assemble_gamma(lam, quad, vgrid) if gamma is None else gamma
    gs = assemble_gamma_star(lam, quad, vgrid) if gamma_star is None else gamma_star
    I_aM = np.eye(quad.n) - alpha[:, None] * M.matrix
    _require_invertible(DiscreteOperator(I_aM, quad.weights, quad.weights), "1 - alpha M")
    X = linalg.solve(I_aM, alpha[:, None] * gs.matrix)
    return DiscreteOperator(g.matrix @ X, vgrid.weights, vgrid.weights, "krein")


def _require_invertible(D, label):
    S = D.normalized()
    smin = linalg.svdvals(S, check_finite=False)[-1]
    if smin < SINGULAR_TOL:
        raise SpectralParameterError(
            f"{label} is numerically singular (smallest singular value {smin:.3e}); "
            "lambda is too close to an eigenvalue, shift it")
    return smin


def krein_resolvent_apply(lam, alpha, quad, vgrid, f):
    """(A_{delta,alpha} - lambda)^{-1} f = R f + gamma (1 - alpha M)^{-1} alpha gamma* f."""
    f = np.asarray(f, dtype=float)
    alpha = np.broadcast_to(np.asarray(alpha, dtype=float), (quad.n,))
    out = free_resolvent_apply(lam, vgrid, f)
    if not np.any(alpha):
        return out
    M = assemble_M(lam, quad)
    I_aM = np.eye(quad.n) - alpha[:, None] * M.matrix
    _require_invertible(DiscreteOperator(I_aM, quad.weights, quad.weights), "1 - alpha M")
    gs = assemble_gamma_star(lam, quad, vgrid)
    g = assemble_gamma(lam, quad, vgrid)
    xi = linalg.solve(I_aM, alpha * (gs.matrix @ f))
    return out + g.matrix @ xi


# ----------------------------------------------------------------------------
# scaled-potential operators on the product grid

def _layer_det(grid, eps):
    det = grid.tube_jacobian(eps)
    eta = grid.quad.surface.eta
    if eta is not None and np.any((det <= 1 - eta) | (det >= 1 + eta)):
        raise HypothesisViolation(f"det(1 - eps s W) leaves (1 - eta, 1 + eta) for eta = {eta}")
    if np.any(det <= 0):
        raise HypothesisViolation("det(1 - eps s W) is not positive: eps exceeds the tube width")
    return det


def assemble_B_eps(lam, eps, grid, u, v):
    """B_eps(lambda) on the product grid (eps = 0 gives B_0).

    Entry [(j,m), (j',m')] = u_jm G(x_j + eps t_m nu_j - x_j' - eps s_m' nu_j')
    v_j'm' det(1 - eps s_m' W(x_j')) w_j' omega_m'.
    """
    quad = grid.quad
    off = eps * grid.t
    K = layer_kernel(quad, _kappa(lam), off, off).reshape(grid.n, grid.n)
    det = _layer_det(grid, eps)
    col = v * det * np.tile(grid.omega, quad.n)
    K *= u[:, None]
    K *= col[None, :]
    return DiscreteOperator(K, grid.weights, grid.weights, "B_eps")


def layer_points(grid, eps):
    """Offset points x_j + eps t_m nu_j on the flat product index."""
    quad = grid.quad
    P = quad.nodes[:, None, :] + eps * grid.t[None, :, None] * quad.normals[:, None, :]
    return P.reshape(-1, quad.d)


def assemble_A_eps(lam, eps, grid, v, vgrid):
    """A_eps(lambda): product grid -> volume grid."""
    _check_clearance(vgrid, grid.quad.nodes, eps)
    Y = layer_points(grid, eps)
    Km = _kernel_block(_kappa(lam), grid.quad.d, vgrid.points, Y)
    col = v * _layer_det(grid, eps) * grid.weights
    return DiscreteOperator(Km * col[None, :], grid.weights, vgrid.weights, "A_eps")


def assemble_C_eps(lam, eps, grid, u, vgrid):
    """C_eps(lambda): volume grid -> product grid."""
    _check_clearance(vgrid, grid.quad.nodes, eps)
    X = layer_points(grid, eps)
    Km = _kernel_block(_kappa(lam), grid.quad.d, X, vgrid.points)
    return DiscreteOperator(u[:, None] * Km * vgrid.weights[None, :], vgrid.weights,
                            grid.weights, "C_eps")


def surface_to_product(grid, u):
    """U-hat: xi on Sigma -> u(x, t) xi(x) on the product grid."""
    n, nt = grid.quad.n, grid.nt
    mat = np.zeros((n * nt, n))
    mat[np.arange(n * nt), np.repeat(np.arange(n), nt)] = u
    return DiscreteOperator(mat, grid.quad.weights, grid.weights, "U")


def product_to_surface(grid, v):
    """V-hat: f on the product grid -> int v(x, s) f(x, s) ds on Sigma."""
    n, nt = grid.quad.n, grid.nt
    mat = np.zeros((n, n * nt))
    mat[np.repeat(np.arange(n), nt), np.arange(n * nt)] = v * np.tile(grid.omega, n)
    return DiscreteOperator(mat, grid.weights, grid.quad.weights, "V")


def heps_correction(lam, eps, grid, u, v, vgrid, B=None, A=None, C=None, check_norm=True,
                    lu=None):
    """A_eps (1 - B_eps)^{-1} C_eps as a volume-grid operator.

    `lu` may carry a precomputed scipy.linalg.lu_factor of 1 - B_eps.
    """
    B = assemble_B_eps(lam, eps, grid, u, v) if B is None else B
    if check_norm:
        nb = operator_norm(B)
        if nb >= 1:
            raise SpectralParameterError(
                f"||B_eps(lambda)|| = {nb:.4f} >= 1; choose a more negative lambda")
    A = assemble_A_eps(lam, eps, grid, v, vgrid) if A is None else A
    C = assemble_C_eps(lam, eps, grid, u, vgrid) if C is None else C
    if lu is None:
        X = linalg.solve(np.eye(grid.n) - B.matrix, C.matrix, overwrite_a=False)
    else:
        X = linalg.lu_solve(lu, C.matrix, check_finite=False)
    return DiscreteOperator(A.matrix @ X, vgrid.weights, vgrid.weights, "heps")


def heps_resolvent_apply(lam, eps, grid, u, v, vgrid, f):
    """(H_eps - lambda)^{-1} f = R f + A_eps (1 - B_eps)^{-1} C_eps f."""
    f = np.asarray(f, dtype=float)
    out = free_resolvent_apply(lam, vgrid, f)
    if not np.any(u):
        return out
    B = assemble_B_eps(lam, eps, grid, u, v)
    nb = operator_norm(B)
    if nb >= 1:
        raise SpectralParameterError(
            f"||B_eps(lambda)|| = {nb:.4f} >= 1; choose a more negative lambda")
    cf = _apply_C(lam, eps, grid, u, vgrid, f)
    xi = linalg.solve(np.eye(grid.n) - B.matrix, cf)
    return out + _apply_A(lam, eps, grid, v, vgrid, xi)


def _apply_C(lam, eps, grid, u, vgrid, f, chunk=1024):
    _check_clearance(vgrid, grid.quad.nodes, eps)
    X = layer_points(grid, eps)
    kappa = _kappa(lam)
    wf = vgrid.weights * f
    out = np.empty(len(X))
    for a in range(0, len(X), chunk):
        out[a:a + chunk] = _kernel_block(kappa, grid.quad.d, X[a:a + chunk], vgrid.points) @ wf
    return u * out


def _apply_A(lam, eps, grid, v, vgrid, xi, chunk=1024):
    _check_clearance(vgrid, grid.quad.nodes, eps)
    Y = layer_points(grid, eps)
    kappa = _kappa(lam)
    col = v * _layer_det(grid, eps) * grid.weights * xi
    out = np.empty(vgrid.n)
    for a in range(0, vgrid.n, chunk):
        out[a:a + chunk] = _kernel_block(kappa, grid.quad.d, vgrid.points[a:a + chunk], Y) @ col
    return out
