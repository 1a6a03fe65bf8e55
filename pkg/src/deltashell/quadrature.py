"""Quadrature rules: Gauss-Legendre, graded panels and periodic log-product weights."""

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=64)
def _leggauss(n):
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_legendre(n, a=-1.0, b=1.0):
    """n-point Gauss-Legendre nodes and weights on [a, b]."""
    x, w = _leggauss(int(n))
    half = 0.5 * (b - a)
    return a + half * (x + 1), half * w


def composite_gauss(breaks, n):
    """Gauss-Legendre with n points on every panel [breaks[i], breaks[i+1]]."""
    breaks = np.asarray(breaks, dtype=float)
    x, w = _leggauss(int(n))
    lo, hi = breaks[:-1, None], breaks[1:, None]
    half = 0.5 * (hi - lo)
    nodes = lo + half * (x + 1)
    weights = half * w
    return nodes.ravel(), weights.ravel()


def graded_breaks(a, b, c, levels=14, ratio=0.25, extra=4):
    """Panel breakpoints on [a, b] refined geometrically towards c in [a, b].

    Panel sizes shrink by `ratio` per level; `extra` uniform panels cover the
    remainder of each side so smooth parts are also resolved.
    """
    pts = [a, b, c]
    for side_end in (a, b):
        length = abs(side_end - c)
        if length == 0:
            continue
        sgn = np.sign(side_end - c)
        scales = length * ratio ** np.arange(1, levels + 1)
        pts.extend(c + sgn * scales)
        pts.extend(c + sgn * length * np.arange(1, extra) / extra)
    pts = np.unique(np.clip(pts, min(a, b), max(a, b)))
    return pts


def graded_gauss(a, b, c, n=8, levels=14, ratio=0.25, extra=4):
    """Composite Gauss rule on [a, b] graded towards a singular point c."""
    return composite_gauss(graded_breaks(a, b, c, levels, ratio, extra), n)


def log_coefficients(q, C, N):
    """Fourier cosine coefficients c_0..c_{N/2+1} of ln Q for Q = C (1 - 2q cos x + q^2).

    c_0 = ln C and c_n = -q^n / n, so ln Q = c_0 + 2 sum_n c_n cos(n x).
    """
    q = np.asarray(q, dtype=float)
    n = np.arange(1, N // 2 + 2)
    c = np.empty(q.shape + (N // 2 + 2,))
    c[..., 0] = np.log(C)
    c[..., 1:] = -(q[..., None] ** n) / n
    return c


def cosine_weights(coef, N):
    """Product weights P_l, l = 0..N-1, for integrals of g(x) f(x) over a period.

    `coef` holds the cosine coefficients d_0..d_{N/2} of g; the rule integrates
    g f exactly when f is a trigonometric polynomial of degree below N/2.
    """
    return 2 * np.pi * np.fft.irfft(coef[..., : N // 2 + 1], n=N, axis=-1)


def periodic_log_weights(q, C, N):
    """Weights for ln Q(x) and for (1 - cos x) ln Q(x) on the N-point periodic grid.

    Returns arrays of shape q.shape + (N,) indexed by the node offset l, where
    x_l = 2 pi l / N is the distance in parameter from the singular node.
    """
    if N % 2:
        raise ValueError("periodic log weights need an even node count")
    c = log_coefficients(q, C, N)
    half = N // 2
    # coefficients of (1 - cos x) ln Q: d_n = c_n - (c_{n-1} + c_{n+1}) / 2, using c_{-1} = c_1
    shifted_down = np.concatenate([c[..., 1:2], c[..., : half]], axis=-1)
    d = c[..., : half + 1] - 0.5 * (shifted_down + c[..., 1 : half + 2])
    return cosine_weights(c, N), cosine_weights(d, N)


def log_split_parameters(delta2, b):
    """q and C such that C (1 - 2q cos x + q^2) = delta^2 + 4 b sin^2(x/2)."""
    sig = np.asarray(delta2, dtype=float) / b
    # smaller root of q^2 - (2 + sig) q + 1 = 0, written without cancellation
    q = 1.0 / (1 + sig / 2 + np.sqrt(sig + sig**2 / 4))
    return q, b / q
