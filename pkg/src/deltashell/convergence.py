"""Rate measurements for the scaled-potential operators and the full resolvent difference.

For each eps of a sweep the operators A_eps, B_eps, C_eps are assembled on
the same product and volume grids as their eps = 0 limits, and the weighted
norms of the differences are fitted against the envelopes eps(1+|ln eps|)
(B_eps and the resolvent difference) and eps(1+|ln eps|)^{1/2} (A_eps, C_eps).
The resolvent difference is formed without the free resolvent, which cancels:

    D_eps = A_eps (1 - B_eps)^{-1} C_eps - gamma (1 - alpha M)^{-1} alpha gamma*.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from . import operators as op
from .discrete import DiscreteOperator, build_volume_grid, inverse_norm, operator_norm, schur_bound
from .fits import envelope, loglog_slope, ratio_spread
from .potential import ParameterError, product_grid, profile_functions, transversal_average

ENV_A = ENV_C = "eps_sqrtlog"
ENV_B = ENV_FULL = "eps_log"
MONOTONE_JITTER = 0.05


class ResolutionError(RuntimeError):
    """A measured norm gap is not resolved above the discretization floor."""


@dataclass(frozen=True)
class RateThresholds:
    slope_min: float = 0.9
    slope_max: float = 1.15
    ratio_factor: float = 3.0


@dataclass
class RateFit:
    """Norms along a decreasing eps sweep fitted against one envelope."""

    label: str
    eps: np.ndarray
    norms: np.ndarray
    envelope_name: str
    envelope: np.ndarray
    ratios: np.ndarray
    slope: float
    spread: float
    passed: bool
    slope_window: tuple = (0.9, None)


def fit_rate(label, eps, norms, envelope_name, thresholds=RateThresholds(), slope_max=None):
    """Slope and envelope-ratio spread of `norms`; needs >= 4 strictly decreasing eps."""
    eps = np.asarray(eps, dtype=float)
    norms = np.asarray(norms, dtype=float)
    if len(eps) < 4:
        raise ParameterError("a rate fit needs at least 4 eps values")
    if np.any(np.diff(eps) >= 0):
        raise ParameterError("eps values must be strictly decreasing")
    if np.any(norms < 0):
        raise ValueError("norms must be non-negative")
    env = envelope(envelope_name, eps)
    ratios, spread = ratio_spread(norms, env)
    slope = loglog_slope(eps, norms)
    ok = slope >= thresholds.slope_min and spread <= thresholds.ratio_factor
    if slope_max is not None:
        ok = ok and slope <= slope_max
    return RateFit(label, eps, norms, envelope_name, env, ratios, slope, spread, bool(ok),
                   (thresholds.slope_min, slope_max))


@dataclass
class Setup:
    """Shared, read-only discretization for one sweep."""

    quad: object
    grid: object
    V: object
    lam: float
    u: np.ndarray
    v: np.ndarray
    alpha: np.ndarray
    vgrid: object = None


def make_setup(quad, V, lam, nt=16, eps_list=(), h=None, n_volume=None, with_volume=True):
    """Product grid, profile functions, coupling and (optionally) the volume grid.

    The volume grid excludes cells within max(h/2, 2 max eps) of Sigma so that
    no eps-layer of the sweep reaches a volume point.
    """
    grid = product_grid(quad, nt)
    u, v = profile_functions(V, grid)
    alpha = transversal_average(V, quad, nt).alpha
    vgrid = None
    if with_volume:
        kappa = np.sqrt(-lam)
        eps_max = max(eps_list) if len(eps_list) else 0.0
        if h is None:
            h = volume_spacing(quad, kappa, V.beta, n_volume)
        vgrid = build_volume_grid(quad, kappa, V.beta, h=h, delta_vol=max(0.5 * h, 2 * eps_max))
    return Setup(quad, grid, V, float(lam), u, v, alpha, vgrid)


def volume_spacing(quad, kappa, reach, n_target, pad=6.0):
    """Cell size giving about n_target cells on the padded bounding box."""
    span = np.ptp(quad.nodes, axis=0) + 2 * (reach + pad / kappa)
    return float((np.prod(span) / n_target) ** (1 / quad.d))


# ----------------------------------------------------------------------------
# invertibility regime

def max_B_norm(grid, u, v, lam, eps_list):
    return max(operator_norm(op.assemble_B_eps(lam, e, grid, u, v)) for e in eps_list)


def _bisect_lambda(norm_at, target, lam_start, rel_tol, max_steps):
    """Least negative lambda (to rel_tol) with norm_at(lambda) <= target, for a norm
    that decreases as lambda becomes more negative."""
    lam_ok = lam_bad = None
    lam = float(lam_start)
    for _ in range(max_steps):
        if norm_at(lam) <= target:
            lam_ok = lam
            if lam_bad is not None:
                break
            lam = lam / 4
        else:
            lam_bad = lam
            if lam_ok is not None:
                break
            lam = lam * 4
    if lam_ok is None or lam_bad is None:
        raise op.SpectralParameterError("could not bracket lambda_M")
    lo, hi = np.log(-lam_ok), np.log(-lam_bad)   # lo: admissible
    while abs(lo - hi) > np.log1p(rel_tol):
        mid = 0.5 * (lo + hi)
        if norm_at(-np.exp(mid)) <= target:
            lo = mid
        else:
            hi = mid
    return float(-np.exp(lo))


def find_lambda_M(grid, u, v, eps_list, target=0.5, lam_start=-1.0, rel_tol=0.02,
                  max_steps=40):
    """Least negative lambda (to rel_tol) with ||B_eps(lambda)|| <= target for every eps.

    Bisects in log(-lambda) one eps at a time, smallest eps first (usually the
    binding one), and moves on only for an eps that still exceeds the target.
    A final pass over all eps confirms the result. Returns (lambda_M, max norm).
    """
    cache = {}

    def norm(lam, e):
        if (lam, e) not in cache:
            cache[lam, e] = operator_norm(op.assemble_B_eps(lam, e, grid, u, v))
        return cache[lam, e]

    order = sorted(float(e) for e in eps_list)
    lam = None
    for _ in range(len(order) + 1):
        for e in order:
            if lam is not None and norm(lam, e) <= target:
                continue
            lam = _bisect_lambda(lambda l: norm(l, e), target,
                                 lam_start if lam is None else lam, rel_tol, max_steps)
        nb = max(norm(lam, e) for e in order)
        if nb <= target:
            return lam, float(nb)
    raise op.SpectralParameterError("||B_eps(lambda)|| is not monotone in lambda; no lambda_M")


@dataclass
class InvertibilityRow:
    eps: float
    norm_B: float
    inverse_norm: float
    neumann_bound: float
    passed: bool


def invertibility_row(B, eps, M=0.5):
    """One InvertibilityRow for an assembled B_eps, plus the LU factors of 1 - B_eps."""
    nb = operator_norm(B)
    one_minus = DiscreteOperator(np.eye(B.shape[0]) - B.matrix, B.w_in, B.w_out)
    lu = linalg.lu_factor(one_minus.matrix, check_finite=False)
    inv = inverse_norm(one_minus, lu=lu)
    bound = 1 / (1 - nb) if nb < 1 else float("inf")
    row = InvertibilityRow(float(eps), nb, inv, bound,
                           bool(nb <= M and inv <= 1 / (1 - M) + 1e-12
                                and inv <= bound * (1 + 1e-9)))
    return row, lu


def invertibility_table(grid, u, v, lam, eps_list, M=0.5):
    """||B_eps||, ||(1 - B_eps)^{-1}|| and the Neumann bound 1 / (1 - ||B_eps||)."""
    return [invertibility_row(op.assemble_B_eps(lam, e, grid, u, v), e, M)[0] for e in eps_list]


# ----------------------------------------------------------------------------
# the sweep

@dataclass
class SweepResult:
    lam: float
    eps: np.ndarray
    norm_A: np.ndarray
    norm_B: np.ndarray
    norm_C: np.ndarray
    norm_full: np.ndarray
    schur_full: np.ndarray
    fits: dict
    monotone: bool
    schur_dominates: bool
    passed: bool
    shape: str = ""
    extras: dict = field(default_factory=dict)


def _limits(setup):
    s = setup
    B0 = op.assemble_B_eps(s.lam, 0.0, s.grid, s.u, s.v)
    A0 = op.assemble_A_eps(s.lam, 0.0, s.grid, s.v, s.vgrid)
    C0 = op.assemble_C_eps(s.lam, 0.0, s.grid, s.u, s.vgrid)
    return B0, A0, C0


def component_norms(setup, eps_list, limits=None, full=True, M=0.5):
    """Norms of A_eps - A_0, B_eps - B_0, C_eps - C_0 and (if `full`) of D_eps.

    Returns a dict of arrays: A, B, C, full, schur. With `full` it also holds
    "invert", the InvertibilityRow of every eps (B_eps is assembled once and
    its LU factors feed both the inverse norm and the solve in D_eps).
    """
    s = setup
    B0, A0, C0 = _limits(s) if limits is None else limits
    K = None
    if full:
        K = op.krein_correction(s.lam, s.alpha, s.quad, s.vgrid)
    out = {k: [] for k in ("A", "B", "C", "full", "schur")}
    rows = []
    for e in eps_list:
        B = op.assemble_B_eps(s.lam, e, s.grid, s.u, s.v)
        A = op.assemble_A_eps(s.lam, e, s.grid, s.v, s.vgrid)
        C = op.assemble_C_eps(s.lam, e, s.grid, s.u, s.vgrid)
        out["B"].append(operator_norm(B - B0))
        out["A"].append(operator_norm(A - A0))
        out["C"].append(operator_norm(C - C0))
        if full:
            row, lu = invertibility_row(B, e, M)
            rows.append(row)
            if row.norm_B >= 1:
                raise op.SpectralParameterError(
                    f"||B_eps(lambda)|| = {row.norm_B:.4f} >= 1; choose a more negative lambda")
            D = op.heps_correction(s.lam, e, s.grid, s.u, s.v, s.vgrid, B, A, C,
                                   check_norm=False, lu=lu) - K
            out["full"].append(operator_norm(D))
            out["schur"].append(schur_bound(D))
        del A, B, C
    out = {k: np.asarray(v) for k, v in out.items()}
    if full:
        out["invert"] = rows
    return out


def component_rates(setup, eps_list, thresholds=RateThresholds(), floor=None):
    """RateFits of the three component differences (dict keyed A, B, C)."""
    norms = component_norms(setup, eps_list, full=False)
    _check_floor(norms, floor)
    return {"A": fit_rate("A", eps_list, norms["A"], ENV_A, thresholds),
            "B": fit_rate("B", eps_list, norms["B"], ENV_B, thresholds),
            "C": fit_rate("C", eps_list, norms["C"], ENV_C, thresholds)}


def full_resolvent_rate(setup, eps_list, thresholds=RateThresholds()):
    """RateFit of ||D_eps|| against eps(1+|ln eps|) with the slope window, plus Schur norms."""
    norms = component_norms(setup, eps_list)
    fit = fit_rate("full", eps_list, norms["full"], ENV_FULL, thresholds, thresholds.slope_max)
    return fit, norms["schur"]


def _check_floor(norms, floor):
    if floor is None:
        return
    for key, vals in norms.items():
        if key == "invert":
            continue
        if len(vals) and np.any(vals < 10 * floor):
            raise ResolutionError(
                f"||{key}_eps - {key}_0|| reaches {vals.min():.3e}, below 10x the "
                f"discretization floor {floor:.3e}; refine the Sigma rule or drop small eps")


def is_monotone(norms, jitter=MONOTONE_JITTER):
    """Non-increasing after the first entry, up to a relative jitter."""
    n = np.asarray(norms)
    return bool(np.all(n[2:] <= (1 + jitter) * n[1:-1]))


def convergence_sweep(setup, eps_list, thresholds=RateThresholds(), shape=""):
    """Everything the converge report needs, with one assembly per eps."""
    eps = np.asarray(eps_list, dtype=float)
    norms = component_norms(setup, eps)
    fits = {"A": fit_rate("A", eps, norms["A"], ENV_A, thresholds),
            "B": fit_rate("B", eps, norms["B"], ENV_B, thresholds),
            "C": fit_rate("C", eps, norms["C"], ENV_C, thresholds),
            "full": fit_rate("full", eps, norms["full"], ENV_FULL, thresholds,
                             thresholds.slope_max)}
    mono = is_monotone(norms["full"])
    dominates = bool(np.all(norms["schur"] >= norms["full"] * (1 - 1e-12)))
    if not dominates:
        raise AssertionError("Schur bound below the SVD norm: the norm computation is broken")
    passed = all(f.passed for f in fits.values()) and mono and dominates
    return SweepResult(setup.lam, eps, norms["A"], norms["B"], norms["C"], norms["full"],
                       norms["schur"], fits, mono, dominates, bool(passed), shape,
                       {"invertibility": norms["invert"]})


def refinement_study(quad_builder, V, lam, eps_list, levels, h, nt_levels):
    """Norms at successive (Sigma nodes, transverse order) levels on one volume spacing.

    `levels` are Sigma node counts with matching `nt_levels`. Returns a list of
    dicts (level, N, nt, norms...) and the relative change of every norm
    between the last two levels.
    """
    rows, prev = [], None
    change = None
    for N, nt in zip(levels, nt_levels):
        setup = make_setup(quad_builder(N), V, lam, nt, eps_list, h=h)
        norms = component_norms(setup, eps_list)
        rows.append({"N": N, "nt": nt, **{k: v for k, v in norms.items() if k != "invert"}})
        if prev is not None:
            change = {k: float(np.max(np.abs(norms[k] - prev[k]) / np.abs(norms[k])))
                      for k in ("A", "B", "C", "full")}
        prev = norms
    return rows, change
