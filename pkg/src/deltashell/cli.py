"""Command-line entry point: deltashell <geom-check|spectrum|converge|estimates> --config PATH."""

import argparse
import os
import sys
from collections import OrderedDict

import numpy as np
from scipy import linalg
from threadpoolctl import threadpool_limits

from . import convergence as cv
from . import estimates as es
from . import plotting
from .config import ConfigError, load
from .discrete import GridError
from .geometry import GeometryError, build_quadrature, hypothesis_check
from .operators import SpectralParameterError
from .potential import ParameterError, product_grid
from .quadrature import gauss_legendre
from .report import ResultTable
from .spectral import delta_eigenvalues, essential_threshold, heps_eigenvalues

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2, 3

GEOM_COLUMNS = ["shape", "beta", "injective", "eta_est", "c_est", "det_min", "det_max",
                "pass_b", "pass_c", "pass"]
SPECTRUM_COLUMNS = ["shape", "model", "eps", "index", "lambda", "kappa", "multiplicity",
                    "residual", "threshold", "monotone", "expect_count", "pass"]
CONVERGE_COLUMNS = ["shape", "lambda", "eps", "norm_A", "norm_B", "norm_C", "norm_full_svd",
                    "norm_full_schur", "env_A", "env_B", "env_C", "env_full", "ratio_A",
                    "ratio_B", "ratio_C", "ratio_full", "slope_A", "slope_B", "slope_C",
                    "slope_full", "pass"]
INVERT_COLUMNS = ["shape", "lambda", "eps", "norm_B_eps", "inverse_norm", "neumann_bound",
                  "pass"]
REFINE_COLUMNS = ["shape", "lambda", "level", "sigma_nodes", "gauss", "eps", "norm_A", "norm_B",
                  "norm_C", "norm_full_svd", "rel_change", "pass"]
ESTIMATE_COLUMNS = ["id", "shape", "lambda", "eps", "r0", "value", "envelope", "ratio", "pass"]
REFINE_TOL = 1e-3


def _quadrature(cfg, surface):
    if surface.is_sphere:
        return build_quadrature(surface, cfg.resolution.lat, rule="product")
    return build_quadrature(surface, cfg.resolution.sigma_nodes)


def _table(cfg, columns):
    return ResultTable(columns, config_hash=cfg.hash())


def _shape(cfg):
    return cfg.shape.kind


# ----------------------------------------------------------------------------
# commands

def cmd_geom_check(cfg, out, plot=False):
    surface = cfg.shape.build()
    beta = cfg.potential.beta
    rep = hypothesis_check(surface, beta)
    table = _table(cfg, GEOM_COLUMNS)
    table.add({"shape": _shape(cfg), "beta": beta, "injective": rep.injective,
               "eta_est": rep.eta_est, "c_est": rep.c_est, "det_min": rep.det_min,
               "det_max": rep.det_max, "pass_b": rep.pass_b, "pass_c": rep.pass_c,
               "pass": rep.passed})
    path = table.write(os.path.join(out, "geom_check.csv"))
    _say(f"geom-check {_shape(cfg)}: {'pass' if rep.passed else 'FAIL'} "
         f"(eta_est={rep.eta_est:.4g}, c_est={rep.c_est:.4g}) -> {path}")
    return EXIT_PASS if rep.passed else EXIT_FAIL


def _coupling(cfg, V):
    if cfg.alpha is not None:
        return float(cfg.alpha)
    t, om = gauss_legendre(32)
    return float(V.amplitude * V.beta * np.sum(om * V.q(t)))


def cmd_spectrum(cfg, out, plot=False):
    surface = cfg.shape.build()
    quad = _quadrature(cfg, surface)
    V = cfg.potential.build()
    alpha = _coupling(cfg, V)
    thr = essential_threshold(surface, alpha)
    if cfg.lambda_window is not None:
        window = tuple(float(x) for x in cfg.lambda_window)
    else:
        window = (-4.0 * max(1.0, alpha) ** 2, thr - 1e-4)
    table = _table(cfg, SPECTRUM_COLUMNS)
    reports = [("delta", float("nan"), delta_eigenvalues(quad, alpha, window, thr))]
    if cfg.eps is not None:
        grid = product_grid(quad, cfg.resolution.gauss)
        for e in cfg.eps_list:
            reports.append(("heps", e, heps_eigenvalues(grid, V, e, window)))
    ok = True
    for model, e, rep in reports:
        good = bool(rep.monotone and np.all(rep.residuals <= 1e-8))
        if cfg.expect_count is not None:
            good = good and rep.count == cfg.expect_count
        ok &= good
        for row in rep.rows():
            table.add({"shape": _shape(cfg), "model": model, "eps": e, **row,
                       "monotone": rep.monotone, "expect_count": cfg.expect_count, "pass": good})
        _say(f"spectrum {model}{'' if np.isnan(e) else f' eps={e:g}'}: "
             f"{rep.count} eigenvalue(s) {np.round(rep.eigenvalues, 10).tolist()}")
    path = table.write(os.path.join(out, "spectrum.csv"))
    _say(f"spectrum: {'pass' if ok else 'FAIL'} -> {path}")
    return EXIT_PASS if ok else EXIT_FAIL


def cmd_converge(cfg, out, plot=False):
    surface = cfg.shape.build()
    quad = _quadrature(cfg, surface)
    V = cfg.potential.build()
    eps = cfg.eps_list
    nt = cfg.resolution.gauss
    th = cv.RateThresholds(cfg.thresholds.slope_min, cfg.thresholds.slope_max,
                           cfg.thresholds.ratio_factor)
    setup0 = cv.make_setup(quad, V, -1.0, nt, eps, with_volume=False)
    check_eps = sorted(set(eps) | {V.beta}, reverse=True)
    if cfg.lam == "auto":
        lam, _ = cv.find_lambda_M(setup0.grid, setup0.u, setup0.v, check_eps)
        _say(f"converge: lambda_M = {lam:.6g} from the bisection")
    else:
        lam = float(cfg.lam)
    setup = cv.make_setup(quad, V, lam, nt, eps, h=cfg.resolution.volume_spacing,
                          n_volume=cfg.resolution.volume_points)
    res = cv.convergence_sweep(setup, eps, th, _shape(cfg))
    # the sweep already factored B_eps for its own eps; only the rest are new
    extra = [e for e in check_eps if e not in eps]
    inv = res.extras["invertibility"] + cv.invertibility_table(
        setup0.grid, setup0.u, setup0.v, lam, extra)
    inv.sort(key=lambda r: -r.eps)
    inv_ok = all(r.passed for r in inv)
    ok = res.passed and inv_ok

    refine_rows, refine_ok = [], True
    if cfg.refine:
        levels = [cfg.resolution.sigma_nodes // 2, cfg.resolution.sigma_nodes]
        if surface.is_sphere:
            builder = lambda n: build_quadrature(surface, n, rule="product")
            levels = [cfg.resolution.lat // 2, cfg.resolution.lat]
        else:
            builder = lambda n: build_quadrature(surface, n)
        rows, change = cv.refinement_study(builder, V, lam, eps, levels,
                                           setup.vgrid.h, [max(2, nt // 2), nt])
        refine_ok = all(v < REFINE_TOL for v in change.values())
        for level, r in enumerate(rows):
            for k, e in enumerate(eps):
                refine_rows.append({"shape": _shape(cfg), "lambda": lam, "level": level,
                                    "sigma_nodes": r["N"], "gauss": r["nt"], "eps": e,
                                    "norm_A": r["A"][k], "norm_B": r["B"][k],
                                    "norm_C": r["C"][k], "norm_full_svd": r["full"][k],
                                    "rel_change": max(change.values()) if level else float("nan"),
                                    "pass": refine_ok})
        ok = ok and refine_ok

    table = _table(cfg, CONVERGE_COLUMNS)
    f = res.fits
    for k, e in enumerate(res.eps):
        table.add({"shape": _shape(cfg), "lambda": lam, "eps": e,
                   "norm_A": res.norm_A[k], "norm_B": res.norm_B[k], "norm_C": res.norm_C[k],
                   "norm_full_svd": res.norm_full[k], "norm_full_schur": res.schur_full[k],
                   "env_A": f["A"].envelope[k], "env_B": f["B"].envelope[k],
                   "env_C": f["C"].envelope[k], "env_full": f["full"].envelope[k],
                   "ratio_A": f["A"].ratios[k], "ratio_B": f["B"].ratios[k],
                   "ratio_C": f["C"].ratios[k], "ratio_full": f["full"].ratios[k],
                   "slope_A": f["A"].slope, "slope_B": f["B"].slope, "slope_C": f["C"].slope,
                   "slope_full": f["full"].slope, "pass": res.passed})
    path = table.write(os.path.join(out, "converge.csv"))
    inv_table = _table(cfg, INVERT_COLUMNS)
    for r in inv:
        inv_table.add({"shape": _shape(cfg), "lambda": lam, "eps": r.eps, "norm_B_eps": r.norm_B,
                       "inverse_norm": r.inverse_norm, "neumann_bound": r.neumann_bound,
                       "pass": r.passed})
    inv_table.write(os.path.join(out, "converge_invertibility.csv"))
    if refine_rows:
        rt = _table(cfg, REFINE_COLUMNS)
        for r in refine_rows:
            rt.add(r)
        rt.write(os.path.join(out, "converge_refinement.csv"))
    plotting.converge_figure(res, os.path.join(out, "converge.png"))
    if plot:
        with open(os.path.join(out, "converge.gp"), "w") as fh:
            fh.write(plotting.gnuplot_converge_script("converge.csv", "converge_gnuplot.png"))

    for key in ("A", "B", "C", "full"):
        fk = f[key]
        _say(f"  {key:4s} slope {fk.slope:6.3f}  ratio spread {fk.spread:6.3f}  "
             f"{'pass' if fk.passed else 'FAIL'}")
    _say(f"  monotone {res.monotone}, invertibility {inv_ok}"
         + (f", refinement {refine_ok}" if cfg.refine else ""))
    _say(f"converge: {'pass' if ok else 'FAIL'} -> {path}")
    return EXIT_PASS if ok else EXIT_FAIL


def cmd_estimates(cfg, out, plot=False):
    surface = cfg.shape.build()
    t = cfg.thresholds
    th = es.EstimateThresholds(t.slope_min, t.ratio_factor, t.exponent_tol, t.sup_ratio_factor)
    reports = es.run_battery(surface, cfg.estimates.lambdas, cfg.eps_list, cfg.estimates.r0,
                             th, cfg.seed)
    grouped = OrderedDict()
    for rep in reports:
        grouped.setdefault(rep.id, []).append(rep)
    names = []
    for rid, reps in grouped.items():
        table = _table(cfg, ESTIMATE_COLUMNS)
        for rep in reps:
            for row in rep.rows:
                table.add(row.as_dict())
        name = f"estimates_{rid}.csv"
        table.write(os.path.join(out, name))
        names.append(name)
        _say(f"  {rid:26s} {'pass' if all(r.passed for r in reps) else 'FAIL'}")
    plotting.estimates_figure(reports, os.path.join(out, "estimates.png"))
    if plot:
        with open(os.path.join(out, "estimates.gp"), "w") as fh:
            fh.write(plotting.gnuplot_estimates_script(names, "estimates_gnuplot.png"))
    ok = all(r.passed for r in reports)
    _say(f"estimates {_shape(cfg)}: {'pass' if ok else 'FAIL'} -> {out}")
    return EXIT_PASS if ok else EXIT_FAIL


COMMAND_TABLE = {"geom-check": cmd_geom_check, "spectrum": cmd_spectrum,
                 "converge": cmd_converge, "estimates": cmd_estimates}


def _say(msg):
    print(msg, flush=True)


def _threads(arg):
    env = os.environ.get("DELTASHELL_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"DELTASHELL_THREADS must be an integer, got {env!r}") from None
    return arg


def build_parser():
    p = argparse.ArgumentParser(prog="deltashell", description=__doc__)
    p.add_argument("command", choices=list(COMMAND_TABLE))
    p.add_argument("--config", required=True, help="JSON run configuration")
    p.add_argument("--out", default=None, help="output directory (overrides config.output)")
    p.add_argument("--threads", type=int, default=None, help="BLAS/OpenMP thread limit")
    p.add_argument("--plot", action="store_true", help="also write a gnuplot script")
    return p


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_PASS
    try:
        cfg = load(args.config, args.command)
        threads = _threads(args.threads)
        out = args.out if args.out is not None else cfg.output
        os.makedirs(out, exist_ok=True)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        with threadpool_limits(limits=threads):
            return COMMAND_TABLE[args.command](cfg, out, args.plot)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SpectralParameterError, GeometryError, GridError, cv.ResolutionError,
            linalg.LinAlgError, ParameterError, FloatingPointError) as exc:
        print(f"numerical abort: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


def entry():
    sys.exit(main())


if __name__ == "__main__":
    sys.exit(main())
