"""PNG figures for the reports, and plain gnuplot scripts that replot the CSV files."""


import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def converge_figure(result, path):
    """Log-log plot of the four measured norms against eps with their envelope shapes."""
    eps = result.eps
    fig, ax = plt.subplots(figsize=(6, 4.5))
    for key, norms, mark in (("A", result.norm_A, "o"), ("B", result.norm_B, "s"),
                             ("C", result.norm_C, "^"), ("full", result.norm_full, "D")):
        fit = result.fits[key]
        ax.loglog(eps, norms, mark + "-", label=f"{key}  slope {fit.slope:.2f}")
        # envelope scaled to meet the curve at the first eps
        ax.loglog(eps, fit.envelope * norms[0] / fit.envelope[0], ":", color="0.6", lw=1)
    ax.loglog(eps, result.schur_full, "x--", color="0.3", label="full (Schur bound)")
    ax.set_xlabel("eps")
    ax.set_ylabel("weighted operator norm")
    ax.set_title(f"{result.shape}, lambda = {result.lam:g}")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def estimates_figure(reports, path):
    """Envelope ratios of every estimate check against its sweep index."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for rep in reports:
        r = rep.ratios
        lbl = f"{rep.id} ({'pass' if rep.passed else 'FAIL'})"
        ax.semilogy(np.arange(len(r)), r, "o-", ms=3, label=lbl)
    ax.set_xlabel("sweep index")
    ax.set_ylabel("value / envelope")
    ax.legend(fontsize=6, ncol=2)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def gnuplot_converge_script(csv_name, png_name):
    """gnuplot script reading the converge CSV (columns by name) from the same directory."""
    return f"""# replot the converge table; run gnuplot on this file from the output directory
set datafile separator ','
set datafile commentschars '#'
set key autotitle columnhead
set logscale xy
set xlabel 'eps'
set ylabel 'weighted operator norm'
set terminal pngcairo size 800,600
set output '{png_name}'
plot '{csv_name}' using 'eps':'norm_A' with linespoints title 'A', \\
     '{csv_name}' using 'eps':'norm_B' with linespoints title 'B', \\
     '{csv_name}' using 'eps':'norm_C' with linespoints title 'C', \\
     '{csv_name}' using 'eps':'norm_full_svd' with linespoints title 'full', \\
     '{csv_name}' using 'eps':'norm_full_schur' with linespoints title 'full (Schur)'
"""


def gnuplot_estimates_script(csv_names, png_name):
    plots = ", \\\n     ".join(f"'{n}' using 0:'ratio' with linespoints title '{n}'"
                              for n in csv_names)
    return f"""# replot the estimate ratios; run gnuplot on this file from the output directory
set datafile separator ','
set datafile commentschars '#'
set key autotitle columnhead
set logscale y
set xlabel 'sweep index'
set ylabel 'value / envelope'
set terminal pngcairo size 900,600
set output '{png_name}'
plot {plots}
"""
