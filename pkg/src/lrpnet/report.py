"""Figure emission: every report path renders SVG files next to the CSV output."""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "lrpnet"

import matplotlib.pyplot as plt
import numpy as np


def _save(fig, path, manifest=""):
    meta = {"Date": None}
    if manifest:
        meta["Title"] = f"manifest={manifest}"
    fig.savefig(path, format="svg", metadata=meta)
    plt.close(fig)
    return path


def scan_figure(results, path, manifest=""):
    """Log-median against n with bootstrap CI ribbons, one line per beta."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for res in results:
        ns = np.array(res.n_values)
        med = np.asarray(res.medians, dtype=float)
        lo = np.array([c[0] for c in res.median_ci])
        hi = np.array([c[1] for c in res.median_ci])
        lab = f"beta={res.beta:g}"
        if res.fit is not None:
            lab += f", slope={res.fit.delta:.3f}"
        (line,) = ax.plot(ns, med, "o-", label=lab)
        ax.fill_between(ns, lo, hi, alpha=0.2, color=line.get_color())
    ax.set_yscale("log")
    ax.set_xlabel("n  (N = 2^n)")
    ax.set_ylabel("median resistance")
    ax.set_title(f"{results[0].kind} scan")
    ax.grid(alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    return _save(fig, path, manifest)


def quantile_figure(table, path, manifest=""):
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ns = table.scales()
    vals = [table.entries[n].value for n in ns]
    los = [table.entries[n].ci_lo for n in ns]
    his = [table.entries[n].ci_hi for n in ns]
    fin = [i for i, v in enumerate(vals) if math.isfinite(v)]
    ax.errorbar([ns[i] for i in fin], [vals[i] for i in fin],
                yerr=[[vals[i] - los[i] for i in fin],
                      [his[i] - vals[i] for i in fin]],
                fmt="o-", capsize=3)
    ax.set_yscale("log")
    ax.set_xlabel("scale n")
    ax.set_ylabel(f"({1 - table.alpha:g})-order-statistic of through-resistance")
    ax.set_title(f"quantiles, beta={table.beta:g}, alpha={table.alpha:g}")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    return _save(fig, path, manifest)


def firework_figure(decay, path, manifest=""):
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    rs = np.array(decay.r_values)
    ax.semilogy(rs, decay.p_all, "o-", label="Monte Carlo")
    ex_r = sorted(decay.exact)
    if ex_r:
        ax.semilogy(ex_r, [decay.exact[r] for r in ex_r], "s--", label="exact")
    ax.semilogy(rs, decay.p_all[0] * decay.kappa ** (rs - rs[0]), ":",
                label=f"kappa={decay.kappa:.3f}")
    ax.set_xlabel("r")
    ax.set_ylabel("P[spread covers all r pairs]")
    ax.set_title(f"spread-through decay, beta={decay.beta:g}")
    ax.grid(alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    return _save(fig, path, manifest)


def recursion_figure(report, path, manifest=""):
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ns = [e.n for e in report.entries]
    ratios = [e.ratio for e in report.entries]
    ax.plot(ns, ratios, "o-")
    ax.axhline(0.0, color="k", lw=0.8)
    ax.set_xlabel("n")
    ax.set_ylabel("quantile / band sum")
    ax.set_title(f"recursion ratio, M={report.M:g}, L={report.L:g}, "
                 f"min={report.min_ratio:.3g}")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    return _save(fig, path, manifest)


def baseline_figure(report, path, manifest=""):
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    Ns = [2.0 ** n for n in report.n_values]
    ax.loglog(Ns, report.mean_counts, "o-", label="Monte Carlo mean")
    ax.loglog(Ns, report.exact_counts, "s--", label="closed form")
    ax.set_xlabel("N")
    ax.set_ylabel("cut-edge count")
    ax.set_title(f"cut-edge baseline, beta={report.beta:g}, "
                 f"slope={report.slope:.3f}")
    ax.grid(alpha=0.3, which="both")
    ax.legend(fontsize=8)
    fig.tight_layout()
    return _save(fig, path, manifest)
