"""Figure rendering for the CLI report paths.

All figures are written to files (Agg backend); the CSV output stays the
machine-readable contract and plots are a convenience layer on top of it.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def apply_style() -> None:
    """Common look and feel for all report figures."""
    matplotlib.rc("figure", figsize=(7.0, 5.0))
    matplotlib.rc("axes", grid=True, axisbelow=True)
    matplotlib.rc("grid", alpha=0.4, linewidth=0.6)
    matplotlib.rc("legend", fontsize=9, framealpha=0.8)
    matplotlib.rc("savefig", dpi=150, bbox="tight")


def plot_convergence(report, path, title: str) -> None:
    """Log-log error versus step size with the fitted-order guide line."""
    apply_style()
    fig, ax = plt.subplots()
    hs = np.array([row.h for row in report.rows])
    errs = np.array([max(row.error, 1e-18) for row in report.rows])
    stderrs = [row.stderr for row in report.rows]
    if any(s is not None for s in stderrs):
        yerr = np.array([s if s is not None else 0.0 for s in stderrs])
        ax.errorbar(hs, errs, yerr=yerr, fmt="o", capsize=3, label="error")
    else:
        ax.loglog(hs, errs, "o", label="error")
    ax.set_xscale("log")
    ax.set_yscale("log")
    if report.fitted_order is not None and report.intercept is not None:
        guide = np.exp(report.intercept) * hs**report.fitted_order
        ax.loglog(hs, guide, "--", label=f"fit: order {report.fitted_order:.3f}")
    if report.exact:
        ax.set_title(f"{title} (errors at rounding floor)")
    else:
        ax.set_title(title)
    ax.set_xlabel("step size h")
    ax.set_ylabel("|error|")
    ax.legend()
    fig.savefig(path)
    plt.close(fig)


def plot_expansion(rows, nu: int, path, title: str) -> None:
    """Remainder magnitude and its envelope versus time, log-log."""
    apply_style()
    fig, ax = plt.subplots()
    ts = np.array([r["t"] for r in rows])
    keep = ts > 0
    ts = ts[keep]
    if ts.size:
        rems = np.array([abs(r["remainder"]) for r in rows])[keep]
        bounds = np.array([r["bound"] for r in rows])[keep]
        ax.loglog(ts, np.maximum(rems, 1e-18), "o-", label="|remainder|")
        ax.loglog(ts, np.maximum(bounds, 1e-18), "s--", label="bound")
        ref = rems[0] * (ts / ts[0]) ** (nu + 1) if rems[0] > 0 else None
        if ref is not None:
            ax.loglog(ts, ref, ":", label=f"t^{nu + 1} reference")
    ax.set_xlabel("t")
    ax.set_ylabel("magnitude")
    ax.set_title(title)
    ax.legend()
    fig.savefig(path)
    plt.close(fig)


def plot_verification(rows, path, title: str) -> None:
    """Deviations of every identity check against their tolerances."""
    apply_style()
    fig, ax = plt.subplots()
    names = sorted({r.identity for r in rows})
    floor = 1e-18
    for name in names:
        xs = [i for i, r in enumerate(rows) if r.identity == name]
        ys = [max(rows[i].deviation, floor) for i in xs]
        ax.semilogy(xs, ys, "o", ms=4, label=name)
    tol_drawn = set()
    for i, r in enumerate(rows):
        if r.tolerance > 0 and r.tolerance not in tol_drawn:
            ax.axhline(r.tolerance, color="k", lw=0.8, ls="--", alpha=0.5)
            tol_drawn.add(r.tolerance)
    failed = [i for i, r in enumerate(rows) if not r.passed]
    if failed:
        ax.semilogy(
            failed,
            [max(rows[i].deviation, floor) for i in failed],
            "rx",
            ms=10,
            label="failed",
        )
    ax.set_xlabel("check index")
    ax.set_ylabel("deviation")
    ax.set_title(title)
    ax.legend(loc="upper right")
    fig.savefig(path)
    plt.close(fig)
