"""Figure rendering for the report path: every figure lands next to its CSV.

matplotlib is imported lazily with the Agg backend so headless runs and
--no-figures invocations never touch a display.
"""

from __future__ import annotations

import math

import numpy as np


def _pyplot():
    import matplotlib
    matplotlib.use("Agg", force=True)
    import matplotlib.pyplot as plt
    return plt


def save_spectrum_figure(path, lambdas, window, rate, intercept, title=""):
    """Log-log eigenvalue scatter with the fitted power law over the window."""
    plt = _pyplot()
    lams = np.asarray(lambdas, dtype=float)
    i = np.arange(1, len(lams) + 1)
    fig, ax = plt.subplots(figsize=(4.5, 3.4))
    ax.loglog(i, lams, ".", ms=3, color="tab:blue", label="eigenvalues")
    lo, hi = window
    xs = np.arange(lo, hi + 1)
    ax.loglog(xs, np.exp(intercept) * xs ** (-rate), "k--", lw=1.2,
              label=f"fit: i^-{rate:.2f}")
    ax.set_xlabel("index i")
    ax.set_ylabel("eigenvalue")
    if title:
        ax.set_title(title, fontsize=9)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_modes_figure(path, mu, fit_window=None, slope=None, title=""):
    """Log-log per-degree modes with an optional fitted slope segment."""
    plt = _pyplot()
    mu = np.asarray(mu, dtype=float)
    n = np.arange(len(mu))
    pos = mu > 0
    fig, ax = plt.subplots(figsize=(4.5, 3.4))
    ax.loglog(n[pos], mu[pos], "o", ms=3, color="tab:orange", label="modes")
    if fit_window is not None and slope is not None:
        lo, hi = fit_window
        xs = np.arange(max(lo, 1), hi + 1)
        anchor = mu[lo] if mu[lo] > 0 else mu[pos][0]
        ax.loglog(xs, anchor * (xs / max(lo, 1)) ** slope, "k--", lw=1.2,
                  label=f"slope {slope:.2f}")
    ax.set_xlabel("degree n")
    ax.set_ylabel("mode eigenvalue")
    if title:
        ax.set_title(title, fontsize=9)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_risk_curve_figure(path, times, train_residuals, holdout_risks, l2_risks, t_op=None):
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(4.8, 3.4))
    ax.loglog(times, train_residuals, "-", label="train residual")
    ax.loglog(times, holdout_risks, "-", label="holdout risk")
    ax.loglog(times, l2_risks, "-", label="population risk")
    if t_op is not None:
        ax.axvline(t_op, color="k", ls=":", lw=1, label="stopping time")
    ax.set_xlabel("time t")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_trace_figure(path, trace):
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(4.8, 3.4))
    ax.semilogy(trace.times, trace.train_residuals, "-o", ms=3, label="residual")
    if trace.predictor_gaps is not None:
        ax.semilogy(trace.times, trace.predictor_gaps, "-s", ms=3, label="flow gap")
    if trace.kernel_gaps is not None:
        ax.semilogy(trace.times, trace.kernel_gaps, "-^", ms=3, label="kernel gap")
    ax.set_xlabel("time t")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_width_gap_figure(path, rows):
    """Per-width scatter of init kernel gaps and flow gaps (log-log in width)."""
    plt = _pyplot()
    widths = sorted({r.m for r in rows})
    fig, ax = plt.subplots(figsize=(4.8, 3.4))
    for attr, marker, label in (("init_kernel_gap", "o", "kernel gap at init"),
                                ("predictor_gap", "s", "predictor gap")):
        xs, ys = [], []
        for r in rows:
            xs.append(r.m)
            ys.append(getattr(r, attr))
        ax.loglog(xs, ys, marker, ms=4, alpha=0.6, label=label)
        means = [float(np.mean([getattr(r, attr) for r in rows if r.m == m])) for m in widths]
        ax.loglog(widths, means, "-", lw=1, color=ax.lines[-1].get_color())
    ax.set_xlabel("width m")
    ax.set_ylabel("sup gap")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_cv_figure(path, records):
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(4.8, 3.4))
    sel = [math.log2(r.t_selected) if r.t_selected > 0 else 0 for r in records]
    ax.hist(sel, bins=max(5, len(set(sel))), color="tab:green", alpha=0.8)
    ax.set_xlabel("log2 selected stopping time")
    ax.set_ylabel("runs")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
