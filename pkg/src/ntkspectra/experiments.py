"""Reusable experiment runners: risk scaling, CV guarantee, overfitting, width sweep.

These drive the kernel-flow and network modules with seeded substreams so the
command-line front end and the verification suite share one code path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .flow import (FlowPredictor, RegressionTask, TruncatedPredictor, cv_select_stopping,
                   cv_slack_term, l2_risk, optimal_stopping_time, risk_exponent,
                   stopping_time_grid)
from .kernels import NtkDescriptor, ntk_cross
from .network import (ProbeConfig, init_network, probe_grid, tangent_kernel_matrix,
                      train, uniform_gap, weight_drift)
from .rng import rng_for
from .spectral import SampleDistribution


def make_rkhs_target(d: int, seed: int, desc: NtkDescriptor, n_anchors: int = 12):
    """Target in the kernel's representer span, rescaled to sup ~ 1 on a grid."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0xA5C]))
    Z = rng.uniform(-1.0, 1.0, size=(n_anchors, d))
    a = rng.standard_normal(n_anchors)
    ref = rng.uniform(-1.0, 1.0, size=(512, d))
    scale = float(np.abs(ntk_cross(desc, ref, Z) @ a).max())
    a = a / scale

    def f_star(P):
        return ntk_cross(desc, np.atleast_2d(P), Z) @ a

    return f_star


def make_dataset(f_star, d: int, n: int, sigma: float, seed: int) -> RegressionTask:
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0xDA7]))
    X = rng.uniform(-1.0, 1.0, size=(n, d))
    y = f_star(X) + sigma * rng.standard_normal(n)
    return RegressionTask(X=X, y=y, f_star=f_star, noise_sigma=sigma)


def make_rkhs_task(d: int, n: int, sigma: float, seed: int, desc: NtkDescriptor,
                   n_anchors: int = 12, n_holdout: int = 0):
    """Synthetic regression task with target in the kernel's representer span.

    Returns (task, holdout, f_star); the holdout shares the target and noise law.
    """
    f_star = make_rkhs_target(d, seed, desc, n_anchors)
    task = make_dataset(f_star, d, n, sigma, seed)
    holdout = None
    if n_holdout > 0:
        ht = make_dataset(f_star, d, n_holdout, sigma, seed + 1)
        holdout = (ht.X, ht.y)
    return task, holdout, f_star


def _mc_distribution(d: int) -> SampleDistribution:
    return SampleDistribution(kind="uniform_cube", d=d, seed=0)


@dataclass
class RateScalingResult:
    ns: list
    mean_risks: list
    fitted_exponent: float
    theory_exponent: float


def rate_scaling_experiment(d: int = 1, s: float = 1.0, ns: Sequence[int] = (128, 256, 512, 1024),
                            sigma: float = 0.3, c: float = 1.0, n_reps: int = 10,
                            L: int = 2, n_mc: int = 2000, root_seed: int = 0) -> RateScalingResult:
    """Fit the decay exponent of the stopped flow's squared risk against n.

    Each repetition draws one target and reuses it across all sample sizes
    (fresh data per size), so the slope is not washed out by target-norm
    variation. The representer-span target is slightly smoother than the
    nominal class, so the measured exponent sits a little above the
    prediction; the comparison is a scaled-down trend check.
    """
    desc = NtkDescriptor(L=L, variant="full")
    risks = {n: [] for n in ns}
    for rep in range(n_reps):
        seed = int(rng_for(root_seed, f"rate/rep{rep}").integers(0, 2 ** 62))
        f_star = make_rkhs_target(d, seed, desc)
        for n in ns:
            task = make_dataset(f_star, d, n, sigma, seed + n)
            pred = FlowPredictor.from_descriptor(desc, task)
            t_op = optimal_stopping_time(n, d, s, c)
            mc_seed = int(rng_for(root_seed, f"rate/rep{rep}/n{n}/mc").integers(0, 2 ** 62))
            risks[n].append(l2_risk(pred.at_time(t_op), f_star, _mc_distribution(d), n_mc, mc_seed))
    means = [float(np.mean(risks[n])) for n in ns]
    slope = float(np.polyfit(np.log(list(ns)), np.log(means), 1)[0])
    return RateScalingResult(ns=list(ns), mean_risks=means,
                             fitted_exponent=-slope, theory_exponent=risk_exponent(d, s))


@dataclass
class OverfitProbeResult:
    n_runs: int
    n_worse_at_late_time: int
    risks_at_t_op: list
    risks_late: list

    @property
    def fraction(self) -> float:
        return self.n_worse_at_late_time / self.n_runs


def overfit_probe(d: int = 1, n: int = 64, sigma: float = 0.3, n_runs: int = 20,
                  late_factor: float = 1e6, c: float = 1.0, s: float = 1.0,
                  L: int = 2, n_mc: int = 1500, root_seed: int = 0) -> OverfitProbeResult:
    """Compare risk at the early-stopped time against (effectively) interpolation."""
    desc = NtkDescriptor(L=L, variant="full")
    worse = 0
    r_op, r_late = [], []
    for run in range(n_runs):
        seed = int(rng_for(root_seed, f"overfit/run{run}").integers(0, 2 ** 62))
        task, _, f_star = make_rkhs_task(d, n, sigma, seed, desc)
        pred = FlowPredictor.from_descriptor(desc, task)
        t_op = optimal_stopping_time(n, d, s, c)
        mc_seed = int(rng_for(root_seed, f"overfit/run{run}/mc").integers(0, 2 ** 62))
        dist = _mc_distribution(d)
        a = l2_risk(pred.at_time(t_op), f_star, dist, n_mc, mc_seed)
        b = l2_risk(pred.at_time(late_factor * t_op), f_star, dist, n_mc, mc_seed)
        r_op.append(a)
        r_late.append(b)
        worse += int(b > a)
    return OverfitProbeResult(n_runs=n_runs, n_worse_at_late_time=worse,
                              risks_at_t_op=r_op, risks_late=r_late)


@dataclass
class CvRunRecord:
    t_selected: float
    norm_selected: float
    norm_best_candidate: float
    slack: float
    bound_holds: bool


@dataclass
class CvGuaranteeResult:
    runs: list
    delta: float

    @property
    def fraction_holding(self) -> float:
        return sum(r.bound_holds for r in self.runs) / len(self.runs)


def cv_guarantee_experiment(d: int = 1, n: int = 96, n_holdout: int = 96, sigma: float = 0.3,
                            M: float = 2.0, Q: float = 2.0, n_runs: int = 50, L: int = 2,
                            delta: float = 0.1, n_mc: int = 1000,
                            root_seed: int = 0) -> CvGuaranteeResult:
    """Check the CV-selected stopping time against the oracle-competitive bound.

    Per run: risk norms ||f - f*|| of every candidate, the CV pick on a fresh
    holdout, and the bound norm(selected) <= 2 * min-candidate-norm + slack.
    """
    desc = NtkDescriptor(L=L, variant="full")
    records = []
    for run in range(n_runs):
        seed = int(rng_for(root_seed, f"cv/run{run}").integers(0, 2 ** 62))
        task, holdout, f_star = make_rkhs_task(d, n, sigma, seed, desc, n_holdout=n_holdout)
        pred = FlowPredictor.from_descriptor(desc, task)
        cands = stopping_time_grid(n, Q)
        t_cv, truncated = cv_select_stopping(pred, cands, holdout, M)
        dist = _mc_distribution(d)
        mc_seed = int(rng_for(root_seed, f"cv/run{run}/mc").integers(0, 2 ** 62))
        norm_sel = math.sqrt(l2_risk(truncated, f_star, dist, n_mc, mc_seed))
        norms = [math.sqrt(l2_risk(TruncatedPredictor(pred.at_time(t), M), f_star, dist, n_mc, mc_seed))
                 for t in cands]
        slack = cv_slack_term(M, len(cands), len(holdout[1]), delta)
        best = min(norms)
        records.append(CvRunRecord(
            t_selected=t_cv, norm_selected=norm_sel, norm_best_candidate=best,
            slack=slack, bound_holds=norm_sel <= 2.0 * best + slack))
    return CvGuaranteeResult(runs=records, delta=delta)


@dataclass
class WidthSweepRow:
    m: int
    seed: int
    init_kernel_gap: float
    predictor_gap: float
    drift_ratio: float          # max-layer Frobenius drift / m^{1/4}
    final_residual: float


def width_sweep(widths: Sequence[int] = (256, 1024, 4096), n_seeds: int = 5, d: int = 2,
                L: int = 2, n_train: int = 5, eta: float = 0.1, n_steps: int = 100,
                log_every: int = 20, root_seed: int = 0,
                probes: Optional[np.ndarray] = None) -> list[WidthSweepRow]:
    """Lazy-regime trend data: kernel gap at init, flow gap along training, drift.

    All widths and seeds share one task and one probe grid, so rows are
    comparable at matched times.
    """
    desc = NtkDescriptor(L=L, variant="full")
    rng = rng_for(root_seed, "widthsweep/task")
    X = rng.uniform(-1.0, 1.0, size=(n_train, d))
    y = rng.standard_normal(n_train)
    task = RegressionTask(X=X, y=y)
    flow = FlowPredictor.from_descriptor(desc, task)
    if probes is None:
        probes = probe_grid(d)
    knt_probe = ntk_cross(desc, probes, probes)
    rows = []
    for m in widths:
        for j in range(n_seeds):
            seed = int(rng_for(root_seed, f"widthsweep/m{m}/seed{j}").integers(0, 2 ** 62))
            state = init_network(d, L, m, seed)
            k0 = tangent_kernel_matrix(state, probes)
            init_gap = float(np.abs(k0 - knt_probe).max())
            cfg = ProbeConfig(log_every=log_every, probe_points=probes, flow=flow)
            trace = train(state, X, y, eta, n_steps, cfg)
            gap = uniform_gap(trace, flow, probes)
            ratio = float(weight_drift(state).max() / m ** 0.25)
            rows.append(WidthSweepRow(m=m, seed=j, init_kernel_gap=init_gap,
                                      predictor_gap=gap, drift_ratio=ratio,
                                      final_residual=trace.train_residuals[-1]))
    return rows
