"""Command-line front end wiring the library into reproducible experiments.

Subcommands: edr, sphere-modes, flow, train, compare, cv. Every run writes
its fully resolved configuration, delimited outputs, and (unless disabled)
rendered figures into the output directory. Exit codes: 0 success,
1 numerical failure, 2 usage or contract error.
"""

from __future__ import annotations

import argparse
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import experiments, plotting
from .config import (CompareConfig, CvConfig, EdrConfig, FlowConfig, SphereModesConfig,
                     TrainConfig, config_from_mapping, config_to_text, merge_overrides,
                     parse_config_text)
from .errors import DivergenceError, NumericalError
from .flow import FlowPredictor, RegressionTask, l2_risk, optimal_stopping_time
from .kernels import NtkDescriptor, ntk_profile
from .network import ProbeConfig, init_network, probe_grid, save_checkpoint, train
from .rng import rng_for
from .spectral import SampleDistribution, fit_decay, theory_rate
from .sphere import SphereGeometry, funk_hecke_modes

DIST_CHOICES = ("ucube", "u01", "triangular", "clipped_normal")


def _fmt(x) -> str:
    return repr(float(x))


def _prepare_out(args, cfg) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "resolved_config.cfg").write_text(config_to_text(cfg))
    return out


def _load_config(cls, args, overrides: dict):
    mapping = {}
    if args.config:
        mapping = parse_config_text(Path(args.config).read_text())
    cfg = config_from_mapping(cls, mapping)
    return merge_overrides(cfg, overrides)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value config file; flags override file values")
    p.add_argument("--out", default="out", help="output directory (default: ./out)")
    p.add_argument("--seed", type=int, default=None, help="root seed for all substreams")
    p.add_argument("--no-figures", action="store_true", help="skip figure rendering")
    p.add_argument("--plot-data", action="store_true",
                   help="emit (x, y) pair files ready for external log-log plotting")


# ----------------------------------------------------------------- edr ----

def cmd_edr(args) -> int:
    overrides = {
        "seed": args.seed, "n": args.n, "seeds": args.seeds, "workers": args.workers,
        "window_lo": args.window_lo, "window_hi": args.window_hi,
    }
    if args.dist:
        for name in args.dist:
            if name not in DIST_CHOICES:
                raise ValueError(f"unknown distribution name {name!r}; choices: {DIST_CHOICES}")
        overrides["distributions"] = tuple(args.dist)
    if args.d:
        overrides["d_values"] = tuple(args.d)
    if args.L:
        overrides["L_values"] = tuple(args.L)
    cfg: EdrConfig = _load_config(EdrConfig, args, overrides)
    for name in cfg.distributions:
        if name not in DIST_CHOICES:
            raise ValueError(f"unknown distribution name {name!r}; choices: {DIST_CHOICES}")
    out = _prepare_out(args, cfg)
    window = (cfg.window_lo, cfg.window_hi)

    jobs = [(kind, d, L) for kind in cfg.distributions for d in cfg.d_values for L in cfg.L_values]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(_edr_cell_job,
                                    [(k, d, L, cfg.n, window, cfg.seeds, cfg.seed) for k, d, L in jobs]))
    else:
        results = [_edr_cell_job((k, d, L, cfg.n, window, cfg.seeds, cfg.seed)) for k, d, L in jobs]

    table = out / "edr_table.csv"
    with open(table, "w") as fh:
        fh.write("distribution,d,L,r_mean,r_std,r_theory,n,window_lo,window_hi,seeds\n")
        for res in results:
            c = res.cell
            fh.write(f"{c.dist_kind},{c.d},{c.L},{_fmt(res.r_mean)},{_fmt(res.r_std)},"
                     f"{_fmt(theory_rate(c.d))},{res.n},{window[0]},{window[1]},{cfg.seeds}\n")
    for res in results:
        c = res.cell
        stem = f"{c.dist_kind}_d{c.d}_L{c.L}"
        lams = res.spectra[res.seeds[0]]
        with open(out / f"spectrum_{stem}.csv", "w") as fh:
            fh.write("i,lambda_i\n")
            for i, lam in enumerate(lams, start=1):
                fh.write(f"{i},{_fmt(lam)}\n")
        fit = fit_decay(lams, window)
        if args.plot_data:
            with open(out / f"plotdata_{stem}.csv", "w") as fh:
                fh.write("i,lambda_i,powerlaw_fit\n")
                for i, lam in enumerate(lams, start=1):
                    fh.write(f"{i},{_fmt(lam)},{_fmt(math.exp(fit.intercept) * i ** (-fit.rate))}\n")
        if not args.no_figures:
            plotting.save_spectrum_figure(
                out / f"fig_spectrum_{stem}.png", lams, window, fit.rate, fit.intercept,
                title=f"{c.dist_kind}, d={c.d}, L={c.L}: r={res.r_mean:.3f}")
        print(f"{c.dist_kind:>14s} d={c.d} L={c.L}: r = {res.r_mean:.3f} +- {res.r_std:.3f} "
              f"(theory {theory_rate(c.d):.3f})")
    print(f"wrote {table}")
    return 0


def _edr_cell_job(packed):
    from .spectral import EdrCell, run_edr_cell
    kind, d, L, n, window, seeds, root_seed = packed
    return run_edr_cell(EdrCell(kind, d, L), n, window, seeds, root_seed)


# -------------------------------------------------------- sphere-modes ----

def cmd_sphere_modes(args) -> int:
    overrides = {"seed": args.seed, "profile": args.profile, "d": args.d, "L": args.L,
                 "n_max": args.n_max, "quad_order": args.quad_order}
    cfg: SphereModesConfig = _load_config(SphereModesConfig, args, overrides)
    out = _prepare_out(args, cfg)

    geometry = SphereGeometry(cfg.d)
    if cfg.profile == "ntk":
        desc = NtkDescriptor(L=cfg.L, variant="homogeneous")
        profile = lambda u: ntk_profile(desc, u)
        profile_at_one = float(ntk_profile(desc, 1.0))
    elif cfg.profile == "constant":
        profile = lambda u: np.ones_like(np.asarray(u, dtype=float))
        profile_at_one = 1.0
    elif cfg.profile == "linear":
        profile = lambda u: np.asarray(u, dtype=float)
        profile_at_one = 1.0
    else:
        raise ValueError(f"unknown profile {cfg.profile!r}; choices: ntk, constant, linear")

    spectrum = funk_hecke_modes(profile, geometry, cfg.n_max, cfg.quad_order)
    spectrum.save_csv(out / "modes.csv")

    trace = float(spectrum.trace_partial_sums()[-1])
    lines = [f"profile = {cfg.profile}, d = {cfg.d}, L = {cfg.L}, n_max = {cfg.n_max}",
             f"trace sum mu_n * a_n = {trace!r} (profile at u=1: {profile_at_one!r})"]
    slope = None
    lo, hi = cfg.fit_lo, min(cfg.fit_hi, cfg.n_max)
    chunk = spectrum.mu[lo:hi + 1]
    if lo >= 1 and len(chunk) >= 3 and (chunk > 0).all():
        ns = np.arange(lo, hi + 1, dtype=float)
        slope = float(np.polyfit(np.log(ns), np.log(chunk), 1)[0])
        lines.append(f"log-log mode slope over n in [{lo}, {hi}]: {slope!r}")
    else:
        lines.append("log-log mode slope: skipped (window contains nonpositive modes)")
    (out / "summary.txt").write_text("\n".join(lines) + "\n")
    for line in lines:
        print(line)

    if args.plot_data:
        with open(out / "plotdata_modes.csv", "w") as fh:
            fh.write("n,mu_n\n")
            for n, mu in enumerate(spectrum.mu):
                fh.write(f"{n},{_fmt(mu)}\n")
    if not args.no_figures:
        plotting.save_modes_figure(out / "fig_modes.png", spectrum.mu,
                                   fit_window=(lo, hi) if slope is not None else None,
                                   slope=slope, title=f"{cfg.profile} profile on S^{cfg.d}")
    return 0


# ---------------------------------------------------------------- flow ----

def cmd_flow(args) -> int:
    overrides = {"seed": args.seed, "d": args.d, "L": args.L, "n": args.n,
                 "sigma": args.sigma, "s": args.s, "Q": args.Q, "M": args.M,
                 "t_min": args.t_min, "t_max": args.t_max, "t_count": args.t_count}
    cfg: FlowConfig = _load_config(FlowConfig, args, overrides)
    out = _prepare_out(args, cfg)

    desc = NtkDescriptor(L=cfg.L, variant="full")
    seed = int(rng_for(cfg.seed, "flow/task").integers(0, 2 ** 62))
    task, holdout, f_star = experiments.make_rkhs_task(
        cfg.d, cfg.n, cfg.sigma, seed, desc, n_holdout=cfg.n_holdout)
    pred = FlowPredictor.from_descriptor(desc, task)
    times = np.geomspace(cfg.t_min, cfg.t_max, cfg.t_count)
    t_op = optimal_stopping_time(cfg.n, cfg.d, cfg.s, cfg.c)

    mc_seed = int(rng_for(cfg.seed, "flow/mc").integers(0, 2 ** 62))
    dist = SampleDistribution(kind="uniform_cube", d=cfg.d, seed=0)
    Xh, yh = holdout
    Kh = pred.cross(np.atleast_2d(Xh), pred.X)
    rows = []
    for t in times:
        coef = pred.coefficients(float(t))
        resid = pred.train_residual_norm(float(t))
        hold = float(np.mean((Kh @ coef - yh) ** 2))
        l2 = l2_risk(pred.at_time(float(t)), f_star, dist, cfg.n_mc, mc_seed)
        rows.append((float(t), resid, hold, l2))

    with open(out / "risk_curve.csv", "w") as fh:
        fh.write("t,train_residual,holdout_risk,l2_risk\n")
        for t, resid, hold, l2 in rows:
            fh.write(f"{_fmt(t)},{_fmt(resid)},{_fmt(hold)},{_fmt(l2)}\n")
    if args.plot_data:
        with open(out / "plotdata_risk.csv", "w") as fh:
            fh.write("t,l2_risk\n")
            for t, _, _, l2 in rows:
                fh.write(f"{_fmt(t)},{_fmt(l2)}\n")
    if not args.no_figures:
        plotting.save_risk_curve_figure(out / "fig_risk_curve.png",
                                        [r[0] for r in rows], [r[1] for r in rows],
                                        [r[2] for r in rows], [r[3] for r in rows], t_op=t_op)
    best = min(rows, key=lambda r: r[3])
    print(f"stopping-time guideline t_op = {t_op:.3f}; best grid time by population risk: "
          f"{best[0]:.3f} (risk {best[3]:.5f})")
    print(f"final train residual: {rows[-1][1]:.3e} (|y| = {np.linalg.norm(task.y):.3e})")
    return 0


# --------------------------------------------------------------- train ----

def cmd_train(args) -> int:
    overrides = {"seed": args.seed, "d": args.d, "L": args.L, "m": args.m, "n": args.n,
                 "eta": args.eta, "steps": args.steps, "log_every": args.log_every,
                 "kernel_gaps": args.kernel_gaps or None}
    cfg: TrainConfig = _load_config(TrainConfig, args, overrides)
    out = _prepare_out(args, cfg)

    desc = NtkDescriptor(L=cfg.L, variant="full")
    rng = rng_for(cfg.seed, "train/task")
    X = rng.uniform(-1.0, 1.0, size=(cfg.n, cfg.d))
    y = rng.standard_normal(cfg.n)
    flow = FlowPredictor.from_descriptor(desc, RegressionTask(X=X, y=y))
    probes = probe_grid(cfg.d)
    net_seed = int(rng_for(cfg.seed, "train/init").integers(0, 2 ** 62))
    state = init_network(cfg.d, cfg.L, cfg.m, net_seed)
    probe_cfg = ProbeConfig(log_every=cfg.log_every, probe_points=probes,
                            ntk_desc=desc if cfg.kernel_gaps else None,
                            flow=flow, kernel_gaps=cfg.kernel_gaps)
    try:
        trace = train(state, X, y, cfg.eta, cfg.steps, probe_cfg)
    except DivergenceError as exc:
        diag = out / "abort_diagnostics.txt"
        with open(diag, "w") as fh:
            fh.write(str(exc) + "\n")
            for k, v in exc.diagnostics.items():
                fh.write(f"{k} = {v}\n")
        print(f"training diverged; diagnostics in {diag}", file=sys.stderr)
        return 1

    with open(out / "trace.csv", "w") as fh:
        drift_cols = ",".join(f"drift_l{l}" for l in range(cfg.L + 1))
        fh.write(f"t,residual,{drift_cols},kernel_gap,predictor_gap\n")
        for i, t in enumerate(trace.times):
            drifts = ",".join(_fmt(v) for v in trace.weight_drifts[i])
            kg = _fmt(trace.kernel_gaps[i]) if trace.kernel_gaps is not None else ""
            pg = _fmt(trace.predictor_gaps[i]) if trace.predictor_gaps is not None else ""
            fh.write(f"{_fmt(t)},{_fmt(trace.train_residuals[i])},{drifts},{kg},{pg}\n")
    save_checkpoint(state, out / "checkpoint.npz")
    if not args.no_figures:
        plotting.save_trace_figure(out / "fig_trace.png", trace)
    print(f"trained m={cfg.m} for {cfg.steps} steps: final residual "
          f"{trace.train_residuals[-1]:.3e}, max flow gap "
          f"{max(trace.predictor_gaps):.4f}")
    return 0


# ------------------------------------------------------------- compare ----

def cmd_compare(args) -> int:
    overrides = {"seed": args.seed, "d": args.d, "L": args.L, "eta": args.eta,
                 "steps": args.steps, "seeds": args.seeds}
    if args.widths:
        overrides["widths"] = tuple(args.widths)
    cfg: CompareConfig = _load_config(CompareConfig, args, overrides)
    out = _prepare_out(args, cfg)

    rows = experiments.width_sweep(widths=cfg.widths, n_seeds=cfg.seeds, d=cfg.d, L=cfg.L,
                                   n_train=cfg.n_train, eta=cfg.eta, n_steps=cfg.steps,
                                   log_every=cfg.log_every, root_seed=cfg.seed)
    with open(out / "width_gaps.csv", "w") as fh:
        fh.write("m,seed,init_kernel_gap,predictor_gap,drift_ratio,final_residual\n")
        for r in rows:
            fh.write(f"{r.m},{r.seed},{_fmt(r.init_kernel_gap)},{_fmt(r.predictor_gap)},"
                     f"{_fmt(r.drift_ratio)},{_fmt(r.final_residual)}\n")
    if args.plot_data:
        with open(out / "plotdata_width_gaps.csv", "w") as fh:
            fh.write("m,predictor_gap\n")
            for r in rows:
                fh.write(f"{r.m},{_fmt(r.predictor_gap)}\n")
    if not args.no_figures:
        plotting.save_width_gap_figure(out / "fig_width_gaps.png", rows)
    for m in cfg.widths:
        sub = [r for r in rows if r.m == m]
        print(f"m={m}: kernel gap {np.mean([r.init_kernel_gap for r in sub]):.4f}, "
              f"flow gap {np.mean([r.predictor_gap for r in sub]):.4f}, "
              f"drift ratio {np.mean([r.drift_ratio for r in sub]):.4f}")
    return 0


# ------------------------------------------------------------------ cv ----

def cmd_cv(args) -> int:
    overrides = {"seed": args.seed, "d": args.d, "L": args.L, "n": args.n,
                 "sigma": args.sigma, "M": args.M, "Q": args.Q, "runs": args.runs}
    cfg: CvConfig = _load_config(CvConfig, args, overrides)
    out = _prepare_out(args, cfg)

    result = experiments.cv_guarantee_experiment(
        d=cfg.d, n=cfg.n, n_holdout=cfg.n_holdout, sigma=cfg.sigma, M=cfg.M, Q=cfg.Q,
        n_runs=cfg.runs, L=cfg.L, n_mc=cfg.n_mc, root_seed=cfg.seed)
    with open(out / "cv_runs.csv", "w") as fh:
        fh.write("run,t_selected,norm_selected,norm_best_candidate,slack,bound_holds\n")
        for i, r in enumerate(result.runs):
            fh.write(f"{i},{_fmt(r.t_selected)},{_fmt(r.norm_selected)},"
                     f"{_fmt(r.norm_best_candidate)},{_fmt(r.slack)},{int(r.bound_holds)}\n")
    if not args.no_figures:
        plotting.save_cv_figure(out / "fig_cv_selected.png", result.runs)
    print(f"oracle-competitive bound held in {result.fraction_holding:.0%} of {cfg.runs} runs")
    return 0


# ---------------------------------------------------------------- main ----

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ntkspectra",
        description="Tangent-kernel spectra, kernel gradient-flow regression, and "
                    "mirrored-network training experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("edr", help="decay-rate grid over distributions, dimensions, depths")
    _add_common(p)
    p.add_argument("--dist", nargs="*", help=f"distribution names (default grid); choices: {DIST_CHOICES}")
    p.add_argument("--d", nargs="*", type=int, help="input dimensions")
    p.add_argument("--L", nargs="*", type=int, help="hidden-layer counts")
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--seeds", type=int, default=None, help="seeds averaged per cell")
    p.add_argument("--window-lo", type=int, default=None)
    p.add_argument("--window-hi", type=int, default=None)
    p.add_argument("--workers", type=int, default=None, help="parallel cell workers")
    p.set_defaults(func=cmd_edr)

    p = sub.add_parser("sphere-modes", help="per-degree mode extraction on the sphere")
    _add_common(p)
    p.add_argument("--profile", default=None, help="ntk | constant | linear")
    p.add_argument("--d", type=int, default=None)
    p.add_argument("--L", type=int, default=None)
    p.add_argument("--n-max", type=int, default=None)
    p.add_argument("--quad-order", type=int, default=None)
    p.set_defaults(func=cmd_sphere_modes)

    p = sub.add_parser("flow", help="kernel gradient-flow risk curve on a synthetic task")
    _add_common(p)
    for name, typ in (("--d", int), ("--L", int), ("--n", int), ("--sigma", float),
                      ("--s", float), ("--Q", float), ("--M", float), ("--t-min", float),
                      ("--t-max", float), ("--t-count", int)):
        p.add_argument(name, type=typ, default=None)
    p.set_defaults(func=cmd_flow)

    p = sub.add_parser("train", help="mirrored-network gradient descent with trace logging")
    _add_common(p)
    for name, typ in (("--d", int), ("--L", int), ("--m", int), ("--n", int),
                      ("--eta", float), ("--steps", int), ("--log-every", int)):
        p.add_argument(name, type=typ, default=None)
    p.add_argument("--kernel-gaps", action="store_true", help="log tangent-kernel drift (slow)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("compare", help="width sweep of network-to-flow gaps")
    _add_common(p)
    p.add_argument("--widths", nargs="*", type=int, default=None)
    p.add_argument("--seeds", type=int, default=None)
    p.add_argument("--d", type=int, default=None)
    p.add_argument("--L", type=int, default=None)
    p.add_argument("--eta", type=float, default=None)
    p.add_argument("--steps", type=int, default=None)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("cv", help="cross-validated stopping-time selection experiment")
    _add_common(p)
    for name, typ in (("--d", int), ("--L", int), ("--n", int), ("--sigma", float),
                      ("--M", float), ("--Q", float), ("--runs", int)):
        p.add_argument(name, type=typ, default=None)
    p.set_defaults(func=cmd_cv)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DivergenceError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
