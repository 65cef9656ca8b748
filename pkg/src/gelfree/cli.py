"""Batch entry point: ``python -m gelfree <subcommand> [flags]``.

Exit codes: 0 success, 1 validation failure, 2 usage or configuration
error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import math
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import characteristics as ch
from .config import SUBCOMMANDS, ConfigError, build_config, read_config_file, thread_cap
from .errors import DomainError, ExplosionDetected, GelfreeError, InversionWarning, MeasureError
from .laplace import LaplaceEvaluator
from .massflow import LaplaceObserver, MomentObserver, init_from_measure, replicate_seeds, run_until
from .selfsimilar import SelfSimilarProfile, L_star, invert_profile
from .validation import run_validation

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3


def fmt(x) -> str:
    """17 significant digits, locale independent."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    return format(x, ".17g")


def write_csv(path: Path, header, rows):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")


def write_report(out: Path, cfg, lines, trailer=()):
    body = [f"gelfree {cfg.subcommand}", *(f"  {ln}" for ln in cfg.describe()), *lines]
    text = "\n".join(body) + "\n"
    if trailer:
        text += "# timing (excluded from the deterministic body)\n" + "".join(f"{t}\n" for t in trailer)
    (out / "report.txt").write_text(text, encoding="utf-8")


# -- subcommands ------------------------------------------------------------------

def cmd_analytic(cfg, out: Path):
    ev = LaplaceEvaluator(cfg.measure, cfg.k, root_tol=cfg.root_tol, residual_step=cfg.residual_step)
    rows = []
    for t in cfg.t_grid:
        for s in cfg.s_grid:
            d0 = ev.dL_ds_at_zero(t) if s == 0 else math.nan
            rows.append((t, s, ev(t, s), d0))
    write_csv(out / "analytic.csv", ("t", "s", "L", "dL_ds_at_zero_if_s0"), rows)
    write_report(out, cfg, [f"rows={len(rows)}", "status=ok"])
    return EXIT_OK


def cmd_characteristics(cfg, out: Path):
    path = ch.integrate_characteristics_oracle(cfg.s0, cfg.k, cfg.measure)
    idx = list(range(0, len(path), cfg.stride))
    if idx[-1] != len(path) - 1:
        idx.append(len(path) - 1)
    write_csv(out / "characteristics.csv", ("t", "Sigma", "ell"),
              ((path.t[i], path.sigma[i], path.ell[i]) for i in idx))
    T = ch.time_to_axis(cfg.s0, cfg.k, cfg.measure)
    write_report(out, cfg, [f"rows={len(idx)}", f"T_hit_oracle={fmt(path.T_hit)}",
                            f"T_closed_form={fmt(T)}", "status=ok"])
    return EXIT_OK


def cmd_selfsim(cfg, out: Path):
    prof = SelfSimilarProfile(cfg.k, inversion_order=cfg.order)
    grid = np.asarray(cfg.grid)
    write_csv(out / "selfsim_L.csv", ("s", "L_star"), zip(grid, L_star(prof, grid)))
    check = tuple(o for o in (cfg.order - 2, cfg.order + 2) if 8 <= o <= 18)
    if len(check) < 2:
        check = (10, 14)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", InversionWarning)
        rep = invert_profile(prof, grid, check_orders=check)
    write_csv(out / "selfsim_M.csv", ("x", "M_star"), zip(rep.x, rep.values))
    lines = [f"orders {check[0]}/{check[1]} gap={rep.order_gap:.3e}",
             f"largest decrease={rep.monotone_gap:.3e}"]
    lines += [f"InversionWarning: {w.message}" for w in caught]
    lines.append("status=ok" if rep.stable else "status=unstable inversion")
    write_report(out, cfg, lines)
    return EXIT_OK


def _one_replicate(args):
    measure, n, seed, k, t_end, times, s_grid, event_cap = args
    system = init_from_measure(measure, n, seed, k)
    observers = [LaplaceObserver(s) for s in s_grid] + [MomentObserver()]
    try:
        log = run_until(system, t_end, observers, observe_at=times, event_cap=event_cap, mean_cap=1e3)
    except ExplosionDetected as exc:
        return None, (exc.sim_time, exc.event_count, exc.mean_mass, str(exc))
    return (log.times, log.event_counts, log.series), None


def cmd_simulate(cfg, out: Path):
    times = list(cfg.observe_at) if cfg.observe_at else [cfg.t_end]
    seeds = [cfg.seed] if cfg.replicates == 1 else replicate_seeds(cfg.seed, cfg.replicates)
    jobs = [(cfg.measure, cfg.n_particles, sd, cfg.k, cfg.t_end, times, cfg.s_grid, cfg.event_cap)
            for sd in seeds]
    workers = min(thread_cap(), len(jobs))
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            results = list(pool.map(_one_replicate, jobs))
    else:
        results = [_one_replicate(j) for j in jobs]
    lines = [f"replicates={len(jobs)}"]
    explosions = [(i, e) for i, (_, e) in enumerate(results) if e is not None]
    for i, (t, events, mean, msg) in explosions:
        lines.append(f"replicate {i}: ExplosionDetected sim_time={fmt(t)} events={events} "
                     f"mean_mass={fmt(mean)}")
    if explosions:
        lines.append("status=explosion detected")
        write_report(out, cfg, lines)
        return EXIT_NUMERIC
    logs = [r for r, _ in results]
    obs_times = logs[0][0]
    r = len(logs)
    for name in logs[0][2]:
        rows = []
        for i, t in enumerate(obs_times):
            est = np.array([lg[2][name][i][0] for lg in logs])
            se = np.array([lg[2][name][i][1] for lg in logs])
            rows.append((t, est.mean(), math.sqrt(float(np.sum(se**2))) / r))
        write_csv(out / f"simulate_{name}.csv", ("time", "estimate", "std_error"), rows)
        lines.append(f"observer {name}: final estimate={fmt(rows[-1][1])} se={fmt(rows[-1][2])}")
    lines.append(f"events per replicate={','.join(str(lg[1][-1]) for lg in logs)}")
    lines.append("status=ok")
    write_report(out, cfg, lines)
    return EXIT_OK


def cmd_validate(cfg, out: Path):
    rep = run_validation(cfg.criteria, n_particles=cfg.n_particles, seed=cfg.seed)
    body = rep.body().rstrip("\n").splitlines()
    write_report(out, cfg, body, trailer=rep.timing().rstrip("\n").splitlines())
    for ln in body:
        print(ln)
    return EXIT_OK if rep.passed else EXIT_FAIL


COMMANDS = {
    "analytic": cmd_analytic,
    "characteristics": cmd_characteristics,
    "selfsim": cmd_selfsim,
    "simulate": cmd_simulate,
    "validate": cmd_validate,
}


# -- argument parsing ---------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gelfree", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="subcommand", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key=value file; flags override it")
    common.add_argument("--out-dir", help="directory for CSV files and report.txt")
    common.add_argument("--k", help="fragmentation strength")

    def add(name, help_, *flags):
        p = sub.add_parser(name, parents=[common], help=help_)
        for flag, h in flags:
            p.add_argument(flag, help=h)
        return p

    measure = ("--measure", "mono[:x] | atomic:x@w,... | exp:rate | powertail:a[,c]")
    add("analytic", "exact L(t, s) on a grid", measure,
        ("--t-grid", "times: a,b,c or log:lo:hi:n or lin:lo:hi:n"),
        ("--s-grid", "Laplace variables, same syntax"),
        ("--root-tol", "root-finding tolerance"),
        ("--residual-step", "finite-difference step for PDE residuals"))
    add("characteristics", "one characteristic path by RK4", measure,
        ("--s0", "starting point on the s-axis"),
        ("--stride", "write every n-th step"))
    add("selfsim", "self-similar profile and its inverse", ("--order", "Gaver-Stehfest order"),
        ("--grid", "s and x grid"))
    add("simulate", "mass-flow Monte Carlo", measure,
        ("--n-particles", "particles per replicate"), ("--seed", "root seed"),
        ("--replicates", "independent replicates"), ("--t-end", "final time"),
        ("--observe-at", "observation times"), ("--s-grid", "Laplace observers"),
        ("--event-cap", "abort after this many events"))
    add("validate", "acceptance criteria", ("--criteria", "comma list of criterion numbers"),
        ("--n-particles", "particles for Monte Carlo criteria"),
        ("--seed", "offset for Monte Carlo seeds"))
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    flags = {k: v for k, v in vars(ns).items() if k not in ("subcommand", "config")}
    try:
        file_values = read_config_file(ns.config) if ns.config else {}
        cfg = build_config(ns.subcommand, file_values, flags)
        out = Path(cfg.out_dir)
        out.mkdir(parents=True, exist_ok=True)
    except (ConfigError, MeasureError, OSError) as exc:
        print(f"gelfree: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return COMMANDS[cfg.subcommand](cfg, out)
    except (DomainError, MeasureError) as exc:
        print(f"gelfree: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (GelfreeError, ArithmeticError, RuntimeError) as exc:
        print(f"gelfree: numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
