"""Command line front end: ``thermogap <subcommand> --config run.toml``.

Every run writes ``<subcommand>.json`` and, where there is tabular data,
``<subcommand>.csv`` into the output directory.  ``--plots`` adds an SVG.

Exit codes: 0 success, 1 numeric failure, 2 standing hypotheses fail for
a subcommand that needs them, 3 invalid configuration.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import config as cfgmod
from ._version import __version__
from .errors import ConfigError, NumericFailure, ThermogapError

__all__ = ["main", "run", "SUBCOMMANDS", "EXIT_OK", "EXIT_NUMERIC", "EXIT_HYPOTHESES", "EXIT_CONFIG"]

EXIT_OK, EXIT_NUMERIC, EXIT_HYPOTHESES, EXIT_CONFIG = 0, 1, 2, 3

SUBCOMMANDS = ("check", "spectrum", "density", "cones", "correlations", "clt", "sweep",
               "random-stability", "demo-discontinuity", "validate")
NEEDS_HYPOTHESES = ("density", "cones", "sweep", "random-stability")


class Outcome:
    """What a subcommand produced: JSON payload, CSV table, optional plot."""

    def __init__(self, result: dict, header=None, rows=None, plot=None, code: int = EXIT_OK):
        self.result = result
        self.header = header
        self.rows = rows
        self.plot = plot
        self.code = code


# ---------------------------------------------------------------- writers

def _plain(obj):
    """JSON-safe copy: numpy scalars unwrapped, non-finite floats to null."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_json(path: Path, payload: dict) -> None:
    text = json.dumps(_plain(payload), sort_keys=True, indent=2, allow_nan=False)
    path.write_text(text + "\n", encoding="utf-8")


def write_csv(path: Path, header, rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    path.write_text(buf.getvalue(), encoding="utf-8")


def write_svg(path: Path, draw) -> bool:
    try:
        import matplotlib
    except ImportError:
        print("matplotlib is not installed; skipping plot", file=sys.stderr)
        return False
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    with matplotlib.rc_context({"svg.hashsalt": "thermogap", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(6, 4))
        draw(ax)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
    return True


# ---------------------------------------------------------------- helpers

def _hypotheses(cfg, fmap, pot):
    from .hypotheses import check_hypotheses

    const = cfgmod.section(cfg, "constants")
    return check_hypotheses(
        fmap, pot, alpha=const.get("hoelder_exponent"), delta=float(const["delta"]),
        gamma=float(const["gamma"]), c=const.get("c"), r=int(const["r"]),
        n=int(cfgmod.section(cfg, "numerics")["check_grid"]), sigma=const.get("sigma"),
    )


def _solve(cfg, fmap, pot):
    from .operator import solve

    num = cfgmod.section(cfg, "numerics")
    return solve(fmap, pot, int(num["N"]), tol=float(num["tol"]), max_iter=int(num["max_iter"]))


def _alpha(cfg, pot) -> float:
    a = cfgmod.get_path(cfg, "constants.hoelder_exponent")
    return float(pot.hoelder_exponent if a is None else a)


def _failed_hypotheses(report) -> Outcome:
    return Outcome({"status": "hypotheses_failed", "hypotheses": report.to_dict()},
                   code=EXIT_HYPOTHESES)


# ------------------------------------------------------------ subcommands

def cmd_check(cfg, args) -> Outcome:
    fmap, pot = cfgmod.build_pair(cfg)
    report = _hypotheses(cfg, fmap, pot)
    print(report.table())
    rows = [(r.name, r.lhs, r.rhs, r.margin, r.passed, r.flagged, r.refinement_error)
            for r in report.records]
    return Outcome({"status": "ok" if report.passed else "hypotheses_failed",
                    "hypotheses": report.to_dict()},
                   ("condition", "lhs", "rhs", "margin", "passed", "flagged", "refinement_error"),
                   rows, code=EXIT_OK if report.passed else EXIT_HYPOTHESES)


def cmd_spectrum(cfg, args) -> Outcome:
    fmap, pot = cfgmod.build_pair(cfg)
    report = _hypotheses(cfg, fmap, pot)
    sol = _solve(cfg, fmap, pot)
    warnings = list(sol.warnings)
    if not report.passed:
        failing = [r.name for r in report.records if not r.passed]
        warnings.append("hypotheses not satisfied: " + ", ".join(failing))
    res = sol.to_dict()
    res["warnings"] = warnings
    res["hypotheses_passed"] = report.passed
    x = sol.h.points
    rows = list(zip(x, sol.h.values, sol.nu, sol.mu))
    print(f"lambda = {sol.lam!r}  pressure = {sol.pressure!r}  tau_sub = {sol.tau_sub:.6g}")

    def draw(ax):
        ax.plot(x, sol.h.values)
        ax.set_xlabel("x")
        ax.set_ylabel("h(x)")
        ax.set_title("invariant density")

    return Outcome({"status": "ok", "spectrum": res}, ("x", "h", "nu", "mu"), rows, draw)


def cmd_density(cfg, args) -> Outcome:
    from .cones import ConeParams, verify_invariance
    from .hypotheses import global_holder_factor
    from .operator import convergence_report

    fmap, pot = cfgmod.build_pair(cfg)
    report = _hypotheses(cfg, fmap, pot)
    if not report.passed:
        return _failed_hypotheses(report)
    const, dens = cfgmod.section(cfg, "constants"), cfgmod.section(cfg, "density")
    cone = cfgmod.section(cfg, "cones")
    alpha = _alpha(cfg, pot)
    params = ConeParams(float(const["kappa"]), float(const["delta"]), alpha)
    seed = int(cfgmod.get_path(cfg, "run.seed", 0))
    inv = verify_invariance(fmap, pot, params, int(cone["samples"]), seed, int(cone["grid"]))
    sol = _solve(cfg, fmap, pot)
    rep = convergence_report(sol, params.kappa, inv.lambda_hat, global_holder_factor(params.delta),
                             alpha, int(dens["n_max"]), float(dens["floor"]))
    n = np.arange(rep.errors.size)
    rows = list(zip(n, rep.errors, rep.bounds, rep.theta_plus))
    print(f"Delta = {rep.Delta:.6g}  tau = {rep.tau:.6g}  bound holds: {rep.holds}")

    def draw(ax):
        ax.semilogy(n, np.maximum(rep.errors, 1e-300), "o-", label="sup error")
        ax.semilogy(n, rep.bounds, "--", label="bound")
        ax.set_xlabel("n")
        ax.legend()

    return Outcome({"status": "ok", "invariance": inv.to_dict(), "convergence": rep.to_dict(),
                    "lambda": sol.lam}, ("n", "error", "bound", "theta_plus"), rows, draw)


def cmd_cones(cfg, args) -> Outcome:
    from .cones import ConeParams, contraction_check, random_cone_members, verify_invariance
    from .hypotheses import global_holder_factor

    fmap, pot = cfgmod.build_pair(cfg)
    report = _hypotheses(cfg, fmap, pot)
    if not report.passed:
        return _failed_hypotheses(report)
    const, cone = cfgmod.section(cfg, "constants"), cfgmod.section(cfg, "cones")
    params = ConeParams(float(const["kappa"]), float(const["delta"]), _alpha(cfg, pot))
    seed = int(cfg["run"]["seed"])
    grid = int(cone["grid"])
    inv = verify_invariance(fmap, pot, params, int(cone["samples"]), seed, grid)
    members = random_cone_members(params, 2 * int(cone["pairs"]), seed + 1, grid)
    pairs = list(zip(members[0::2], members[1::2]))
    res = contraction_check(fmap, pot, params, pairs, int(cone["n_iter"]), inv.lambda_hat,
                            global_holder_factor(params.delta), grid)
    rows = []
    for p in range(len(pairs)):
        for k in range(res.theta_kappa.shape[1]):
            rows.append((p, k, res.theta_plus[p, k], res.theta_kappa[p, k], res.theta_plus_bounds[k]))
    print(f"lambda_hat = {inv.lambda_hat:.6g}  Delta = {res.Delta:.6g}  "
          f"max factor = {res.max_factor:.6g}  bound = {res.bound:.6g}")
    ok = res.contraction_holds and res.theta_plus_holds

    def draw(ax):
        n = np.arange(res.theta_plus.shape[1])
        for row in res.theta_plus:
            ax.semilogy(n, np.maximum(row, 1e-300), color="0.6", lw=0.8)
        ax.semilogy(n, res.theta_plus_bounds, "k--", label="bound")
        ax.set_xlabel("n")
        ax.set_ylabel("projective distance")
        ax.legend()

    return Outcome({"status": "ok" if ok else "bound_violated", "invariance": inv.to_dict(),
                    "contraction": res.to_dict()},
                   ("pair", "n", "theta_plus", "theta_kappa", "bound"), rows, draw)


def cmd_correlations(cfg, args) -> Outcome:
    from .statistics import correlation

    fmap, pot = cfgmod.build_pair(cfg)
    sec = cfgmod.section(cfg, "correlations")
    phi = cfgmod.observable(sec["observable"])
    psi = cfgmod.observable(sec.get("observable2", sec["observable"]))
    sol = _solve(cfg, fmap, pot)
    series = correlation(sol, phi, psi, int(sec["n_max"]))
    n = np.arange(series.values.size)
    print(f"tau_fit = {series.tau_fit}  r2 = {series.r2}  tau_sub = {sol.tau_sub:.6g}")

    def draw(ax):
        ax.semilogy(n, np.maximum(np.abs(series.values), 1e-300), "o-")
        ax.set_xlabel("n")
        ax.set_ylabel("|C(n)|")

    return Outcome({"status": "ok", "correlations": series.to_dict(), "tau_sub": sol.tau_sub,
                    "lambda": sol.lam}, ("n", "C"), list(zip(n, series.values)), draw)


def cmd_clt(cfg, args) -> Outcome:
    from .statistics import clt_empirical, green_kubo

    fmap, pot = cfgmod.build_pair(cfg)
    sec = cfgmod.section(cfg, "clt")
    phi = cfgmod.observable(sec["observable"])
    sol = _solve(cfg, fmap, pot)
    gk = green_kubo(sol, phi, int(sec["J"]))
    res = clt_empirical(fmap, sol, phi, int(sec["n"]), int(sec["samples"]), int(cfg["run"]["seed"]),
                        J=gk.J, sigma2=gk.sigma2, threads=args.threads)
    n = np.arange(gk.correlations.values.size)
    print(f"sigma2 = {gk.sigma2!r}  KS = {res.ks:.6g}  (p = {res.ks_pvalue:.3g})")
    return Outcome({"status": "ok", "clt": res.to_dict(), "green_kubo_truncation": gk.truncation_error},
                   ("n", "C"), list(zip(n, gk.correlations.values)))


def cmd_sweep(cfg, args) -> Outcome:
    from .stability import pressure_density_sweep

    sec = cfgmod.section(cfg, "sweep")
    path, values, ref = sec["parameter"], [float(v) for v in sec["values"]], float(sec["reference"])

    def family(t):
        return cfgmod.build_pair(cfgmod.set_path(cfg, path, t))

    reports = {}
    for t in [ref] + values:
        rep = _hypotheses(cfg, *family(t))
        reports[repr(t)] = rep
        if not rep.passed:
            out = _failed_hypotheses(rep)
            out.result["failed_at"] = t
            return out
    N = int(cfgmod.section(cfg, "numerics")["N"])
    tab = pressure_density_sweep(family, values, N, float(cfgmod.section(cfg, "numerics")["tol"]),
                                 t_ref=ref, threads=args.threads)
    rows = tab.rows()
    ref_p = math.log(tab.reference_lam)
    for row in rows:
        row["pressure_dist"] = abs(row["pressure"] - ref_p)
    header = list(rows[0].keys()) if rows else ["t"]
    print("t, |P(t)-P(ref)|, ||h_t-h_ref||:")
    for row in rows:
        print(f"  {row['t']:<10g}{row['pressure_dist']:<14.6g}{row['h_dist']:.6g}")

    def draw(ax):
        ts = [r["t"] for r in rows]
        ax.loglog(ts, [r["pressure_dist"] for r in rows], "o-", label="pressure")
        ax.loglog(ts, [r["h_dist"] for r in rows], "s-", label="density")
        ax.set_xlabel("parameter")
        ax.legend()

    return Outcome({"status": "ok", "parameter": path, "reference": ref,
                    "reference_pressure": ref_p, "rows": rows},
                   header, [[r[k] for k in header] for r in rows], draw)


def cmd_random_stability(cfg, args) -> Outcome:
    from .stability import random_stability_sweep

    sec = cfgmod.section(cfg, "random_stability")
    path = sec["parameter"]
    center = cfgmod.get_path(cfg, path)
    if center is None:
        raise ConfigError("invalid configuration", [f"{path}: needed as the perturbation centre"])

    def family(p):
        return cfgmod.build_pair(cfgmod.set_path(cfg, path, p))

    report = _hypotheses(cfg, *family(center))
    if not report.passed:
        return _failed_hypotheses(report)
    num = cfgmod.section(cfg, "numerics")
    rows = random_stability_sweep(float(center), [float(e) for e in sec["epsilons"]], family,
                                  int(sec["support_size"]), int(cfg["run"]["seed"]),
                                  int(num["N"]), float(num["tol"]))
    header = list(rows[0].keys())
    for r in rows:
        print(f"  eps = {r['epsilon']:<8g} |lambda_eps - lambda| = {r['lambda_dist']:.4g}"
              f"  tau_sub = {r['tau_sub']:.4g}")

    def draw(ax):
        eps = [r["epsilon"] for r in rows if r["epsilon"] > 0]
        ax.loglog(eps, [r["lambda_dist"] for r in rows if r["epsilon"] > 0], "o-")
        ax.set_xlabel("epsilon")
        ax.set_ylabel("|lambda_eps - lambda|")

    return Outcome({"status": "ok", "parameter": path, "center": center, "rows": rows},
                   header, [[r[k] for k in header] for r in rows], draw)


def cmd_demo_discontinuity(cfg, args) -> Outcome:
    from .stability import lip_discontinuity_demo

    sec = cfgmod.section(cfg, "discontinuity")
    rows = lip_discontinuity_demo([int(n) for n in sec["n_list"]], int(sec["grid"]))
    for r in rows:
        print(f"  n = {r['n']:<6d} Lip = {r['lip']:.6g}  sup = {r['sup']:.6g}")
    sups = [r["sup"] for r in rows]

    def draw(ax):
        ax.loglog([r["n"] for r in rows], sups, "o-", label="sup norm")
        ax.loglog([r["n"] for r in rows], [r["lip"] for r in rows], "s-", label="Lipschitz")
        ax.set_xlabel("n")
        ax.legend()

    return Outcome({"status": "ok", "rows": rows, "min_lip": min(r["lip"] for r in rows),
                    "sup_strictly_decreasing": all(a > b for a, b in zip(sups, sups[1:]))},
                   ("n", "lip", "sup"), [(r["n"], r["lip"], r["sup"]) for r in rows], draw)


COMMANDS = {
    "check": cmd_check,
    "spectrum": cmd_spectrum,
    "density": cmd_density,
    "cones": cmd_cones,
    "correlations": cmd_correlations,
    "clt": cmd_clt,
    "sweep": cmd_sweep,
    "random-stability": cmd_random_stability,
    "demo-discontinuity": cmd_demo_discontinuity,
}


# ------------------------------------------------------------------ driver

def _threads(value) -> int:
    if value is not None:
        return value
    env = os.environ.get("THERMOGAP_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError:
            raise ConfigError("invalid environment", [f"THERMOGAP_THREADS: not an integer: {env!r}"])
        if n < 1:
            raise ConfigError("invalid environment", ["THERMOGAP_THREADS: must be at least 1"])
        return n
    return 1


def _positive_int(text: str) -> int:
    n = int(text)
    if n < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return n


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="TOML experiment file")
    common.add_argument("--out", type=Path, help="output directory (default: run.out or ./results)")
    common.add_argument("--plots", action="store_true", help="also write an SVG plot")
    common.add_argument("--threads", type=_positive_int, default=None,
                        help="worker threads (default: $THERMOGAP_THREADS or 1)")
    common.add_argument("--seed-override", type=int, default=None, help="replace run.seed")

    parser = argparse.ArgumentParser(prog="thermogap", description=(
        "Transfer operators, equilibrium states and spectral gaps for circle maps."))
    parser.add_argument("--version", action="version", version=f"thermogap {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name, parents=[common])
        if name == "validate":
            p.add_argument("--for", dest="target", choices=[c for c in SUBCOMMANDS if c != "validate"],
                           help="also check keys required by this subcommand")
    return parser


def _load(args) -> dict:
    if args.config is None:
        if args.command == "demo-discontinuity":
            cfg = {}
        else:
            raise ConfigError("missing configuration", ["--config: required by " + args.command])
    else:
        cfg = cfgmod.load_config(args.config)
    if args.seed_override is not None:
        cfg = cfgmod.set_path(cfg, "run.seed", args.seed_override)
    return cfg


def run(args) -> int:
    """Execute parsed arguments and return the exit code."""
    try:
        cfg = _load(args)
        args.threads = _threads(args.threads)
        if args.command == "validate":
            diags = cfgmod.validate(cfg, args.target)
            for d in diags:
                print(d)
            if not diags:
                print("configuration is valid")
            return EXIT_OK if not diags else EXIT_CONFIG
        if args.command != "demo-discontinuity":
            diags = cfgmod.validate(cfg, args.command)
            if diags:
                raise ConfigError("invalid configuration", diags)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        for d in exc.diagnostics:
            print(f"  {d}", file=sys.stderr)
        return EXIT_CONFIG

    out_dir = args.out or Path(cfgmod.get_path(cfg, "run.out", "results"))
    out_dir.mkdir(parents=True, exist_ok=True)
    header = {"tool": "thermogap", "version": __version__, "subcommand": args.command,
              "config_hash": cfgmod.config_hash(cfg)}
    try:
        outcome = COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        for d in exc.diagnostics:
            print(f"  {d}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericFailure, ThermogapError, ArithmeticError) as exc:
        write_json(out_dir / f"{args.command}.json",
                   {**header, "status": "numeric_failure", "error": f"{type(exc).__name__}: {exc}"})
        print(f"numeric failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC

    write_json(out_dir / f"{args.command}.json", {**header, **outcome.result})
    if outcome.rows is not None:
        write_csv(out_dir / f"{args.command}.csv", outcome.header, outcome.rows)
    if args.plots and outcome.plot is not None:
        write_svg(out_dir / f"{args.command}.svg", outcome.plot)
    if outcome.code == EXIT_HYPOTHESES and args.command in NEEDS_HYPOTHESES:
        print("standing hypotheses fail; run `thermogap check` for the table", file=sys.stderr)
    return outcome.code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return run(args)


if __name__ == "__main__":
    sys.exit(main())
