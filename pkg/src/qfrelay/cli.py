"""Command-line front end.

Every subcommand reads a scenario (``--config`` JSON file or a built-in
``--preset``), computes, and writes CSV or JSON to ``--out`` or stdout.
Exit codes: 0 ok, 1 validation failure, 2 input error.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import sys

import numpy as np

from . import __version__
from ._json import dumps
from .complexity import render_table, table_rows
from .oracle import SuiteConfig, run_suite
from .quantopt import TOLERANCES, descartes_certificate, kkt_residuals, optimize_k_ue
from .region import (CSV_VERSION, boundary_sweep, check_weights, format_float,
                     max_weighted_sum, qf_jd_constraints, weights_from_mu1, write_region_csv)
from .scenario import (ScenarioError, link_gains, load_scenario, reference_three_ue, reference_two_ue,
                       sample_zf_noise_gains, scenario_to_dict, set_snr, snr_of)
from .wztd import allocate_phases

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2

PRESETS = {
    "near": lambda: reference_two_ue("near"),
    "far": lambda: reference_two_ue("far"),
    "three": reference_three_ue,
}


class InputError(Exception):
    pass


# -- argument parsing ------------------------------------------------------


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of numbers, got {text!r}")


def _ints(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of integers, got {text!r}")


def _positive(text: str) -> int:
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if n < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return n


def _tol_pair(text: str) -> tuple[str, float]:
    key, sep, val = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected KEY=VALUE, got {text!r}")
    try:
        return key.strip(), float(val)
    except ValueError:
        raise argparse.ArgumentTypeError(f"tolerance {key!r} needs a number")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="scenario JSON file")
    common.add_argument("--preset", choices=sorted(PRESETS), default="near",
                        help="built-in scenario when --config is absent (default: near)")
    common.add_argument("--out", metavar="PATH", help="output file (default: stdout)")
    common.add_argument("--format", choices=("csv", "json"), default=None)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tol", type=_tol_pair, action="append", default=[], metavar="KEY=VAL",
                        help="override a numerical tolerance (repeatable)")

    p = argparse.ArgumentParser(prog="qfrelay", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("region", parents=[common], help="rate-region boundary over a weight sweep")
    r.add_argument("--mu", type=_floats, help="single weight vector instead of a sweep")
    r.add_argument("--steps", type=_positive, default=21, help="mu_1 grid points on [0, 1]")
    r.add_argument("--split", type=_floats, help="shares of 1 - mu_1 among UEs 2..K")

    o = sub.add_parser("optimize", parents=[common], help="optimal quantization and phases")
    o.add_argument("--mu", type=_floats, help="weights (default: equal)")

    s = sub.add_parser("sweep", parents=[common], help="optimum along one scenario parameter")
    s.add_argument("--param", required=True,
                   help="snr_db, P_r, alpha, d_dr, M, N, d_d<k>, d_r<k>, P<k> or mu1")
    s.add_argument("--range", type=_floats, required=True, metavar="LO,HI")
    s.add_argument("--steps", type=_positive, default=20)
    s.add_argument("--mu", type=_floats, help="fixed weights (default: equal)")
    s.add_argument("--split", type=_floats, help="shares of 1 - mu_1 for --param mu1")

    v = sub.add_parser("validate", parents=[common], help="run the validation suite")
    v.add_argument("--mu", type=_floats, help="mu_1 values of the weight sweep")
    v.add_argument("--split", type=_floats, help="shares of 1 - mu_1 among UEs 2..K")
    v.add_argument("--grid", type=_positive, help="grid points per axis")
    v.add_argument("--trials", type=_positive, default=10_000)
    v.add_argument("--steps", type=_positive, default=20, help="points of the distance sweep")

    c = sub.add_parser("complexity", parents=[common], help="codebook and decoding counts")
    c.add_argument("--n", type=float, default=100.0, help="codeword length")
    c.add_argument("--K", type=_ints, default=[3, 5, 10], help="UE counts")
    c.add_argument("--rates", type=_floats, default=[1.5, 1.0, 0.5], metavar="R,R_Q,R_B")

    m = sub.add_parser("montecarlo", parents=[common], help="sampled ZF noise gains")
    m.add_argument("--trials", type=_positive, default=10_000)
    m.add_argument("--side", choices=("SCBS", "MCBS"), default="SCBS")
    m.add_argument("--workers", type=_positive, default=1)
    return p


# -- helpers ---------------------------------------------------------------


def _scenario(args):
    if args.config:
        return load_scenario(args.config)
    return PRESETS[args.preset]()


def _tolerances(args):
    try:
        return TOLERANCES.override(**dict(args.tol))
    except ValueError as exc:
        raise InputError(str(exc)) from None


def _weights(mu, K):
    if mu is None:
        return np.full(K, 1.0 / K)
    try:
        return check_weights(mu, K)
    except ValueError as exc:
        raise InputError(str(exc)) from None


def _split(split, K):
    if split is not None and (len(split) != K - 1 or abs(sum(split) - 1.0) > 1e-12):
        raise InputError(f"--split needs {K - 1} entries summing to 1")
    return split


def _emit(args, text: str) -> None:
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _allocation_dict(g, mu, alloc, tol) -> dict:
    phases = allocate_phases(alloc, g)
    point = max_weighted_sum(qf_jd_constraints(g, alloc.Q), mu)
    kkt = kkt_residuals(g, mu, alloc)
    cert = descartes_certificate(g, mu, alloc.upsilon)
    return {
        "mu": mu.tolist(),
        "log_lambda_s": g.log_lambda_s,
        "allocation": {
            "log_lambda": alloc.log_lambda.tolist(),
            "Q": alloc.Q.tolist(),
            "upsilon": alloc.upsilon,
            "x_s": alloc.x_s,
            "water_level": alloc.water_level,
            "order": alloc.order.tolist(),
            "method": alloc.method,
        },
        "wztd": phases.to_dict(),
        "rates": {"R": point.R.tolist(), "value": point.value},
        "kkt": {
            "eta_s": kkt.eta_s,
            "eta": kkt.eta.tolist(),
            "max_residual": kkt.max_residual,
            "ok": kkt.ok(tol.kkt),
        },
        "descartes": {"sign_changes": cert.sign_changes, "holds": cert.holds},
    }


# -- commands --------------------------------------------------------------


def cmd_region(args) -> int:
    s = _scenario(args)
    g = link_gains(s)
    if args.mu is not None:
        grid = [_weights(args.mu, s.K)]
    else:
        split = _split(args.split, s.K)
        grid = [weights_from_mu1(m, s.K, split) for m in np.linspace(0.0, 1.0, args.steps)]
    tol = _tolerances(args)
    points = boundary_sweep(s, grid, solver=lambda sc, mu: optimize_k_ue(sc, mu, tol))
    if args.format == "json":
        _emit(args, dumps({
            "schema": CSV_VERSION,
            "direct": g.direct.tolist(),
            "points": [{"mu": p.mu.tolist(), "Q": p.Q.tolist(), "R": p.point.R.tolist(),
                        "value": p.point.value} for p in points],
        }))
    else:
        buf = io.StringIO()
        write_region_csv(points, g.direct, buf)
        _emit(args, buf.getvalue())
    return EXIT_OK


def cmd_optimize(args) -> int:
    s = _scenario(args)
    g = link_gains(s)
    mu = _weights(args.mu, s.K)
    tol = _tolerances(args)
    alloc = optimize_k_ue(g, mu, tol)
    out = _allocation_dict(g, mu, alloc, tol)
    if args.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        K = s.K
        w.writerow([f"{name}_{k + 1}" for name in ("mu", "Q", "beta", "rho", "R") for k in range(K)]
                   + ["value", "upsilon", "kkt_max_residual"])
        row = np.concatenate([mu, alloc.Q, out["wztd"]["beta"], out["wztd"]["rho"], out["rates"]["R"]])
        w.writerow([format_float(x) for x in row]
                   + [format_float(out["rates"]["value"]), alloc.upsilon,
                      format_float(out["kkt"]["max_residual"])])
        _emit(args, buf.getvalue())
    else:
        out["scenario"] = scenario_to_dict(s)
        _emit(args, dumps(out))
    return EXIT_OK


_SCALARS = {"P_r", "alpha", "d_dr", "M", "N"}
_VECTORS = {"d_d", "d_r", "P"}


def _apply_param(s, name: str, value: float):
    if name == "snr_db":
        return set_snr(s, value)
    if name in _SCALARS:
        v = int(round(value)) if name in ("M", "N") else value
        return dataclasses.replace(s, **{name: v})
    for field in sorted(_VECTORS, key=len, reverse=True):
        if name.startswith(field) and name[len(field):].isdigit():
            k = int(name[len(field):]) - 1
            vals = list(getattr(s, field))
            if not 0 <= k < len(vals):
                raise InputError(f"{name}: UE index out of range 1..{len(vals)}")
            vals[k] = value
            return dataclasses.replace(s, **{field: tuple(vals)})
    raise InputError(f"unknown sweep parameter {name!r}")


def cmd_sweep(args) -> int:
    base = _scenario(args)
    tol = _tolerances(args)
    if len(args.range) != 2:
        raise InputError("--range takes LO,HI")
    values = np.linspace(args.range[0], args.range[1], args.steps)
    rows = []
    for x in values:
        if args.param == "mu1":
            if not 0.0 <= x <= 1.0:
                raise InputError("mu1 must lie in [0, 1]")
            s = base
            mu = weights_from_mu1(float(x), s.K, _split(args.split, s.K))
        else:
            try:
                s = _apply_param(base, args.param, float(x))
            except ScenarioError as exc:
                raise InputError(f"{args.param}={x!r}: {exc}") from None
            mu = _weights(args.mu, s.K)
        g = link_gains(s)
        alloc = optimize_k_ue(g, mu, tol)
        d = _allocation_dict(g, mu, alloc, tol)
        rows.append((float(x), snr_of(s), mu, alloc, d))
    K = base.K
    if args.format == "json":
        _emit(args, dumps({
            "schema": CSV_VERSION, "param": args.param,
            "points": [dict(d, **{args.param: x, "snr_db": snr}) for x, snr, _, _, d in rows],
        }))
        return EXIT_OK
    buf = io.StringIO()
    buf.write(f"# {CSV_VERSION}\n")
    w = csv.writer(buf, lineterminator="\n")
    extra = [] if args.param == "snr_db" else ["snr_db"]
    w.writerow([args.param] + extra
               + [f"{name}_{k + 1}" for name in ("mu", "Q", "beta", "R") for k in range(K)]
               + ["value", "upsilon"])
    for x, snr, mu, alloc, d in rows:
        vals = np.concatenate([[x], [snr] if extra else [], mu, alloc.Q, d["wztd"]["beta"], d["rates"]["R"],
                               [d["rates"]["value"]]])
        w.writerow([format_float(v) for v in vals] + [alloc.upsilon])
    _emit(args, buf.getvalue())
    return EXIT_OK


def cmd_validate(args) -> int:
    s = _scenario(args)
    kw = dict(trials=args.trials, seed=args.seed, tol=_tolerances(args), sweep_points=args.steps,
              split=_split(args.split, s.K))
    if args.mu is not None:
        if not args.mu or any(not 0.0 <= m <= 1.0 for m in args.mu):
            raise InputError("--mu takes mu_1 values in [0, 1]")
        kw["mu1"] = tuple(args.mu)
    if args.grid is not None:
        kw["grid_points"] = kw["grid_points_3ue"] = args.grid
    report = run_suite(s, SuiteConfig(**kw))
    _emit(args, report.to_json())
    sys.stderr.write(report.summary() + "\n")
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_complexity(args) -> int:
    if len(args.rates) != 3:
        raise InputError("--rates takes R,R_Q,R_B")
    R, R_q, R_b = args.rates
    try:
        rows = table_rows(n=args.n, Ks=args.K, R=R, R_q=R_q, R_b=R_b)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    if args.format == "json":
        _emit(args, dumps({"rows": rows}))
    else:
        _emit(args, render_table(rows, "csv" if args.format == "csv" else "md"))
    return EXIT_OK


def cmd_montecarlo(args) -> int:
    s = _scenario(args)
    res = sample_zf_noise_gains(s, args.side, args.trials, args.seed, args.workers)
    d = res.to_dict()
    if args.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        cols = ["mean", "stderr", "exact", "approx", "z", "approx_ratio"]
        w.writerow(["ue", "side", "trials", "seed"] + cols)
        for k in range(s.K):
            w.writerow([k + 1, res.side, res.trials, res.seed] + [format_float(d[c][k]) for c in cols])
        _emit(args, buf.getvalue())
    else:
        _emit(args, dumps(d))
    return EXIT_OK


COMMANDS = {
    "region": cmd_region,
    "optimize": cmd_optimize,
    "sweep": cmd_sweep,
    "validate": cmd_validate,
    "complexity": cmd_complexity,
    "montecarlo": cmd_montecarlo,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except (InputError, ScenarioError, OSError, json.JSONDecodeError) as exc:
        sys.stderr.write(f"qfrelay {args.command}: error: {exc}\n")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
