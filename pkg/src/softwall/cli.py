"""Command-line front end.

Subcommands ``delta``, ``profile``, ``classify``, ``pathology``,
``counterterm`` and ``check``.  Tables are written as CSV (header row,
LF line endings) or JSON; every float is printed with 9 significant
digits.  Exit codes: 0 success, 1 numerical failure, 2 usage error.

``--config FILE`` reads ``key = value`` lines (``#`` starts a comment).
Keys are option names without the leading dashes, e.g.::

    alpha = 1
    z-min = -8
    s-ladder = 0.4,0.2,0.1,0.05
    offset = 1 0.785398163

Flags given on the command line override the file.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import shlex
import sys
from typing import Sequence

import numpy as np

from . import cylkernel as ck
from . import semiclassical as sc
from . import wallmodes as wm
from .checks import run_checks
from .phase import PhaseShiftFn

EXIT_OK = 0
EXIT_NUMERICAL = 1
EXIT_USAGE = 2

_NUMERICAL_ERRORS = (ArithmeticError, wm.NumericalFailure, wm.PhaseModelError)


class UsageError(Exception):
    pass


def fmt(x) -> str:
    """9 significant digits; integers and flags pass through."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if x is None:
        return ""
    return f"{float(x):.9g}"


def _json_num(x):
    if isinstance(x, float) and math.isfinite(x):
        return float(f"{x:.9g}")
    if isinstance(x, float):
        return None
    return x


def render(columns: Sequence[str], rows, fmt_name: str) -> str:
    if fmt_name == "json":
        data = [{c: _json_num(v) for c, v in zip(columns, row)} for row in rows]
        return json.dumps(data, indent=2) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([v if isinstance(v, str) else fmt(v) for v in row])
    return buf.getvalue()


def _emit(text: str, out: str | None):
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _ladder(text: str) -> tuple[float, ...]:
    try:
        vals = tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad s-ladder {text!r}") from exc
    if len(vals) < 2:
        raise argparse.ArgumentTypeError("s-ladder needs at least two values")
    return vals


# -- parser ------------------------------------------------------------------------

def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("common options")
    g.add_argument("--config", metavar="FILE", help="key = value file; flags override it")
    g.add_argument("--out", metavar="PATH", help="write output here instead of stdout")
    g.add_argument("--format", choices=("csv", "json"), default="csv")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--alpha", type=float, default=1.0, help="wall exponent (>= 1)")
    g.add_argument("--dirichlet", type=float, metavar="Z0", help="hard wall at Z0 instead of a soft wall")
    g.add_argument("--offset", type=float, nargs=2, metavar=("A", "B"), help="delta(p) = A p + B")
    g.add_argument("--z-min", type=float, default=-8.0)
    g.add_argument("--z-max", type=float, default=-2.0)
    g.add_argument("--z-steps", type=int, default=13)
    g.add_argument("--p-max", type=float, help="largest p (table range, or where the exact phase joins its asymptote)")
    g.add_argument("--s-ladder", type=_ladder, default=(0.4, 0.2, 0.1, 0.05), metavar="a,b,c")
    g.add_argument("--tol-scale", type=float, default=1.0, help=argparse.SUPPRESS)
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="softwall", description="Soft-wall vacuum kernel toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    d = sub.add_parser("delta", parents=[common], help="phase-shift table")
    d.add_argument("--p-min", type=float, default=0.1)
    d.add_argument("--p-steps", type=int, default=60)

    sub.add_parser("profile", parents=[common], help="diagonal kernel profile")

    c = sub.add_parser("classify", parents=[common], help="crossing-path region map")
    c.add_argument("--rho-min", type=float, default=0.25)
    c.add_argument("--rho-max", type=float, default=5.0)
    c.add_argument("--rho-steps", type=int, default=20)
    c.add_argument("--T-min", type=float, default=0.5)
    c.add_argument("--T-max", type=float, default=8.0)
    c.add_argument("--T-steps", type=int, default=16)

    pa = sub.add_parser("pathology", parents=[common], help="1/s divergence probe for delta = A p + B")
    pa.add_argument("--z-sum", type=float, default=-2.0)

    ct = sub.add_parser("counterterm", parents=[common], help="small-t counterterm terms")
    ct.add_argument("--v", type=float, default=1.0)
    ct.add_argument("--lap-v", type=float, default=0.0)
    ct.add_argument("--t", type=_ladder_or_one, default=(1.0,), metavar="t1,t2,...")
    ct.add_argument("--kinked", action="store_true", help="potential not smooth (log coefficient untrusted)")

    ch = sub.add_parser("check", parents=[common], help="run the invariant suites (JSON report)")
    ch.add_argument("--suites", default=None, help="comma-separated subset")
    return parser


def _ladder_or_one(text: str) -> tuple[float, ...]:
    try:
        vals = tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad list {text!r}") from exc
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _config_tokens(path: str) -> list[str]:
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    tokens: list[str] = []
    for n, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("_", "-")
        if key in ("config", "command"):
            raise UsageError(f"{path}:{n}: key {key!r} not allowed in a config file")
        if value.lower() in ("true", "false"):
            if value.lower() == "true":
                tokens.append(f"--{key}")
            continue
        tokens.append(f"--{key}")
        tokens.extend(shlex.split(value))
    return tokens


def parse_args(argv: Sequence[str] | None = None) -> argparse.Namespace:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    first = parser.parse_args(argv)
    if first.config:
        extra = _config_tokens(first.config)
        # config values go first so that explicit flags win
        return parser.parse_args([argv[0], *extra, *argv[1:]])
    return first


# -- helpers -------------------------------------------------------------------------

def _quad_config(args) -> ck.QuadratureConfig:
    ladder = tuple(args.s_ladder)
    try:
        return ck.QuadratureConfig(s_ladder=ladder, extrapolation_order=min(3, len(ladder) - 1),
                                   abs_tol=1e-9 * args.tol_scale, rel_tol=1e-3 * args.tol_scale)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _phase_model(args) -> PhaseShiftFn:
    if args.dirichlet is not None and args.offset is not None:
        raise UsageError("--dirichlet and --offset are mutually exclusive")
    if args.dirichlet is not None:
        return PhaseShiftFn.dirichlet(args.dirichlet)
    if args.offset is not None:
        return PhaseShiftFn.linear_offset(*args.offset)
    try:
        model = wm.WallModel(args.alpha)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    return wm.make_phase_model(model, p_max=args.p_max)


def _z_grid(args) -> np.ndarray:
    if not (args.z_min < args.z_max and args.z_steps >= 2):
        raise UsageError("z-range needs z-min < z-max and z-steps >= 2")
    if not args.z_max < 0:
        raise UsageError("z-range must lie in z < 0")
    return np.linspace(args.z_min, args.z_max, args.z_steps)


# -- commands ------------------------------------------------------------------------

def cmd_delta(args) -> int:
    try:
        model = wm.WallModel(args.alpha)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    p_max = 6.0 if args.p_max is None else args.p_max
    if not (0 < args.p_min < p_max and args.p_steps >= 2):
        raise UsageError("p-range needs 0 < p-min < p-max and p-steps >= 2")
    p = np.linspace(args.p_min, p_max, args.p_steps)
    exact, _ = wm.phase_shift_grid(model, p)
    small = wm.delta_small_p(model, p)
    large = wm.delta_large_p(model, p)
    rows = list(zip(p, exact, small, large))
    _emit(render(("p", "delta_exact", "delta_small", "delta_large"), rows, args.format), args.out)
    return EXIT_OK


def cmd_profile(args) -> int:
    z = _z_grid(args)
    cfg = _quad_config(args)
    delta = _phase_model(args)
    prof = ck.compute_profile(delta, z, cfg)
    rows = list(zip(prof.z_grid, prof.tbar, prof.err, prof.hardwall_ref))
    _emit(render(("z", "tbar_ren", "err", "hardwall_at_c"), rows, args.format), args.out)
    if prof.failures:
        bad = ", ".join(fmt(prof.z_grid[i]) for i in prof.failures)
        _error_record("ConvergenceError", f"no convergence at z = {bad}; err column holds -1 there")
        return EXIT_NUMERICAL
    return EXIT_OK


def cmd_classify(args) -> int:
    if not (0 < args.rho_min <= args.rho_max and args.rho_steps >= 1):
        raise UsageError("rho-range needs 0 < rho-min <= rho-max and rho-steps >= 1")
    if not (0 < args.T_min <= args.T_max and args.T_steps >= 1):
        raise UsageError("T-range needs 0 < T-min <= T-max and T-steps >= 1")
    rhos = np.linspace(args.rho_min, args.rho_max, args.rho_steps)
    Ts = np.linspace(args.T_min, args.T_max, args.T_steps)
    rows = [(t.rho, t.T, t.count.value, t.t_star) for t in sc.classify_grid(rhos, Ts)]
    _emit(render(("rho", "T", "count", "t_star_or_blank"), rows, args.format), args.out)
    return EXIT_OK


def cmd_pathology(args) -> int:
    if args.dirichlet is not None:
        A, B = args.dirichlet, 0.0
    elif args.offset is not None:
        A, B = args.offset
    else:
        A, B = 1.0, math.pi / 4
    if not args.z_sum < 0:
        raise UsageError("--z-sum must be negative")
    cfg = _quad_config(args)
    rep = ck.pathology_probe(B, args.z_sum, args.s_ladder, A=A, cfg=cfg)
    if args.format == "json":
        data = {k: (_json_num(v) if not isinstance(v, list) else [_json_num(x) for x in v])
                for k, v in vars(rep).items()}
        _emit(json.dumps(data, indent=2, sort_keys=True) + "\n", args.out)
    else:
        rows = list(zip(rep.s_ladder, rep.values, rep.s_times_value))
        _emit(render(("s", "tbar", "s_times_tbar"), rows, "csv"), args.out)
    sys.stderr.write(f"classification: {rep.classification}; limit of s*tbar = {fmt(rep.limit)}\n")
    return EXIT_OK


def cmd_counterterm(args) -> int:
    if any(not t > 0 for t in args.t):
        raise UsageError("t must be positive")
    rows = []
    for t in args.t:
        terms = ck.counterterm_density(args.v, args.lap_v, t, smooth=not args.kinked)
        rows.append((t, args.v, args.lap_v, *terms))
    cols = ("t", "v", "lap_v", "t4_term", "t2_term", "log_term", "log_coefficient", "trusted")
    _emit(render(cols, rows, args.format), args.out)
    return EXIT_OK


def cmd_check(args) -> int:
    suites = None
    if args.suites:
        suites = [s.strip() for s in args.suites.split(",") if s.strip()]
        unknown = sorted(set(suites) - {"specfun", "wallmodes", "cylkernel", "semiclassical"})
        if unknown:
            raise UsageError(f"unknown suites: {', '.join(unknown)}")
    report = run_checks(seed=args.seed, tol_scale=args.tol_scale, suites=suites)
    _emit(json.dumps(report, indent=2) + "\n", args.out)
    return EXIT_OK if report["failed"] == 0 else EXIT_NUMERICAL


COMMANDS = {
    "delta": cmd_delta,
    "profile": cmd_profile,
    "classify": cmd_classify,
    "pathology": cmd_pathology,
    "counterterm": cmd_counterterm,
    "check": cmd_check,
}


def _error_record(kind: str, message: str):
    sys.stderr.write(json.dumps({"error": kind, "message": message}) + "\n")


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = parse_args(argv)
    except UsageError as exc:
        _error_record("UsageError", str(exc))
        return EXIT_USAGE
    except SystemExit as exc:  # argparse already printed its message
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        with np.errstate(all="ignore"):
            return COMMANDS[args.command](args)
    except UsageError as exc:
        _error_record("UsageError", str(exc))
        return EXIT_USAGE
    except _NUMERICAL_ERRORS as exc:
        _error_record(type(exc).__name__, str(exc))
        return EXIT_NUMERICAL
    except OSError as exc:
        _error_record("OSError", str(exc))
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
