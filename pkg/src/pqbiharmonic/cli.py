"""Command-line front end: ``pqbiharmonic <command> [flags]``.

Exit status is 0 on success, 1 on numerical failure and 2 on usage errors.
Output goes to standard output unless ``--out`` (or the directory named by
``PQBIHARMONIC_OUTPUT_DIR``) is given.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, gentrig
from .dynamics import ProblemParams, _write_csv, detect_blowup
from .errors import DomainError, IntegrationError, QuadratureError, ShootingError
from .shooting import SHOOT_ATOL, SHOOT_RTOL, nth_eigenfunction, solve_eigenproblem
from .spectral import normalize_spectral, s_number_bounds, spectral_chain
from .verification import SUITES, run_suite

OUTPUT_ENV = "PQBIHARMONIC_OUTPUT_DIR"

# residual limits for ``solve``
BOUNDARY_TOL = 1e-9
RATIO_TOL = 1e-6
SYMMETRY_TOL = 1e-8


def _exponent(text: str) -> float:
    v = float(text)
    if not (math.isfinite(v) and v > 1):
        raise argparse.ArgumentTypeError(f"must satisfy > 1, got {text}")
    return v


def _positive(text: str) -> float:
    v = float(text)
    if not (math.isfinite(v) and v > 0):
        raise argparse.ArgumentTypeError(f"must be > 0, got {text}")
    return v


def _count(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {text}")
    return v


def _finite(text: str) -> float:
    v = float(text)
    if not math.isfinite(v):
        raise argparse.ArgumentTypeError(f"must be finite, got {text}")
    return v


def _lambda_arg(text: str):
    return None if text == "auto" else _positive(text)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="output directory (default: stdout or $%s)" % OUTPUT_ENV)
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--rtol", type=_positive, default=SHOOT_RTOL)
    common.add_argument("--atol", type=_positive, default=SHOOT_ATOL)

    parser = argparse.ArgumentParser(prog="pqbiharmonic", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gtrig", parents=[common], help="table of sin_{r,s} and cos_{r,s}")
    g.add_argument("--r", type=_exponent, required=True, help="r > 1")
    g.add_argument("--s", type=_exponent, required=True, help="s > 1")
    g.add_argument("--points", type=_count, default=101)
    g.add_argument("--start", type=_finite, default=0.0)
    g.add_argument("--stop", type=_finite, default=None, help="default pi_{r,s}")

    s = sub.add_parser("solve", parents=[common], help="first (or n-th) eigenfunction")
    s.add_argument("--p", type=_exponent, required=True)
    s.add_argument("--q", type=_exponent, required=True)
    s.add_argument("--t0", type=_positive, default=1.0)
    s.add_argument("--lambda", dest="lam", type=_lambda_arg, default=None,
                   help="eigenvalue of the first eigenfunction, or 'auto' for ||u''||_p = 1")
    s.add_argument("--n", type=_count, default=1)
    s.add_argument("--points", type=_count, default=1001)

    sp = sub.add_parser("spectrum", parents=[common], help="spectral numbers of the chain")
    sp.add_argument("--p", type=_exponent, required=True)
    sp.add_argument("--q", type=_exponent, required=True)
    sp.add_argument("--t0", type=_positive, default=1.0)
    sp.add_argument("--n", type=_count, default=5)

    sn = sub.add_parser("snumbers", parents=[common], help="s-number values of the embedding")
    sn.add_argument("--p", type=_exponent, required=True)
    sn.add_argument("--q", type=_exponent, required=True)
    sn.add_argument("--t0", type=_positive, default=1.0)
    sn.add_argument("--n", type=_count, default=5)

    v = sub.add_parser("verify", parents=[common], help="run a self-check suite")
    v.add_argument("suite", choices=tuple(SUITES) + ("all",))

    b = sub.add_parser("singularity", parents=[common], help="finite-time blow-up report")
    b.add_argument("--p", type=_exponent, required=True)
    b.add_argument("--q", type=_exponent, required=True)
    b.add_argument("--lambda", dest="lam", type=_positive, default=1.0)
    b.add_argument("--alpha", type=_finite, default=1.0)
    b.add_argument("--beta", type=_finite, default=1.0)
    b.add_argument("--u1", type=_finite, default=0.0)
    b.add_argument("--w1", type=_finite, default=0.0)
    b.add_argument("--horizon", type=_positive, default=50.0)
    b.add_argument("--threshold", type=_positive, default=1e8)
    return parser


# -- output ------------------------------------------------------------------

def _out_dir(args) -> Path | None:
    target = args.out or os.environ.get(OUTPUT_ENV)
    if not target:
        return None
    path = Path(target)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _emit(args, stem: str, header: dict, columns: list[str], rows) -> None:
    """CSV (plus a JSON header file or comment) or one JSON document."""
    header = {"version": __version__, "command": args.command,
              "tolerances": {"rtol": args.rtol, "atol": args.atol}, **header}
    out = _out_dir(args)
    if args.format == "json":
        doc = dict(header)
        doc["columns"] = columns
        doc["rows"] = [list(map(_jsonable, r)) for r in rows]
        text = json.dumps(doc, indent=2)
        if out is None:
            print(text)
        else:
            (out / f"{stem}.json").write_text(text + "\n")
        return
    if out is None:
        sys.stdout.write("# " + json.dumps(header) + "\n")
        sys.stdout.write(_write_csv(None, columns, rows))
    else:
        _write_csv(out / f"{stem}.csv", columns, rows)
        (out / f"{stem}.json").write_text(json.dumps(header, indent=2) + "\n")


def _jsonable(v):
    if isinstance(v, (np.floating, float)):
        return float(v)
    if isinstance(v, np.integer):
        return int(v)
    return v


# -- commands ----------------------------------------------------------------

def cmd_gtrig(args) -> int:
    gp = gentrig.GenTrigParams(args.r, args.s)
    pi = gentrig.pi_rs(gp)
    stop = pi if args.stop is None else args.stop
    ts = np.linspace(args.start, stop, args.points)
    sn, cs = gentrig.sincos_rs(gp, ts)
    rows = [[t, a, b] for t, a, b in zip(ts, sn, cs)]
    _emit(args, "gtrig", {"r": args.r, "s": args.s, "pi_rs": pi}, ["t", "sin", "cos"], rows)
    return 0


def cmd_solve(args) -> int:
    if args.lam is None:
        first = solve_eigenproblem(args.p, args.q, 1.0 if args.n > 1 else args.t0,
                                   normalization="spectral", rtol=args.rtol, atol=args.atol)
    else:
        first = solve_eigenproblem(args.p, args.q, 1.0 if args.n > 1 else args.t0, args.lam,
                                   rtol=args.rtol, atol=args.atol)
    eig = first if args.n == 1 else nth_eigenfunction(first, args.n, args.t0)
    inv = eig.invariants()
    header = dict(eig.header())
    header["residuals"] = inv
    failures = []
    if inv["boundary"] > BOUNDARY_TOL:
        failures.append("boundary")
    if inv["ratio"] > RATIO_TOL:
        failures.append("ratio")
    if inv["zero_count"] != args.n - 1 or inv["zero_location"] > SYMMETRY_TOL:
        failures.append("zeros")
    if inv.get("symmetry", 0.0) > SYMMETRY_TOL:
        failures.append("symmetry")
    header["status"] = "ok" if not failures else "residual check failed: " + ", ".join(failures)
    ts = np.linspace(0.0, eig.t0, args.points)
    st = eig.state(ts)
    d2 = eig.d2u(ts)
    rows = [[t, a, b, c] for t, a, b, c in zip(ts, st[:, 0], st[:, 1], d2)]
    _emit(args, "eigenfunction", header, ["t", "u", "du", "d2u"], rows)
    if failures:
        print(f"pqbiharmonic: {header['status']}", file=sys.stderr)
        return 1
    return 0


def cmd_spectrum(args) -> int:
    couple1 = normalize_spectral(solve_eigenproblem(args.p, args.q, 1.0, normalization="spectral",
                                                    rtol=args.rtol, atol=args.atol))
    rows = []
    for n in range(1, args.n + 1):
        c = spectral_chain(couple1, n, args.t0)
        rows.append([n, n ** (2 * args.q) * couple1.lam, c.lam])
    header = {"p": args.p, "q": args.q, "t0": args.t0, "lambda1": couple1.lam}
    _emit(args, "spectrum", header, ["n", "lambda_n", "sn_n"], rows)
    return 0


def cmd_snumbers(args) -> int:
    reports = s_number_bounds(args.p, args.q, args.t0, args.n)
    header = {"p": args.p, "q": args.q, "t0": args.t0, "note": reports[0].note,
              "equalities": list(reports[0].equalities)}
    rows = [[r.n, r.sn_n, r.value, r.kind] for r in reports]
    _emit(args, "snumbers", header, ["n", "sn_n", "value", "kind"], rows)
    return 0


def cmd_verify(args) -> int:
    names = list(SUITES) if args.suite == "all" else [args.suite]
    checks = [(name, c) for name in names for c in run_suite(name)]
    rows = [[name, c.name, "pass" if c.passed else "fail", c.value, c.tol] for name, c in checks]
    ok = all(c.passed for _, c in checks)
    _emit(args, "verify", {"suite": args.suite, "passed": ok},
          ["suite", "check", "status", "value", "tol"], rows)
    return 0 if ok else 1


def cmd_singularity(args) -> int:
    params = ProblemParams(args.p, args.q, args.lam)
    init = (args.u1, args.alpha, args.w1, args.beta)
    rep = detect_blowup(params, init, args.threshold, args.horizon, rtol=args.rtol, atol=args.atol)
    doc = {"version": __version__, "command": "singularity",
           "tolerances": {"rtol": args.rtol, "atol": args.atol, "threshold": args.threshold,
                          "horizon": args.horizon},
           "p": args.p, "q": args.q, "lambda": args.lam, "initial": list(init), **rep.as_dict()}
    text = json.dumps(doc, indent=2)
    out = _out_dir(args)
    if out is None:
        print(text)
    else:
        (out / "singularity.json").write_text(text + "\n")
    return 0


COMMANDS = {
    "gtrig": cmd_gtrig,
    "solve": cmd_solve,
    "spectrum": cmd_spectrum,
    "snumbers": cmd_snumbers,
    "verify": cmd_verify,
    "singularity": cmd_singularity,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except DomainError as exc:
        print(f"pqbiharmonic: error: {exc}", file=sys.stderr)
        return 2
    except (ShootingError, IntegrationError, QuadratureError) as exc:
        print(f"pqbiharmonic: numerical failure: {exc}", file=sys.stderr)
        return 1
    except BrokenPipeError:
        # reader went away (e.g. ``| head``); silence the flush at exit
        devnull = os.open(os.devnull, os.O_WRONLY)
        os.dup2(devnull, sys.stdout.fileno())
        return 1


if __name__ == "__main__":
    sys.exit(main())
