"""Command-line entry point.

Exit codes: 0 all checks passed, 1 a check failed, 2 usage, parse or
validation error.
"""

from __future__ import annotations

import argparse
import json
import sys

from .conformal import ConformalFactor
from .errors import FinslerError
from .jets import FD_SCHEMES, DiffConfig
from .metrics import metric_from_dict
from .report import COMMANDS, DEFAULT_TOLERANCES, RunConfig

EXIT_OK, EXIT_CHECK_FAILED, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _load_json(path: str, what: str):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read {what} file {path!r}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"{what} file {path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc


def _parse_box(text: str, dim: int):
    try:
        box = [tuple(float(v) for v in part.split(":")) for part in text.split(",")]
    except ValueError as exc:
        raise UsageError(f"--box: expected 'lo:hi,lo:hi,...', got {text!r}") from exc
    if len(box) != dim or any(len(b) != 2 or b[0] >= b[1] for b in box):
        raise UsageError(f"--box needs {dim} intervals lo:hi with lo < hi")
    return box


def _parse_tolerances(extra: list[str]) -> dict:
    tol = dict(DEFAULT_TOLERANCES)
    it = iter(extra)
    for flag in it:
        if not flag.startswith("--tol-"):
            raise UsageError(f"unrecognized argument {flag!r}")
        key, _, inline = flag[len("--tol-"):].partition("=")
        key = key.replace("-", "_")
        if key not in tol:
            raise UsageError(f"unknown tolerance {key!r}; known: {', '.join(sorted(tol))}")
        value = inline if inline else next(it, None)
        try:
            tol[key] = float(value)
        except (TypeError, ValueError) as exc:
            raise UsageError(f"--tol-{key} needs a number, got {value!r}") from exc
        if not tol[key] >= 0:
            raise UsageError(f"--tol-{key} must be nonnegative")
    return tol


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="finslercurv",
        description="Curvature of Finsler metrics: tensors, Einstein and conformal checks, warped products.",
        epilog="Tolerances: --tol-KEY VALUE with KEY in " + ", ".join(sorted(DEFAULT_TOLERANCES)) + ".")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in (("tensors", "all curvature tensors at sample points"),
                           ("check-einstein", "R-Einstein test with the Schur statistic"),
                           ("conformal", "conformal residual, two-path check and classification"),
                           ("warp", "warped-product identities and cylinder cases")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--metric", required=True, metavar="FILE", help="metric JSON file")
        p.add_argument("--conformal", metavar="FILE", help="conformal factor JSON file")
        p.add_argument("--points", type=int, default=5, metavar="N", help="number of sampled points")
        p.add_argument("--points-file", metavar="FILE", help="JSON list of {\"x\": [...], \"y\": [...]}")
        p.add_argument("--seed", type=int, default=0, metavar="S")
        p.add_argument("--box", metavar="LO:HI,...", help="sampling box (default: family box)")
        p.add_argument("--jet-order", type=int, default=4, metavar="K")
        p.add_argument("--fd-step", type=float, default=1e-4, metavar="H")
        p.add_argument("--fd-scheme", choices=FD_SCHEMES, default="central_4_richardson")
        p.add_argument("--jobs", type=int, default=1, help="worker processes for the point batch")
        p.add_argument("--out", metavar="FILE", help="output file (default: stdout)")
        p.add_argument("--format", choices=("json", "csv"), default="json")
        if name == "conformal":
            p.add_argument("--sweep", action="store_true", help="try the built-in factor families")
        if name == "warp":
            p.add_argument("--case", choices=("linear", "cosh", "cos"),
                           help="cylinder conformal-factor family to verify")
            p.add_argument("--case-params", default="", metavar="A,B",
                           help="family parameters: linear alpha,beta; cosh gamma; cos mu,theta")
    return parser


def config_from_args(args, extra) -> RunConfig:
    tolerances = _parse_tolerances(extra)
    try:
        spec = metric_from_dict(_load_json(args.metric, "metric"))
        u = None
        if args.conformal:
            u = ConformalFactor.from_dict(_load_json(args.conformal, "conformal"), spec.dim)
        diff = DiffConfig(args.jet_order, args.fd_step, args.fd_scheme)
    except (FinslerError, ValueError) as exc:
        raise UsageError(str(exc)) from exc
    if args.points < 1:
        raise UsageError("--points must be >= 1")
    if args.jobs < 1:
        raise UsageError("--jobs must be >= 1")
    explicit = None
    if args.points_file:
        explicit = _load_json(args.points_file, "points")
        if not isinstance(explicit, list) or not all(isinstance(p, dict) and "x" in p and "y" in p
                                                     for p in explicit):
            raise UsageError("points file must be a list of objects with 'x' and 'y'")
    case_params: tuple = ()
    if getattr(args, "case_params", ""):
        try:
            case_params = tuple(float(v) for v in args.case_params.split(","))
        except ValueError as exc:
            raise UsageError(f"--case-params: {exc}") from exc
    if getattr(args, "case", None) and not case_params:
        case_params = {"linear": (1.0, 2.0), "cosh": (0.0,), "cos": (1.0, 0.0)}[args.case]
    return RunConfig(
        metric=spec, conformal=u, count=args.points, seed=args.seed,
        box=_parse_box(args.box, spec.dim) if args.box else None,
        explicit_points=explicit, diff=diff, tolerances=tolerances, jobs=args.jobs,
        case=getattr(args, "case", None), case_params=case_params,
        sweep=getattr(args, "sweep", False))


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args, extra = parser.parse_known_args(argv)
    except SystemExit as exc:  # argparse already printed the message
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        config = config_from_args(args, extra)
        report = COMMANDS[args.command](config)
    except UsageError as exc:
        print(f"finslercurv: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FinslerError as exc:
        print(f"finslercurv: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    text = report.to_json() if args.format == "json" else report.to_csv()
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    for c in report.checks:
        if not c["passed"]:
            print(f"check failed: {c['name']} = {c['value']:.3g} (tolerance {c['tolerance']:.3g})",
                  file=sys.stderr)
    return EXIT_OK if report.passed else EXIT_CHECK_FAILED


if __name__ == "__main__":
    sys.exit(main())
