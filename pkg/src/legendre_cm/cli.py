"""Command line entry point: ``scan``, ``verify-claims``, ``example`` and ``fiber``."""
from __future__ import annotations

import argparse
import contextlib
import json
import sys
from dataclasses import fields
from fractions import Fraction

from .errors import BadInput, ConfigError, InvalidDiscriminant
from .lattice import BudgetConstants
from .legendre import load_sections
from .numerics import Precision
from .quadforms import QuadraticForm, cm_fibers, reduced_forms, validate_discriminant
from .scan import ScanConfig, fiber_record, run_example, verify_claims, write_scan

EXIT_OK, EXIT_CONFIG, EXIT_RECORD_ERROR = 0, 2, 3


def _constants(pairs) -> BudgetConstants:
    names = {f.name for f in fields(BudgetConstants)}
    values = {}
    for item in pairs or []:
        key, _, raw = item.partition("=")
        if key not in names or not raw:
            raise ConfigError(f"unknown budget constant {item!r}; expected one of {sorted(names)}")
        try:
            values[key] = float(Fraction(raw))
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"bad value in {item!r}") from exc
    return BudgetConstants(**values)


@contextlib.contextmanager
def _output(path):
    if path in (None, "-"):
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            yield fh


def _cmd_scan(args) -> int:
    cfg = ScanConfig(
        d_max=args.dmax,
        sections=load_sections(args.sections),
        precision_bits=args.precision,
        tol_exp=args.tol_exp,
        budget_constants=_constants(args.constant),
        budget_cap=args.budget_cap,
        jobs=args.jobs,
        out=args.out,
        all_orbit=args.all_orbit,
        timings=args.timings,
    )
    with _output(args.out) as fh:
        errors = write_scan(cfg, fh)
    return EXIT_RECORD_ERROR if errors else EXIT_OK


def _cmd_verify_claims(args) -> int:
    if args.dmax < 100:
        raise ConfigError("verify-claims needs --dmax >= 100")
    table = verify_claims(args.dmax, Precision(args.precision), args.growth_dmax)
    with _output(args.out) as fh:
        fh.write(table.to_csv())
    return EXIT_RECORD_ERROR if table.degree_failures else EXIT_OK


def _cmd_example(args) -> int:
    try:
        lam = Fraction(args.lam)
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"--lambda must be a rational number, got {args.lam!r}") from exc
    report = run_example(lam, args.dmax, args.precision, args.jobs)
    with _output(args.out) as fh:
        json.dump(report, fh, sort_keys=True, indent=1)
        fh.write("\n")
    return EXIT_RECORD_ERROR if report["scan"]["errors"] else EXIT_OK


def _cmd_fiber(args) -> int:
    disc = validate_discriminant(args.disc)
    prec = Precision(args.precision)
    fibers = cm_fibers(disc, prec, all_orbit=args.all_orbit)
    if args.form:
        try:
            a, b, c = (int(v) for v in args.form.split(","))
        except ValueError as exc:
            raise ConfigError("--form expects a,b,c") from exc
        form = QuadraticForm(a, b, c)
        if form not in reduced_forms(disc):
            raise ConfigError(f"{form.as_tuple()} is not a reduced form of discriminant {int(disc)}")
        fibers = [f for f in fibers if f.form == form]
    for f in fibers:
        print(json.dumps(fiber_record(f, prec), sort_keys=True))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="legendre-cm", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("scan", help="search End-relations among specialised sections on CM fibers")
    p.add_argument("--dmax", type=int, required=True)
    p.add_argument("--sections", required=True, help="JSON array of {x_num, x_den, branch}")
    p.add_argument("--precision", type=int, default=256, help="working precision in bits")
    p.add_argument("--tol-exp", type=int, default=None, help="relation tolerance 2^-E (default bits/2)")
    p.add_argument("--budget-cap", type=int, default=10**6)
    p.add_argument("--constant", action="append", metavar="NAME=VALUE", help="override a budget constant")
    p.add_argument("--all-orbit", action="store_true", help="scan all six lambda-conjugates per form")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--timings", action="store_true", help="add wall-clock timings (output no longer reproducible)")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_scan)

    p = sub.add_parser("verify-claims", help="class number and height statistics as CSV")
    p.add_argument("--dmax", type=int, required=True)
    p.add_argument("--precision", type=int, default=256)
    p.add_argument("--growth-dmax", type=int, default=10_000)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_verify_claims)

    p = sub.add_parser("example", help="sections x=2 and x=3: exact torsion check and relation scan")
    p.add_argument("--lambda", dest="lam", default="6")
    p.add_argument("--dmax", type=int, default=100)
    p.add_argument("--precision", type=int, default=256)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_example)

    p = sub.add_parser("fiber", help="print the CM fiber(s) of a discriminant")
    p.add_argument("--disc", type=int, required=True)
    p.add_argument("--form", default=None, help="a,b,c of a reduced form")
    p.add_argument("--precision", type=int, default=256)
    p.add_argument("--all-orbit", action="store_true")
    p.set_defaults(func=_cmd_fiber)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, BadInput, InvalidDiscriminant, ValueError, OSError) as exc:
        print(f"legendre-cm: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
