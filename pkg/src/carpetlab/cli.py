"""Command line front end: ``carpetlab {carpet,check,coeffs,gauss}``.

Results go to stdout as comma-separated lines; files go to ``--out``.

Exit codes: 0 ok, 2 configuration error, 3 tolerance or truncation
failure, 4 I/O error.
"""
import argparse
import sys
from fractions import Fraction

import numpy as np

from .carpet import compute_carpet, coefficients_of, cross_check, export_all
from .config import REPRESENTATIONS, RunConfig, load_config, override
from .errors import CarpetError, ConfigError
from .revival import FractionTime, gauss_table

EXIT_OK, EXIT_CONFIG, EXIT_TOL, EXIT_IO = 0, 2, 3, 4


def _common(p, rep_many=False):
    p.add_argument("--config", metavar="PATH", help="run configuration file")
    if rep_many:
        p.add_argument("--rep", action="append", metavar="NAME",
                       help="representation to compare; repeat or give a comma list")
    else:
        p.add_argument("--rep", choices=REPRESENTATIONS, help="representation")
    p.add_argument("--out", metavar="DIR", help="output directory")
    p.add_argument("--nx", type=int)
    p.add_argument("--nt", type=int)
    p.add_argument("--tol", type=float, help="relative cross-check tolerance")


def build_parser():
    parser = argparse.ArgumentParser(prog="carpetlab", description="Quantum carpets of a particle in a box.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("carpet", help="compute a carpet and export it")
    _common(p)
    p.add_argument("--format", action="append", dest="formats", metavar="FMT",
                   help="pgm, csv, json or png (repeatable; default from config)")

    p = sub.add_parser("check", help="cross-check representations on one grid")
    _common(p, rep_many=True)

    p = sub.add_parser("coeffs", help="dump the expansion coefficients")
    p.add_argument("--config", metavar="PATH")
    p.add_argument("--m-max", type=int, dest="m_max")

    p = sub.add_parser("gauss", help="dump the Gauss-sum weights of a fraction")
    p.add_argument("fraction", help="p/r, e.g. 1/4")
    return parser


def _run_config(args):
    rc = load_config(args.config) if args.config else RunConfig()
    flags = {k: getattr(args, k, None) for k in ("nx", "nt", "tol")}
    flags["out_dir"] = getattr(args, "out", None)
    if isinstance(getattr(args, "rep", None), str):
        flags["representation"] = args.rep
    if getattr(args, "formats", None):
        flags["formats"] = tuple(args.formats)
    if getattr(args, "m_max", None) is not None:
        flags["m_max"] = args.m_max
    return override(rc, **flags)


def cmd_carpet(args, out):
    rc = _run_config(args)
    grid = compute_carpet(rc)
    paths = export_all(grid, rc)
    norms = grid.row_norms()
    out.write("key,value\n")
    for k, v in [
        ("representation", grid.representation),
        ("nx", grid.nx),
        ("nt", grid.nt),
        ("m_max", grid.provenance["m_max"]),
        ("truncation_residual", f"{grid.provenance['residual']:.3e}"),
        ("w_max", f"{grid.values.max():.10g}"),
        ("w_min", f"{grid.values.min():.3e}"),
        ("row_norm_max_dev", f"{np.max(np.abs(norms - 1)):.3e}"),
    ]:
        out.write(f"{k},{v}\n")
    for p in paths:
        out.write(f"file,{p}\n")
    return EXIT_OK


def cmd_check(args, out):
    rc = _run_config(args)
    reps = []
    for r in args.rep or ["direct", "worldline"]:
        reps += [x.strip() for x in r.split(",") if x.strip()]
    bad = [r for r in reps if r not in REPRESENTATIONS]
    if bad:
        raise ConfigError(f"unknown representations {bad}")
    report = cross_check(rc, reps)
    out.write("\n".join(report.rows()) + "\n")
    return EXIT_OK if report.passed else EXIT_TOL


def cmd_coeffs(args, out):
    rc = _run_config(args)
    s = coefficients_of(rc)
    out.write(f"# m_max={s.m_max} residual={s.residual:.6e}\n")
    out.write("m,re,im,abs2\n")
    for m, c in zip(s.modes, s.coeffs):
        out.write(f"{m},{c.real:.17g},{c.imag:.17g},{abs(c) ** 2:.17g}\n")
    return EXIT_OK


def cmd_gauss(args, out):
    try:
        fr = Fraction(args.fraction)
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"bad fraction {args.fraction!r}") from None
    if fr < 0:
        raise ConfigError("fraction must be non-negative")
    ft = FractionTime(fr.numerator, fr.denominator)
    l, w = gauss_table(ft)
    out.write(f"# p/r={ft.numerator}/{ft.denominator}\n")
    out.write("l,re,im,abs\n")
    for li, wi in zip(l, w):
        out.write(f"{li},{wi.real:.17g},{wi.imag:.17g},{abs(wi):.17g}\n")
    return EXIT_OK


COMMANDS = {"carpet": cmd_carpet, "check": cmd_check, "coeffs": cmd_coeffs, "gauss": cmd_gauss}


def main(argv=None, out=None):
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args, out)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CarpetError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_TOL
    except ValueError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
