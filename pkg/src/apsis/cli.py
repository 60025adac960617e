"""Command-line interface: ``apsis <subcommand> ...``.

Exit codes: 0 success, 1 usage or invalid input, 2 verification or verdict
failure, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from fractions import Fraction

import numpy as np

from . import __version__, series
from .apsidal import (
    METHODS,
    QuadratureSpec,
    apsidal_angle,
    apsidal_angle_fixed,
    limit_angles,
    scan,
)
from .central_force import OrbitConfig, PotentialSpec
from .errors import ApsisError, DomainError, NumericError
from .orbit import empirical_apsidal_angle, integrate_orbit, write_csv
from .verified import (
    FIRST_THRESHOLD,
    default_workers,
    verify_first_grid,
    verify_second_grid,
    verify_tail_region,
    write_certificate,
)

EXIT_OK, EXIT_USAGE, EXIT_FAIL, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def fmt(x: float) -> str:
    return "%.17g" % x


def _csv_writer(fh):
    return csv.writer(fh, lineterminator="\n")


def _float_range(text: str) -> np.ndarray:
    """'a:b:step' inclusive of both ends."""
    try:
        a, b, step = (float(v) for v in text.split(":"))
    except ValueError:
        raise UsageError(f"bad range {text!r}, expected a:b:step") from None
    if step <= 0 or b < a:
        raise UsageError(f"bad range {text!r}")
    n = int(round((b - a) / step))
    return np.array([a + k * step for k in range(n + 1)])


def _int_range(text: str) -> list[int]:
    """'m..n' inclusive, or a single integer."""
    try:
        if ".." in text:
            a, b = text.split("..")
            return list(range(int(a), int(b) + 1))
        return [int(text)]
    except ValueError:
        raise UsageError(f"bad integer range {text!r}") from None


def _add_potential(p, required=True):
    g = p.add_mutually_exclusive_group(required=required)
    g.add_argument("--alpha", type=float, help="homogeneous exponent in [-2, 1] (0 selects log)")
    g.add_argument("--log", action="store_true", help="logarithmic potential")


def _spec(args) -> PotentialSpec:
    if args.log:
        return PotentialSpec.logarithmic()
    return PotentialSpec.from_alpha(args.alpha)


def _workers(args) -> int:
    env = os.environ.get("APSIS_WORKERS")
    if env:
        return max(1, int(env))
    return args.workers if args.workers else default_workers()


# -- subcommands ----------------------------------------------------------------------


def cmd_angle(args) -> int:
    spec = _spec(args)
    if args.q is not None:
        if args.energy is not None:
            raise UsageError("--energy is not used with --q")
        res = apsidal_angle_fixed(spec, args.q, QuadratureSpec("fixed_endpoint", args.tol))
        out = {"results": [res.as_dict()]}
    else:
        if args.energy is None:
            raise UsageError("--ell needs --energy")
        orbit = OrbitConfig(args.energy, args.ell)
        methods = METHODS if args.method == "all" else (args.method,)
        out = {"results": [apsidal_angle(spec, orbit, m, QuadratureSpec(m, args.tol)).as_dict() for m in methods]}
        if args.with_oracle:
            tr = integrate_orbit(spec, orbit, periods=3.5)
            out["oracle"] = {"angle": empirical_apsidal_angle(tr), "events": len(tr.events)}
    out["potential"] = spec.label()
    json.dump(out, sys.stdout, indent=2)
    sys.stdout.write("\n")
    return EXIT_OK


def cmd_scan(args) -> int:
    spec = _spec(args)
    workers = _workers(args) if (args.workers or os.environ.get("APSIS_WORKERS")) else 1
    res = scan(spec, args.energy, args.points, workers=workers)
    fh = open(args.output, "w", newline="") if args.output else sys.stdout
    try:
        w = _csv_writer(fh)
        w.writerow(["ell", "q", "angle", "d_angle_dq"])
        for r in res.rows:
            w.writerow([fmt(r.ell), fmt(r.q), fmt(r.angle), fmt(r.d_angle_dq)])
    finally:
        if fh is not sys.stdout:
            fh.close()
    for r in res.failed_rows:
        print(f"row ell={fmt(r.ell)} failed: {r.error}", file=sys.stderr)
    print("verdict: " + ("increasing" if res.increasing else "not-increasing"), file=sys.stderr)
    return EXIT_OK if res.increasing else EXIT_FAIL


def tail_inequality_sweep(p_max: int, n_s: int = 200) -> dict:
    s = np.linspace(0.0, 1.0, n_s)
    worst = math.inf
    worst_at = None
    for p in range(11, p_max + 1):
        m = series.tail_margin(p, s)
        k = int(np.argmin(m))
        if m[k] < worst:
            worst, worst_at = float(m[k]), (p, float(s[k]))
    return {"p_range": [11, p_max], "s_points": n_s, "min_margin": worst, "argmin": worst_at, "pass": worst > 0}


def s_sum_checks(p_max: int = 40) -> dict:
    vals = [series.s_sum(p) for p in range(5, p_max + 1)]
    decreasing = all(a > b for a, b in zip(vals, vals[1:]))
    s11 = series.s_sum(11)
    return {
        "S(11)": str(s11),
        "S(11)_is_-29/1260": s11 == Fraction(-29, 1260),
        "strictly_decreasing_5_to": p_max,
        "decreasing": decreasing,
        "pass": bool(decreasing and s11 == Fraction(-29, 1260)),
    }


def cmd_verify(args) -> int:
    reports = {"tail_region": verify_tail_region()}
    reports["first_grid"] = verify_first_grid(threshold=args.first_threshold)
    if not args.skip_second:
        workers = _workers(args)

        def progress(i, n):
            if args.verbose:
                print(f"second grid: chunk {i}/{n}", file=sys.stderr)

        reports["second_grid"] = verify_second_grid(
            args.second_ds, args.second_dq, threshold=args.second_threshold, workers=workers, progress=progress
        )
    extra = {
        "tail_inequality": tail_inequality_sweep(args.tail_p_max),
        "s_sum": s_sum_checks(),
    }
    ok = all(r.passed for r in reports.values()) and all(e["pass"] for e in extra.values())
    write_certificate(args.certificate, reports, {**extra, "pass": bool(ok)})
    for name, rep in reports.items():
        status = "PASS" if rep.passed else "FAIL"
        print(f"{status} {name}: min_lo={fmt(rep.min_lo)} threshold={rep.threshold} cells={rep.cells}")
    for name in ("tail_inequality", "s_sum"):
        print(f"{'PASS' if extra[name]['pass'] else 'FAIL'} {name}")
    print(f"certificate: {args.certificate}")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_limits(args) -> int:
    alphas = [float(a) for a in args.alpha.split(",")] if args.alpha else [0.0]
    w = _csv_writer(sys.stdout)
    w.writerow(["alpha", "radial_limit", "circular_limit"])
    for a in alphas:
        rad, circ = limit_angles(a)
        w.writerow([fmt(a), fmt(rad), fmt(circ)])
    return EXIT_OK


def cmd_coeffs(args) -> int:
    w = _csv_writer(sys.stdout)
    kind = args.kind
    if kind == "coef":
        if args.alpha is None:
            raise UsageError("coeffs --kind coef needs --alpha")
        ps = _int_range(args.p)
        if any(p not in (1, 2, 3, 4) for p in ps):
            raise UsageError("--p must lie in 1..4")
        w.writerow(["s"] + [f"Coef_{p}" for p in ps])
        for s in _float_range(args.s_grid):
            w.writerow([fmt(s)] + [fmt(series.coef_poly(args.alpha, s, p, corrected=args.corrected)) for p in ps])
    elif kind == "r":
        qs = _float_range(args.q_grid)
        w.writerow(["s", "q", "R"])
        for s in _float_range(args.s_grid):
            for q in qs:
                w.writerow([fmt(s), fmt(q), fmt(series.r_poly(s, q))])
    elif kind == "s":
        w.writerow(["p", "numerator", "denominator", "value"])
        for p in _int_range(args.p):
            v = series.s_sum(p)
            w.writerow([p, v.numerator, v.denominator, fmt(float(v))])
    elif kind == "k":
        alpha = 0.0 if args.alpha is None else args.alpha
        ns = _int_range(args.p)
        w.writerow(["s"] + [f"K_{n}" for n in ns])
        for s in _float_range(args.s_grid):
            w.writerow([fmt(s)] + [fmt(series.k_fn(alpha, n, s)) for n in ns])
    return EXIT_OK


def cmd_orbit(args) -> int:
    spec = _spec(args)
    tr = integrate_orbit(spec, OrbitConfig(args.energy, args.ell), periods=args.periods, tol=args.tol,
                         n_samples=args.samples)
    if args.output:
        with open(args.output, "w", newline="") as fh:
            write_csv(tr, fh)
    else:
        write_csv(tr, sys.stdout)
    if len(tr.events) >= 2:
        print(f"apsidal angle: {fmt(empirical_apsidal_angle(tr))} from {len(tr.events)} apsis events",
              file=sys.stderr)
    return EXIT_OK


# -- parser ------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="apsis", description="Apsidal angles and the monotonicity proof replay.")
    p.add_argument("--version", action="version", version=f"apsis {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    a = sub.add_parser("angle", help="apsidal angle of one orbit")
    _add_potential(a)
    a.add_argument("--energy", type=float)
    g = a.add_mutually_exclusive_group(required=True)
    g.add_argument("--ell", type=float)
    g.add_argument("--q", type=float)
    a.add_argument("--method", choices=("all",) + METHODS, default="all")
    a.add_argument("--tol", type=float, default=1e-10)
    a.add_argument("--with-oracle", action="store_true")
    a.set_defaults(func=cmd_angle)

    s = sub.add_parser("scan", help="angle and derivative over an ell grid")
    _add_potential(s)
    s.add_argument("--energy", type=float, required=True)
    s.add_argument("--points", type=int, default=50)
    s.add_argument("--output")
    s.add_argument("--workers", type=int, default=0)
    s.set_defaults(func=cmd_scan)

    v = sub.add_parser("verify", help="replay the interval computations")
    v.add_argument("--second-ds", type=float, default=2e-3)
    v.add_argument("--second-dq", type=float, default=2e-4)
    v.add_argument("--first-threshold", type=float, default=FIRST_THRESHOLD)
    v.add_argument("--second-threshold", type=float, default=None)
    v.add_argument("--skip-second", action="store_true")
    v.add_argument("--tail-p-max", type=int, default=30)
    v.add_argument("--certificate", default="apsis_certificate.json")
    v.add_argument("--workers", type=int, default=0)
    v.add_argument("--verbose", action="store_true")
    v.set_defaults(func=cmd_verify)

    li = sub.add_parser("limits", help="radial and circular limit angles")
    li.add_argument("--alpha", help="comma-separated exponents in [0, 1)")
    li.set_defaults(func=cmd_limits)

    c = sub.add_parser("coeffs", help="coefficient tables as CSV")
    c.add_argument("--kind", choices=("coef", "r", "s", "k"), default="coef")
    c.add_argument("--alpha", type=float)
    c.add_argument("--s-grid", default="0:0.5:0.05")
    c.add_argument("--q-grid", default="0:0.9:0.1")
    c.add_argument("--p", default="1..4", help="orders (coef), p values (s) or n values (k)")
    c.add_argument("--corrected", action="store_true", help="corrected Coef_1, Coef_2")
    c.set_defaults(func=cmd_coeffs)

    o = sub.add_parser("orbit", help="integrate an orbit, CSV trajectory")
    _add_potential(o)
    o.add_argument("--energy", type=float, required=True)
    o.add_argument("--ell", type=float, required=True)
    o.add_argument("--periods", type=float, default=3.0)
    o.add_argument("--tol", type=float, default=1e-11)
    o.add_argument("--samples", type=int, default=2001)
    o.add_argument("--output")
    o.set_defaults(func=cmd_orbit)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"apsis: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericError as exc:
        print(f"apsis: numeric failure: {exc} {getattr(exc, 'diagnostics', {})}", file=sys.stderr)
        return EXIT_NUMERIC
    except DomainError as exc:
        print(f"apsis: invalid input: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ApsisError as exc:
        print(f"apsis: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
