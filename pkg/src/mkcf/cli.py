"""Command-line interface.

Subcommands: expand, theta, region, bounds, sample, verify.  Output is
human-readable by default and machine-readable with --format json/csv.
Identical invocations produce byte-identical output.

Exit codes: 0 success, 1 usage error, 2 violations found, 3 precision
failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from contextlib import nullcontext

from mpmath import mp

from .core import (
    DomainError,
    PrecisionLossError,
    classical_digit_translate,
    expand,
    theta_direct,
    theta_perron,
)
from .geometry import corollary_bounds, region_mesh, theorem_bounds
from .harness import (
    ExperimentConfig,
    classical_checks,
    collect_orbits,
    export_pairs,
    export_regions,
    format_real,
    run_bounds,
    run_membership,
)
from .params import ExpressionError, Params, parse_real

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VIOLATIONS = 2
EXIT_PRECISION = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mkcf",
        description="Two-parameter continued fractions and the geometry of "
                    "their approximation-coefficient pairs.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--m", type=int, choices=(0, 1), default=0)
        p.add_argument("--k", default="1", help="expression, e.g. 1, 3/2, sqrt(2)")
        p.add_argument("--precision", type=int, default=256, dest="precision_bits")
        p.add_argument("--depth", type=int, default=32)
        p.add_argument("--format", choices=("csv", "json"), default=None)
        p.add_argument("--out", default=None, help="write output to this path")

    p = sub.add_parser("expand", help="expand one seed and print its data")
    common(p)
    p.add_argument("--x0", required=True, help="seed expression in (0,1)")

    p = sub.add_parser("theta", help="both approximation-coefficient routes for one seed")
    common(p)
    p.add_argument("--x0", required=True)

    p = sub.add_parser("region", help="export the subdivision mesh")
    common(p)
    p.add_argument("--a-max", type=int, default=6)
    p.add_argument("--b-max", type=int, default=6)

    p = sub.add_parser("bounds", help="window bounds for given l,L or a digit window")
    common(p)
    p.add_argument("--window", default=None, help="comma separated digits, e.g. 0,0,2")
    p.add_argument("--l", type=int, default=None)
    p.add_argument("--L", type=int, default=None)

    p = sub.add_parser("sample", help="sample orbits and export their pair data")
    common(p)
    p.add_argument("--seeds", type=int, default=100)
    p.add_argument("--rng-seed", type=int, default=1)
    p.add_argument("--prefix", default=None, help="comma separated digit prefix")

    p = sub.add_parser("verify", help="run membership, bound, and classical checks")
    common(p)
    p.add_argument("--seeds", type=int, default=200)
    p.add_argument("--rng-seed", type=int, default=1)
    p.add_argument("--prefix", default=None)
    return parser


def _params_from(args) -> Params:
    return Params(m=args.m, k=args.k, precision_bits=args.precision_bits,
                  max_depth=max(args.depth, 40))


def _parse_digit_list(text: str) -> list[int]:
    try:
        digits = [int(part) for part in text.split(",") if part.strip() != ""]
    except ValueError:
        raise ExpressionError(f"bad digit list {text!r}")
    if any(d < 0 for d in digits):
        raise ExpressionError("digits must be >= 0")
    return digits


def _emit(args, text: str) -> None:
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _echo_config(args, params: Params, extra: dict | None = None) -> dict:
    cfg = params.config_dict()
    cfg["command"] = args.command
    cfg["depth"] = args.depth
    if extra:
        cfg.update(extra)
    return cfg


def cmd_expand(args) -> int:
    params = _params_from(args)
    sig = max(10, params.precision_bits // 3)
    x0 = parse_real(args.x0, params.precision_bits)
    orbit = expand(x0, params, depth=args.depth)
    classical = classical_digit_translate(orbit.digits, "to_classical")
    thetas = []
    with mp.workprec(params.precision_bits):
        limit = orbit.usable_depth() - 1
        if orbit.terminated_at is not None:
            limit = min(limit, orbit.terminated_at - 1)
        for n in range(1, limit + 1):
            thetas.append({
                "n": n,
                "direct": format_real(theta_direct(x0, orbit, n, params), sig),
                "perron": format_real(
                    theta_perron(orbit.futures[n], orbit.pasts[n], params), sig),
            })
    doc = {
        "config": _echo_config(args, params, {"x0": args.x0}),
        "digits": orbit.digits,
        "classical_digits": classical,
        "futures": [format_real(x, sig) for x in orbit.futures],
        "pasts": [format_real(y, sig) for y in orbit.pasts],
        "terminated_at": orbit.terminated_at,
        "trusted_depth": orbit.trusted_depth,
        "thetas": thetas,
    }
    if args.format == "json":
        _emit(args, json.dumps(doc, sort_keys=True, indent=2) + "\n")
        return EXIT_OK
    lines = [f"# config: {json.dumps(doc['config'], sort_keys=True)}"]
    lines.append("digits      : " + ",".join(map(str, orbit.digits)))
    lines.append("classical   : " + ",".join(map(str, classical)))
    lines.append("terminated  : " + str(orbit.terminated_at))
    lines.append("trusted     : " + str(orbit.trusted_depth))
    lines.append("futures     : " + " ".join(doc["futures"][:8]) +
                 (" ..." if len(doc["futures"]) > 8 else ""))
    lines.append("pasts       : " + " ".join(doc["pasts"][:8]) +
                 (" ..." if len(doc["pasts"]) > 8 else ""))
    for row in thetas:
        lines.append(f"theta[{row['n']:>2}] direct={row['direct']} perron={row['perron']}")
    _emit(args, "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_theta(args) -> int:
    params = _params_from(args)
    sig = max(10, params.precision_bits // 3)
    x0 = parse_real(args.x0, params.precision_bits)
    orbit = expand(x0, params, depth=args.depth)
    rows = []
    with mp.workprec(params.precision_bits):
        limit = orbit.usable_depth() - 1
        if orbit.terminated_at is not None:
            limit = min(limit, orbit.terminated_at - 1)
        for n in range(1, limit + 1):
            direct = theta_direct(x0, orbit, n, params)
            perron = theta_perron(orbit.futures[n], orbit.pasts[n], params)
            rel = abs(direct - perron) / perron
            rows.append({"n": n, "direct": format_real(direct, sig),
                         "perron": format_real(perron, sig),
                         "rel_diff": format_real(rel, 8)})
    doc = {"config": _echo_config(args, params, {"x0": args.x0}), "thetas": rows}
    if args.format == "json":
        _emit(args, json.dumps(doc, sort_keys=True, indent=2) + "\n")
        return EXIT_OK
    lines = [f"# config: {json.dumps(doc['config'], sort_keys=True)}"]
    for row in rows:
        lines.append(f"n={row['n']:>2} direct={row['direct']} perron={row['perron']} "
                     f"rel_diff={row['rel_diff']}")
    _emit(args, "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_region(args) -> int:
    params = _params_from(args)
    regions = region_mesh(params, args.a_max, args.b_max)
    if args.format == "json":
        sig = max(10, params.precision_bits // 3)
        doc = {
            "config": _echo_config(args, params,
                                   {"a_max": args.a_max, "b_max": args.b_max}),
            "regions": [{
                "a": r.a, "b": r.b, "degenerate": r.degenerate,
                "unbounded": r.unbounded,
                "vertices": [[format_real(p.u, sig), format_real(p.v, sig)]
                             for p in r.vertices],
            } for r in regions],
        }
        _emit(args, json.dumps(doc, sort_keys=True, indent=2) + "\n")
        return EXIT_OK
    import io as _io
    buf = _io.StringIO()
    export_regions(regions, params, buf)
    _emit(args, buf.getvalue())
    return EXIT_OK


def cmd_bounds(args) -> int:
    params = _params_from(args)
    sig = max(10, params.precision_bits // 3)
    if args.window:
        digits = _parse_digit_list(args.window)
        if not digits:
            raise ExpressionError("--window needs at least one digit")
        l, L = min(digits), max(digits)
        window = digits
    elif args.l is not None and args.L is not None:
        l, L = args.l, args.L
        window = None
    else:
        raise ExpressionError("bounds needs --window or both --l and --L")
    tb = theorem_bounds(l, L, params)
    cb = corollary_bounds(l, L, params)
    fmt = lambda x: None if x is None else format_real(x, sig)
    doc = {
        "config": _echo_config(args, params, {"window": window, "l": l, "L": L}),
        "sum_sq": {"upper": fmt(tb.upper), "lower": fmt(tb.lower)},
        "max_abs": {"upper": fmt(cb.upper), "lower": fmt(cb.lower)},
        "classical_exception": tb.classical_exception,
    }
    if args.format == "json":
        _emit(args, json.dumps(doc, sort_keys=True, indent=2) + "\n")
        return EXIT_OK
    lines = [f"# config: {json.dumps(doc['config'], sort_keys=True)}"]
    lines.append(f"window l={l} L={L}")
    if tb.classical_exception:
        lines.append("upper bounds do not apply (classical m=1, k=1 exception)")
    else:
        lines.append(f"sum of squared differences < {doc['sum_sq']['upper']}")
        lines.append(f"max |difference|           < {doc['max_abs']['upper']}")
    if tb.lower is not None:
        lines.append(f"sum of squared differences > {doc['sum_sq']['lower']} (nominal)")
        lines.append(f"min |difference|           > {doc['max_abs']['lower']} (nominal)")
    _emit(args, "\n".join(lines) + "\n")
    return EXIT_OK


def _experiment_config(args, params: Params) -> ExperimentConfig:
    prefix = tuple(_parse_digit_list(args.prefix)) if args.prefix else None
    return ExperimentConfig(params=params, seed_count=args.seeds,
                            rng_seed=args.rng_seed, prefix=prefix,
                            depth=min(args.depth, params.max_depth),
                            fmt=args.format or "json")


def cmd_sample(args) -> int:
    params = _params_from(args)
    config = _experiment_config(args, params)
    orbits = collect_orbits(config)
    if (args.format or "csv") == "json":
        sig = max(10, params.precision_bits // 3)
        rows = []
        with mp.workprec(params.precision_bits):
            for expr, orbit in orbits:
                usable = orbit.usable_depth()
                for n in range(1, usable - 1):
                    rows.append({
                        "x0": expr, "n": n,
                        "a_next": orbit.digits[n], "a_next2": orbit.digits[n + 1],
                        "theta_n": format_real(
                            theta_perron(orbit.futures[n], orbit.pasts[n], params), sig),
                        "theta_n1": format_real(
                            theta_perron(orbit.futures[n + 1], orbit.pasts[n + 1], params), sig),
                    })
        doc = {"config": config.config_dict(), "pairs": rows}
        _emit(args, json.dumps(doc, sort_keys=True, indent=2) + "\n")
        return EXIT_OK
    import io as _io
    buf = _io.StringIO()
    export_pairs(orbits, params, buf)
    _emit(args, buf.getvalue())
    return EXIT_OK


def cmd_verify(args) -> int:
    params = _params_from(args)
    config = _experiment_config(args, params)
    orbits = collect_orbits(config)
    membership = run_membership(config, orbits=orbits)
    bounds = run_bounds(config, orbits=orbits)
    sections = {"membership": membership.to_dict(), "bounds": bounds.to_dict()}
    fatal = membership.counts.get("membership_violations", 0)
    fatal += bounds.counts.get("upper_violations", 0)
    fatal += bounds.counts.get("upper_max_violations", 0)
    lines = [
        f"membership: {membership.counts['membership_violations']} violations "
        f"over {membership.counts['pairs']} pairs",
        f"upper bounds: {bounds.counts['upper_violations']} sum-of-squares and "
        f"{bounds.counts['upper_max_violations']} max-form violations over "
        f"{bounds.counts['windows']} windows "
        f"({bounds.counts.get('skipped_exception_windows', 0)} exception windows skipped)",
        f"lower bounds (reported, non-fatal): {bounds.counts['lower_violations']} "
        f"sum-of-squares and {bounds.counts['lower_min_violations']} min-form "
        f"violations over {bounds.counts.get('lower_checked', 0)} checked windows",
    ]
    if params.k == 1:
        classical = classical_checks(config, orbits=orbits)
        sections["classical"] = classical.to_dict()
        fatal += classical.counts.get("classical_violations", 0)
        if params.m == 0:
            lines.append(
                f"coefficient-sum bound 1: {classical.counts['classical_violations']} "
                f"violations; sup = {classical.to_dict()['stats'].get('sup_theta_sum')}")
        else:
            lines.append(
                f"growth-rate bound 1: {classical.counts['classical_violations']} violations")
            probe = classical.to_dict()["stats"].get("max_theta_zero_prefix")
            lines.append(f"zero-prefix max coefficient: {probe}")
    doc = {"config": config.config_dict(), "checks": sections,
           "fatal_violations": fatal}
    if args.format == "json":
        _emit(args, json.dumps(doc, sort_keys=True, indent=2) + "\n")
    else:
        text = [f"# config: {json.dumps(doc['config'], sort_keys=True)}"]
        text.extend(lines)
        text.append(f"fatal violations: {fatal}")
        _emit(args, "\n".join(text) + "\n")
    return EXIT_VIOLATIONS if fatal else EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    handlers = {
        "expand": cmd_expand,
        "theta": cmd_theta,
        "region": cmd_region,
        "bounds": cmd_bounds,
        "sample": cmd_sample,
        "verify": cmd_verify,
    }
    try:
        return handlers[args.command](args)
    except (ExpressionError, DomainError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PrecisionLossError as exc:
        print(f"precision failure: {exc}", file=sys.stderr)
        return EXIT_PRECISION
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
