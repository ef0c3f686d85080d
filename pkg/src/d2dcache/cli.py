"""Command-line front end (``d2dcache`` / ``python -m d2dcache``)."""
from __future__ import annotations

import argparse
import json
import sys

from . import achievability, converse, sweep, verify
from .core import (
    as_fraction,
    delivery_feasible,
    fmt_decimal,
    fmt_fraction,
    validate_profile,
)
from .errors import D2DCacheError, HypothesisViolated, ProfileError, SimulationError

EXIT_OK, EXIT_USAGE, EXIT_FAILED, EXIT_INTERNAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _exact(x) -> str:
    return f"{fmt_fraction(x)} ({fmt_decimal(x)})"


def _parse_list(text: str, conv=as_fraction) -> list:
    try:
        return [conv(x) for x in text.split(",") if x.strip()]
    except (ValueError, ZeroDivisionError) as e:
        raise UsageError(f"cannot parse {text!r}: {e}") from e


def _profile(args):
    m = _parse_list(args.m)
    K = args.K if args.K is not None else len(m)
    N = args.N if args.N is not None else K
    return validate_profile(K, N, m)


def _write_json(data, path: str | None) -> None:
    text = json.dumps(data, indent=2) + "\n"
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def cmd_load(args) -> int:
    p = _profile(args)
    scheme = achievability.min_load_uncoded_linear(p, rule=args.rule)
    print(_exact(scheme.load))
    if args.emit_scheme:
        _write_json(achievability.scheme_to_json(scheme, p), args.emit_scheme)
    return EXIT_OK


def _alpha_by_name(p, name: str):
    for n, a in converse.preset_alphas(p):
        if n == name:
            return a
    raise UsageError(f"no preset {name!r} for K={p.K}; choose from "
                     f"{[n for n, _ in converse.preset_alphas(p)]}")


def cmd_bound(args) -> int:
    p = _profile(args)
    if args.alpha:
        cert = converse.lower_bound_dual(p, _alpha_by_name(p, args.alpha), args.alpha)
    else:
        _, cert = converse.best_lower_bound(p, refine=args.refine)
    print(f"{_exact(cert.bound)} alpha={cert.preset}")
    if args.certificate:
        _write_json(converse.certificate_to_json(cert), args.certificate)
    return EXIT_OK


def cmd_scheme(args) -> int:
    p = _profile(args)
    if args.constructor == "auto":
        scheme = achievability.auto_scheme(p)
    else:
        scheme = achievability.CONSTRUCTORS[args.constructor](p)
    extra = "".join(f" {k}={v}" for k, v in sorted(scheme.details.items()) if not isinstance(v, tuple))
    summary = f"load {_exact(scheme.load)} provenance={scheme.provenance}{extra}"
    data = achievability.scheme_to_json(scheme, p)
    if args.output in (None, "-"):
        _write_json(data, None)
        print(summary, file=sys.stderr)
    else:
        _write_json(data, args.output)
        print(summary)
    return EXIT_OK


def cmd_simulate(args) -> int:
    from .simulator import simulate

    try:
        with open(args.scheme_file) as fh:
            data = json.load(fh)
        scheme = achievability.scheme_from_json(data)
    except (OSError, json.JSONDecodeError, KeyError) as e:
        raise UsageError(f"cannot read scheme file: {e}") from e
    profile = None
    if "m" in data:
        profile = validate_profile(scheme.K, int(data.get("N", scheme.K)), data["m"])
    demand = _parse_list(args.demand, int) if args.demand else None
    feasible = delivery_feasible(scheme.allocation, scheme.plan)
    report = simulate(scheme, demand, seed=args.seed, profile=profile, cap=args.max_F)
    out = report.to_json(hexdump=args.hexdump)
    out["feasible"] = feasible.ok
    out["violations"] = feasible.violations
    _write_json(out, args.output)
    return EXIT_OK if report.ok and feasible.ok else EXIT_FAILED


def cmd_sweep(args) -> int:
    try:
        spec = sweep.load_spec(args.spec_file)
    except (OSError, sweep.SweepSpecError, KeyError, TypeError, ValueError) as e:
        raise UsageError(f"bad sweep spec: {e}") from e
    rows = sweep.run_sweep(spec, jobs=args.jobs)
    text = sweep.rows_to_csv(spec.K, rows, exact=args.exact)
    if args.output in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(args.output, "w") as fh:
            fh.write(text)
    return EXIT_OK


def cmd_verify(args) -> int:
    names = list(verify.SUITES) if args.suite == "all" else [args.suite]
    failed = 0
    total = 0
    for name in names:
        for check in verify.SUITES[name]():
            total += 1
            failed += not check.ok
            tag = "PASS" if check.ok else "FAIL"
            tail = f"  ({check.detail})" if check.detail and (args.verbose or not check.ok) else ""
            print(f"{tag} [{name}] {check.name}{tail}")
    print(f"{total - failed}/{total} checks passed")
    return EXIT_OK if not failed else EXIT_FAILED


def _add_profile_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("-K", type=int, help="number of users (default: length of -m)")
    p.add_argument("-N", type=int, help="number of files (default: K)")
    p.add_argument("-m", required=True, help="comma-separated cache sizes, decimal or p/q")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="d2dcache", description="D2D coded caching with unequal cache sizes")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("load", help="minimum delivery load over uncoded placement and linear delivery")
    _add_profile_args(p)
    p.add_argument("--emit-scheme", metavar="PATH", help="write the optimal scheme as JSON ('-' = stdout)")
    p.add_argument("--rule", choices=("bland", "dantzig"), default="dantzig", help="simplex pivot rule")
    p.set_defaults(func=cmd_load)

    p = sub.add_parser("bound", help="lower bound from the preset permutation weights")
    _add_profile_args(p)
    p.add_argument("--alpha", help="use one preset: uniform, level-<l> or ascending")
    p.add_argument("--refine", action="store_true",
                   help="coordinate ascent over the weights (heuristic; still a valid bound)")
    p.add_argument("--certificate", metavar="PATH", help="write the dual certificate ('-' = stdout)")
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("scheme", help="emit an explicit scheme as JSON")
    _add_profile_args(p)
    p.add_argument("--constructor", default="auto",
                   choices=("auto", "threshold", "small", "large", "three-user", "lp"))
    p.add_argument("-o", "--output", help="output path (default stdout)")
    p.set_defaults(func=cmd_scheme)

    p = sub.add_parser("simulate", help="run a scheme file on random bits and decode")
    p.add_argument("scheme_file")
    p.add_argument("--demand", help="comma-separated distinct file ids (default 1..K)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-F", type=int, default=None, help="granularity cap (env D2DCACHE_MAX_F)")
    p.add_argument("--hexdump", action="store_true", help="include signal payloads in hex")
    p.add_argument("-o", "--output", help="report path (default stdout)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="evaluate a parameter grid and write CSV")
    p.add_argument("spec_file")
    p.add_argument("-o", "--output", help="CSV path (default stdout)")
    p.add_argument("--exact", action="store_true", help="add exact p/q sibling columns")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify", help="run built-in consistency suites")
    p.add_argument("--suite", default="all", choices=("all", *verify.SUITES))
    p.add_argument("-v", "--verbose", action="store_true")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ProfileError, ValueError) as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (HypothesisViolated, SimulationError) as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_FAILED
    except D2DCacheError as e:
        print(f"internal error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception as e:  # pragma: no cover - last resort
        print(f"internal error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
