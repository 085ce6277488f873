"""Command-line entry point.

Exit codes: 0 success, 1 invalid input, 2 a reproduction or invariant check failed.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path
from typing import Any, Sequence

from . import constructions, ici, lattice, verifier, wordline
from .core import Family, code_to_dict, load_code, save_code
from .errors import InfeasibleLabeling, WomError

EXIT_OK, EXIT_INVALID, EXIT_CHECK_FAILED = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise UsageError(f"{self.prog}: {message}")


def _common() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=["json", "csv", "text"], default=None)
    common.add_argument("--threads", type=int, default=1, help="worker threads for Monte-Carlo runs (0 = auto)")
    common.add_argument("--config", type=Path, help="JSON file with flag values (flags on the command line win)")
    return common


def build_parser() -> _Parser:
    parser = _Parser(prog="imbalance-wom", description="Construct, verify and analyse d-imbalance WOM codes.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    common = [_common()]

    p = sub.add_parser("construct", parents=common, help="build a code and write its JSON document")
    p.add_argument("--family", choices=[Family.DIAGONAL.value, Family.CONSTRUCTION1.value])
    p.add_argument("--a", type=int)
    p.add_argument("--q", type=int)
    p.add_argument("--out", type=Path)

    p = sub.add_parser("verify", parents=common, help="exhaustively verify a code document")
    p.add_argument("--code", type=Path)
    p.add_argument("--frontiers", action="store_true")

    p = sub.add_parser("oracle", parents=common, help="relaxed-game upper bound on guaranteed writes")
    p.add_argument("--q", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--d", type=int)

    p = sub.add_parser("tables", parents=common, help="reproduce the write-count and sum-rate tables")
    p.add_argument("--which", choices=["1", "2", "3"])
    p.add_argument("--sidecar", type=Path, help="also write full-precision rows as JSON")

    p = sub.add_parser("lattice", parents=common, help="continuous lattice partition, optionally discretized")
    p.add_argument("--q", type=int)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--d", type=int)
    g.add_argument("--unconstrained", action="store_true")
    p.add_argument("--discretize", action="store_true")
    p.add_argument("--out", type=Path)

    p = sub.add_parser("wordline", parents=common, help="simulate wordline writes")
    p.add_argument("--code", type=Path)
    p.add_argument("--pairs", type=int)
    p.add_argument("--writes", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--messages", type=Path, help="JSON array of per-write message vectors")
    p.add_argument("--trace", type=Path, help="write the JSON-lines trace here instead of stdout")

    p = sub.add_parser("ber", parents=common, help="BER under interference with and without an imbalance cap")
    p.add_argument("--q", type=int)
    p.add_argument("--ber0", type=float)
    p.add_argument("--ber-ici", dest="ber_ici", type=float)
    p.add_argument("--d", type=int)
    p.add_argument("--mc", type=int, help="Monte-Carlo trials")
    p.add_argument("--seed", type=int, default=0)
    return parser


def _parse(argv: Sequence[str]) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config is None:
        return args
    try:
        config = json.loads(args.config.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {args.config}: {exc}") from exc
    if not isinstance(config, dict):
        raise UsageError("config file must hold a JSON object")
    known = set(vars(args)) - {"command", "config"}
    unknown = set(config) - known
    if unknown:
        raise UsageError(f"unknown config keys: {sorted(unknown)}")
    # re-parse with config values as defaults so explicit flags still win
    defaults = parser.parse_args([args.command])
    for key, value in config.items():
        if getattr(args, key) == getattr(defaults, key, None):
            setattr(args, key, Path(value) if key in _PATH_KEYS else value)
    return args


_PATH_KEYS = {"out", "code", "sidecar", "messages", "trace"}


def _require(args: argparse.Namespace, *names: str) -> None:
    missing = [n for n in names if getattr(args, n) is None]
    if missing:
        raise UsageError(f"{args.command}: missing required option(s): " + ", ".join("--" + m.replace("_", "-") for m in missing))


def _emit(rows: list[dict[str, Any]], fmt: str, header: Sequence[str] | None = None) -> str:
    if fmt == "json":
        return json.dumps(rows, indent=1)
    header = list(header or (rows[0].keys() if rows else []))
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_cell(r[h]) for h in header])
        return buf.getvalue().rstrip("\n")
    return "\n".join("  ".join(f"{h}={_cell(r[h])}" for h in header) for r in rows)


def _cell(v: Any) -> str:
    if v is None:
        return "-"
    if isinstance(v, float):
        return f"{v:.2f}"
    if isinstance(v, (list, tuple)):
        return " ".join(_cell(x) for x in v)
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


def _state_list(states) -> list[list[int]]:
    return [list(s) for s in sorted(states)]


# --- subcommands ---------------------------------------------------------------


def cmd_construct(args: argparse.Namespace) -> int:
    _require(args, "family", "a", "q")
    code = constructions.build(args.family, args.a, args.q)
    if args.out:
        save_code(code, args.out)
    if args.format == "json" or not args.out:
        print(json.dumps(code_to_dict(code)))
    else:
        print(f"wrote {args.family} code a={args.a} q={args.q} t={code.t} d={code.d} to {args.out}")
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    _require(args, "code")
    code = load_code(args.code)
    t = verifier.guaranteed_writes(code)
    result = verifier.check_imbalance_exhaustive(code)
    violation = result if isinstance(result, verifier.Violation) else None
    report: dict[str, Any] = {
        "family": code.params.family.value,
        "q": code.q,
        "d": code.d,
        "t_declared": code.t,
        "t": t,
        "violation": None if violation is None else {"write": violation.write, "state": list(violation.state)},
    }
    if args.frontiers and t >= 1:
        report["frontiers"] = [_state_list(f) for f in verifier.all_frontiers(code)[1:]]
    if args.format == "json":
        print(json.dumps(report))
    else:
        print(f"family={report['family']} q={code.q} d={code.d} t={t} (declared {code.t})")
        print("violations: none" if violation is None else f"violation: {violation}")
        for i, f in enumerate(report.get("frontiers", []), start=1):
            print(f"F{i}: " + " ".join(f"({x},{y})" for x, y in f))
    return EXIT_OK if violation is None and t >= code.t else EXIT_CHECK_FAILED


def cmd_oracle(args: argparse.Namespace) -> int:
    _require(args, "q", "m", "d")
    t = verifier.relaxed_game_t(args.q, args.m, args.d)
    print(json.dumps({"q": args.q, "m": args.m, "d": args.d, "t_upper": t}) if args.format == "json" else t)
    return EXIT_OK


def cmd_tables(args: argparse.Namespace) -> int:
    _require(args, "which")
    fmt = args.format or "csv"
    if args.which == "1":
        rows, header = verifier.table1(), verifier.TABLE1_HEADER
        full: list[dict[str, Any]] = rows
    elif args.which == "2":
        rows = [
            {"M": r["M"], "q": q, "attained": ok}
            for r in verifier.table2()
            for q, ok in zip(r["q"], r["attained"])
        ]
        header, full = ("M", "q", "attained"), rows
    else:
        full = lattice.table3()
        rows = [{k: r[k] for k in lattice.TABLE3_HEADER} for r in full]
        header = lattice.TABLE3_HEADER
    print(_emit(rows, fmt, header))
    if args.sidecar:
        args.sidecar.write_text(json.dumps(full, indent=1) + "\n")
    if args.which == "2" and not all(r["attained"] for r in rows):
        return EXIT_CHECK_FAILED
    return EXIT_OK


def cmd_lattice(args: argparse.Namespace) -> int:
    _require(args, "q")
    if args.d is None and not args.unconstrained:
        raise UsageError("lattice: pass --d D or --unconstrained")
    d = None if args.unconstrained else args.d
    z1, z2 = lattice.continuous_cardinalities(args.q, d)
    report: dict[str, Any] = {
        "q": args.q,
        "d": d,
        "Z1": z1,
        "Z2": z2,
        "sum_rate": lattice.continuous_sum_rate(args.q, d),
    }
    if args.discretize:
        code = lattice.discretize(args.q, d)
        wom = code.to_wom_code()
        t = verifier.guaranteed_writes(wom)
        report.update(M1=code.m1, M2=code.m2, discrete_sum_rate=code.sum_rate, t=t)
        if args.out:
            save_code(wom, args.out)
        if t != 2 or isinstance(verifier.check_imbalance_exhaustive(wom), verifier.Violation):
            print(json.dumps(report))
            return EXIT_CHECK_FAILED
    if args.format == "json":
        print(json.dumps(report))
    elif args.format == "csv":
        print(_emit([report], "csv"))
    else:
        print(" ".join(f"{k}={'-' if v is None else (f'{v:.4f}' if isinstance(v, float) else v)}" for k, v in report.items()))
    return EXIT_OK


def cmd_wordline(args: argparse.Namespace) -> int:
    _require(args, "code", "pairs")
    code = load_code(args.code)
    messages = None
    if args.messages:
        messages = json.loads(args.messages.read_text())
        if args.writes is not None:
            messages = messages[: args.writes]
    trace = wordline.simulate_wordline(code, args.pairs, messages, seed=args.seed, writes=args.writes)
    text = "\n".join(json.dumps(r) for r in trace)
    if args.trace:
        args.trace.write_text(text + ("\n" if text else ""))
    else:
        print(text)
    ok = all(r["balanced"] and r["frontier_ok"] for r in trace)
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def cmd_ber(args: argparse.Namespace) -> int:
    _require(args, "q", "ber0", "ber_ici", "d")
    v = ici.invert_ber_to_margin(args.ber0, args.q)
    s = v - ici.invert_ber_to_margin(args.ber_ici, args.q)
    r = args.d / (args.q - 1)
    factor = ici.ber_improvement_factor(args.q, args.d, v, s)
    row: dict[str, Any] = {
        "margin": v,
        "shift": s,
        "ber_unconstrained": ici.ber_ici(args.q, v, s),
        "ber_constrained": ici.ber_ici(args.q, v, s * r),
        "improvement_closed_form": 1 / factor.closed_form,
        "improvement_direct": factor.improvement,
    }
    if args.mc:
        params = ici.IciModelParams.from_margins(args.q, v, s)
        mc = ici.mc_ispp_simulate(params, args.d, args.mc, args.seed, threads=args.threads)
        row["improvement_mc"] = 1 / mc.ratio if mc.ber_constrained > 0 else None
        row["improvement_mc_se"] = mc.ratio_se / mc.ratio**2 if mc.ber_constrained > 0 else None
    if args.format == "json":
        print(json.dumps(row))
    else:
        fmt = args.format or "text"
        print(_emit([{k: (f"{x:.4g}" if isinstance(x, float) else x) for k, x in row.items()}], fmt))
    return EXIT_OK


COMMANDS = {
    "construct": cmd_construct,
    "verify": cmd_verify,
    "oracle": cmd_oracle,
    "tables": cmd_tables,
    "lattice": cmd_lattice,
    "wordline": cmd_wordline,
    "ber": cmd_ber,
}


def run(argv: Sequence[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = _parse(argv)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_INVALID
    except (AssertionError, InfeasibleLabeling) as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return EXIT_CHECK_FAILED
    except (WomError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
