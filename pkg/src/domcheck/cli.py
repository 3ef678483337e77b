"""Command-line interface.

Exit codes of ``verify``: 0 TRUE, 1 FALSE, 2 UNKNOWN, 3 usage or parse error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

from domcheck import bench as B
from domcheck.domtype import DomainType, infer
from domcheck.engine import WAITLISTS, Config, Limits, Options, Outcome, verify
from domcheck.errors import DomcheckError, FrontendError
from domcheck.frontend import build_cfa
from domcheck.locks import STYLES, generate_locks

EXIT_USAGE = 3
EXIT_CODES = {Outcome.TRUE: 0, Outcome.FALSE: 1, Outcome.UNKNOWN: 2}
TYPES_HEADER = ("variable", "type", "valueset_size", "values", "witness_line")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _config(name: str) -> Config:
    try:
        return Config.parse(name)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _width(text: str) -> int:
    w = int(text)
    if not 1 <= w <= 32:
        raise argparse.ArgumentTypeError("--bv-width must be in 1..32")
    return w


def _order(text: str) -> str:
    if text in ("declared", "interleaved") or text.startswith("custom:"):
        return text
    raise argparse.ArgumentTypeError("--bdd-order must be declared, interleaved or custom:FILE")


def _common(suppress: bool) -> argparse.ArgumentParser:
    # flags accepted both before and after the subcommand
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", type=_config, default=d(Config.BDD_BOOL), help="domain assignment (default bdd-bool)")
    p.add_argument("--timeout", type=float, default=d(900.0), metavar="SECONDS", help="CPU time limit per run")
    p.add_argument("--max-states", type=int, default=d(1_000_000), help="reached-state limit")
    p.add_argument("--waitlist", choices=WAITLISTS, default=d("rpo"), help="rpo (default), dfs or bfs")
    p.add_argument("--bv-width", type=_width, default=d(32), help="bit-vector width (testing only)")
    p.add_argument("--bdd-order", type=_order, default=d("declared"), help="declared | interleaved | custom:FILE")
    p.add_argument("--json", metavar="PATH", default=d(None), help="write machine-readable output ('-' = stdout)")
    p.add_argument("--stats", action="store_true", default=d(False), help="print analysis statistics")
    p.add_argument("--dump-bdd", choices=("dot",), default=d(None), help="dump the reached BDDs")
    p.add_argument("--dump-path", default=d(None), help="file for --dump-bdd (default stdout)")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="domcheck", description=__doc__.splitlines()[0], parents=[_common(False)])
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, required=True)
    common = _common(True)

    v = sub.add_parser("verify", parents=[common], help="check reachability of the error location")
    v.add_argument("file")
    v.add_argument("--quiet", action="store_true", help="no human-readable summary")

    t = sub.add_parser("types", parents=[common], help="print the domain type of every variable")
    t.add_argument("file")
    t.add_argument("--format", choices=("table", "csv", "json"), default="table")

    b = sub.add_parser("bench", parents=[common], help="run a suite of .mc tasks")
    b.add_argument("suite")
    b.add_argument("--configs", default=",".join(c.value for c in Config), help="comma-separated configuration names")
    b.add_argument("--jobs", type=int, default=1)
    b.add_argument("--isolate", action="store_true", help="run every task in a subprocess")
    b.add_argument("--out", default="bench-out", help="output directory for the CSV files")

    g = sub.add_parser("gen-locks", help="emit a program of the locks family")
    g.add_argument("--k", type=int, required=True, metavar="N", help="number of locks")
    g.add_argument("--style", choices=STYLES, default="bool")
    g.add_argument("-o", "--output", default=None)
    return parser


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}")


def _emit_json(target: Optional[str], data, out) -> None:
    text = json.dumps(data, indent=2)
    if target == "-":
        out.write(text + "\n")
    elif target:
        Path(target).write_text(text + "\n", encoding="utf-8")


def cmd_verify(args, out) -> int:
    cfa = build_cfa(_read(args.file))
    verdict = verify(
        cfa,
        infer(cfa),
        args.config,
        Limits(cpu_seconds=args.timeout, max_states=args.max_states),
        Options(waitlist=args.waitlist, width=args.bv_width, bdd_order=args.bdd_order, dump_bdd=bool(args.dump_bdd)),
    )
    if not args.quiet:
        out.write(f"{verdict.outcome.value}  ({args.config.value})\n")
        if verdict.outcome is Outcome.FALSE:
            state = "confirmed" if verdict.confirmed else "unconfirmed"
            lines = " ".join(str(e.line) for e in verdict.trace)
            out.write(f"  counterexample ({state}), lines: {lines}\n")
        if verdict.limit_hit:
            out.write(f"  {verdict.diagnostics}\n")
        out.write(
            f"  cpu {verdict.cpu_seconds:.3f}s, {verdict.reached_states} reached states, "
            f"{verdict.bdd_peak_nodes} BDD nodes\n"
        )
        if args.stats:
            for k, v in verdict.stats.items():
                out.write(f"  {k}: {v}\n")
            out.write(f"  waitlist_peak: {verdict.waitlist_peak}\n")
    _emit_json(args.json, verdict.to_json(), out)
    if args.dump_bdd:
        if args.dump_path:
            Path(args.dump_path).write_text(verdict.dot or "", encoding="utf-8")
        else:
            out.write(verdict.dot or "")
    return EXIT_CODES[verdict.outcome]


def type_rows(typing) -> list[dict]:
    rows = []
    for v in typing.variables:
        values = sorted(typing.value_set.get(v, ()))
        w = typing.witness.get(v)
        rows.append(
            {
                "variable": v,
                "type": typing.type_of[v].label,
                "valueset_size": len(values),
                "values": values,
                "witness_line": w.line if w is not None else None,
            }
        )
    return rows


def cmd_types(args, out) -> int:
    typing = infer(build_cfa(_read(args.file)))
    rows = type_rows(typing)
    hist = typing.histogram()
    labels = [t.label for t in DomainType]
    if args.format == "json" or args.json:
        data = {"variables": rows, "histogram": dict(zip(labels, hist))}
        if args.format == "json":
            _emit_json("-", data, out)
        if args.json:
            _emit_json(args.json, data, out)
    if args.format == "csv":
        w = csv.writer(out, lineterminator="\n")
        w.writerow(TYPES_HEADER)
        for r in rows:
            line = "" if r["witness_line"] is None else r["witness_line"]
            w.writerow([r["variable"], r["type"], r["valueset_size"], " ".join(map(str, r["values"])), line])
    elif args.format == "table":
        width = max([len("variable")] + [len(r["variable"]) for r in rows])
        out.write(f"{'variable':{width}}  {'type':8}  {'witness':>7}  values\n")
        for r in rows:
            line = "-" if r["witness_line"] is None else str(r["witness_line"])
            values = "{" + ", ".join(map(str, r["values"])) + "}" if r["values"] else ""
            out.write(f"{r['variable']:{width}}  {r['type']:8}  {line:>7}  {values}\n")
        out.write("histogram: " + " ".join(f"{l}={n}" for l, n in zip(labels, hist)) + "\n")
    return 0


def cmd_bench(args, out) -> int:
    try:
        configs = tuple(Config.parse(c.strip()) for c in args.configs.split(",") if c.strip())
    except ValueError as exc:
        raise UsageError(str(exc))
    suite = Path(args.suite)
    if not suite.is_dir():
        raise UsageError(f"{suite} is not a directory")
    cfg = B.BenchConfig(
        configs=configs,
        timeout=args.timeout,
        jobs=args.jobs,
        isolate=args.isolate,
        max_states=args.max_states,
        waitlist=args.waitlist,
        width=args.bv_width,
    )
    records = B.bench(suite, Path(args.out), cfg)
    out.write(B.summarize(records) + "\n")
    out.write(f"wrote {Path(args.out) / 'results.csv'}\n")
    _emit_json(args.json, [B.record_dict(r) for r in records], out)
    return 0


def cmd_gen_locks(args, out) -> int:
    try:
        text = generate_locks(args.k, args.style)
    except ValueError as exc:
        raise UsageError(str(exc))
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        out.write(text)
    return 0


COMMANDS = {"verify": cmd_verify, "types": cmd_types, "bench": cmd_bench, "gen-locks": cmd_gen_locks}


def main(argv: Optional[Sequence[str]] = None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return COMMANDS[args.command](args, out)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        sys.stderr.write(f"domcheck: error: {exc}\n")
        return EXIT_USAGE
    except FrontendError as exc:
        sys.stderr.write(f"{args.file}:{exc}\n")
        return EXIT_USAGE
    except DomcheckError as exc:
        sys.stderr.write(f"domcheck: {exc}\n")
        return EXIT_USAGE


def run(argv: Sequence[str]) -> tuple[int, str]:
    """``main`` with captured standard output, for tests."""
    buf = io.StringIO()
    code = main(list(argv), buf)
    return code, buf.getvalue()


if __name__ == "__main__":
    sys.exit(main())
