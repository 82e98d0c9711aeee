"""``barrierfix`` command-line entry point.

Exit codes::

    0   repaired, or already safe
    1   parse or semantic error in the input kernel
    2   the verifier reported an error that barriers cannot fix
    3   no barrier placement exists (UNSAT constraints or empty witness)
    4   iteration or time budget exhausted
    64  malformed command line
    66  input file missing or unreadable
    74  output could not be written
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

from ._version import __version__
from .constraints import Strategy, to_wcnf
from .engine import CannotRepair, Reason, RepairConfig, Repaired, Timeout, repair, verdict_of
from .instrument import WeightConfig, instrument
from .lang import LaunchConfig, ParseError, parse, pretty_print
from .summary import write_summary

EXIT_OK = 0
EXIT_PARSE = 1
EXIT_NOT_REPAIRABLE = 2
EXIT_NO_REPAIR = 3
EXIT_TIMEOUT = 4
EXIT_USAGE = 64
EXIT_NOINPUT = 66
EXIT_IOERR = 74


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _positive(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be positive: {v}")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="barrierfix", description="Repair barrier placement in MiniKernel programs.")
    p.add_argument("input", help="kernel source (.mk)")
    p.add_argument("--maxsat", action="store_true", help="solve every iteration with exact MaxSAT")
    p.add_argument("--disable-grid", action="store_true", help="do not consider grid-level barriers")
    p.add_argument("--disable-inspect", action="store_true",
                   help="keep programmer barriers as they are")
    p.add_argument("--gw", type=_positive, default=12, help="grid-level barrier weight (default 12)")
    p.add_argument("--lw", type=_positive, default=10, help="loop weight base (default 10)")
    p.add_argument("--blocks", type=_positive, help="override the kernel's block count")
    p.add_argument("--threads", type=_positive, help="override threads per block")
    p.add_argument("--unroll", type=int, help="unroll every loop this many times")
    p.add_argument("--out", help="repaired kernel path (default <input>.fixed.mk)")
    p.add_argument("--summary", help="summary path (default <input>.summary.json)")
    p.add_argument("--dump-cnf", metavar="PATH", help="write the final constraint as WDIMACS")
    p.add_argument("--dump-trace", metavar="PATH",
                   help="write the last witness as JSON lines")
    p.add_argument("--timeout-iters", type=_positive, default=1000,
                   help="maximum repair iterations (default 1000)")
    p.add_argument("--time-limit", type=float, help="wall-clock limit in seconds")
    p.add_argument("-q", "--quiet", action="store_true")
    p.add_argument("-v", "--verbose", action="store_true")
    p.add_argument("--version", action="version", version=f"barrierfix {__version__}")
    return p


def _default_path(inp: Path, suffix: str) -> Path:
    return inp.with_name(inp.stem + suffix)


def main(argv: Optional[List[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except _UsageError as e:
        print(f"barrierfix: {e}", file=sys.stderr)
        return EXIT_USAGE
    if args.unroll is not None and args.unroll < 0:
        print("barrierfix: --unroll must be non-negative", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")

    inp = Path(args.input)
    try:
        text = inp.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as e:
        print(f"barrierfix: cannot read {inp}: {e}", file=sys.stderr)
        return EXIT_NOINPUT
    try:
        kernel = parse(text, str(inp))
    except ParseError as e:
        print(f"barrierfix: {e}", file=sys.stderr)
        return EXIT_PARSE

    launch = LaunchConfig(args.blocks or kernel.launch.blocks,
                          args.threads or kernel.launch.threads)
    weights = WeightConfig(args.gw, args.lw, not args.disable_grid, not args.disable_inspect)
    strategy = Strategy.MAXSAT if args.maxsat else Strategy.MHS
    try:
        cfg = RepairConfig(strategy, weights, args.timeout_iters, launch, args.unroll,
                           time_limit=args.time_limit)
        outcome = repair(instrument(kernel, weights), cfg)
    except ValueError as e:
        print(f"barrierfix: {e}", file=sys.stderr)
        return EXIT_USAGE

    out_path = Path(args.out) if args.out else _default_path(inp, ".fixed.mk")
    summary_path = Path(args.summary) if args.summary else _default_path(inp, ".summary.json")
    try:
        if isinstance(outcome, Repaired):
            fixed = text if not outcome.changes else pretty_print(outcome.kernel)
            out_path.write_text(fixed, encoding="utf-8")
        write_summary(outcome, summary_path, str(inp), strategy)
        if args.dump_cnf:
            Path(args.dump_cnf).write_text(
                to_wcnf(list(outcome.constraint), outcome.instrumented.weights), encoding="utf-8")
        if args.dump_trace:
            _, verdict = verdict_of(outcome)
            lines = [json.dumps(ev, sort_keys=True) for ev in getattr(verdict, "trace", ())]
            Path(args.dump_trace).write_text("".join(x + "\n" for x in lines), encoding="utf-8")
    except OSError as e:
        print(f"barrierfix: {e}", file=sys.stderr)
        return EXIT_IOERR

    if not args.quiet:
        _report(outcome, inp, out_path)
    return exit_code(outcome)


def exit_code(outcome) -> int:
    if isinstance(outcome, Repaired):
        return EXIT_OK
    if isinstance(outcome, Timeout):
        return EXIT_TIMEOUT
    if outcome.reason is Reason.NON_REPAIRABLE_ERROR:
        return EXIT_NOT_REPAIRABLE
    return EXIT_NO_REPAIR


def _report(outcome, inp: Path, out_path: Path) -> None:
    if isinstance(outcome, Repaired):
        if not outcome.changes:
            print(f"{inp}: no changes needed")
        else:
            print(f"{inp}: repaired in {outcome.iterations} iterations "
                  f"(weight {outcome.solution.total_weight}); wrote {out_path}")
            for c in outcome.changes:
                print(f"  {c}")
    elif isinstance(outcome, CannotRepair):
        print(f"{inp}: cannot repair ({outcome.reason.value}): {outcome.detail}")
    else:
        print(f"{inp}: gave up after {outcome.iterations} iterations")


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
