"""
Quantitative Safety/Liveness Toolkit - Command Line Application
"""

import argparse
import json
import logging
import sys
from typing import List, Optional, Sequence, TextIO

from dotenv import load_dotenv

from constants.constants import (
    CLOSURE_KINDS,
    DECOMPOSITION_MODES,
    EXIT_DATA,
    EXIT_DEPTH_EXCEEDED,
    EXIT_OK,
    EXIT_USAGE,
    EXIT_VERDICT_NO,
    REPORT_CHECKS,
)
from helper.classify import classify
from helper.closure import cosafety_closure, safety_closure
from helper.decompose import decompose, verify_decomposition
from helper.errors import DepthExceeded, QuantError
from helper.monitor import GhostMonitor, StepReport, export_monitor, synthesize
from helper.props import Property, eval_finitary, eval_on_lasso
from helper.spec_files import dump_property, load_property, load_trace
from helper.traces import FiniteTrace, iter_symbols, parse_trace
from helper.utils import AnalysisConfig

# Load environment variables from .env file
load_dotenv()

logger = logging.getLogger(__name__)


class UsageError(Exception):
    pass


class CliParser(argparse.ArgumentParser):
    """Argument parser that reports problems instead of exiting."""

    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _hypothesis(raw: str):
    kind, sep, value = raw.partition(":")
    if not sep or kind.lower() not in ("ge", "le") or not value:
        raise argparse.ArgumentTypeError(f"hypothesis must look like ge:V or le:V, got {raw!r}")
    return kind.upper(), value


def _checks(raw: str) -> List[str]:
    checks = [c.strip() for c in raw.split(",") if c.strip()]
    unknown = [c for c in checks if c not in REPORT_CHECKS]
    if unknown or not checks:
        raise argparse.ArgumentTypeError(f"unknown checks {unknown}; expected some of {', '.join(REPORT_CHECKS)}")
    return checks


def build_parser() -> CliParser:
    common = CliParser(add_help=False)
    common.add_argument("--property", required=True, help="property specification file")
    common.add_argument("--seed", type=int, default=None, help="sampling seed")
    common.add_argument("--budget", type=int, default=None, help="stem/cycle bound for bounded checks")

    parser = CliParser(prog="qsl", description="Quantitative safety and liveness analysis")
    sub = parser.add_subparsers(dest="command", parser_class=CliParser)
    sub.required = True

    p_eval = sub.add_parser("eval", parents=[common], help="evaluate a property on a lasso or finite trace")
    source = p_eval.add_mutually_exclusive_group(required=True)
    source.add_argument("--lasso", help='trace text, e.g. "rq tk ; gr"')
    source.add_argument("--trace", help="trace file")

    p_monitor = sub.add_parser("monitor", parents=[common], help="stream a trace through the ghost monitor")
    p_monitor.add_argument("--trace", help="trace file (default: standard input)")
    p_monitor.add_argument("--hyp", type=_hypothesis, action="append", default=[], help="hypothesis ge:V or le:V")

    p_classify = sub.add_parser("classify", parents=[common], help="classify the property")
    p_classify.add_argument("--expect", type=_checks, default=None, help="comma-separated checks that decide the exit code")

    p_decompose = sub.add_parser("decompose", parents=[common], help="decompose and verify")
    p_decompose.add_argument("--mode", required=True, choices=DECOMPOSITION_MODES)
    p_decompose.add_argument("--symbols", default=None, help="two symbols a1,a2 for live-live mode")
    p_decompose.add_argument("--samples", type=int, default=100, help="random lassos for the identity check")

    p_synth = sub.add_parser("synth", parents=[common], help="synthesize a finite-state approximate monitor")
    p_synth.add_argument("--delta", type=float, required=True)
    p_synth.add_argument("--max-depth", type=int, default=None)
    p_synth.add_argument("--out", required=True, help="monitor JSON output file")
    p_synth.add_argument("--dot", default=None, help="optional DOT output file")

    p_closure = sub.add_parser("closure", parents=[common], help="print the safety or co-safety closure")
    p_closure.add_argument("--kind", required=True, choices=CLOSURE_KINDS)
    return parser


class AnalysisApp:
    """Dispatches the subcommands; every handler returns an exit code."""

    def __init__(self, stdin: TextIO, stdout: TextIO, stderr: TextIO):
        self.stdin = stdin
        self.stdout = stdout
        self.stderr = stderr

    def write(self, line: str = "") -> None:
        self.stdout.write(line + "\n")
        self.stdout.flush()

    def run(self, args: argparse.Namespace) -> int:
        p = load_property(args.property)
        handler = getattr(self, f"cmd_{args.command}")
        return handler(p, args)

    def cmd_eval(self, p: Property, args) -> int:
        if args.lasso is not None:
            trace = parse_trace(args.lasso, p.alphabet)
        else:
            trace = load_trace(args.trace, p.alphabet)
        value = eval_finitary(p, trace) if isinstance(trace, FiniteTrace) else eval_on_lasso(p, trace)
        self.write(p.domain.format_value(value))
        return EXIT_OK

    def cmd_monitor(self, p: Property, args) -> int:
        d = p.domain
        ghost = GhostMonitor(p, [(kind, d.parse_value(value)) for kind, value in args.hyp])
        self.write("\t".join(["step", "symbol", "pi", "lower", "upper"] + [f"{k.lower()}:{v}" for k, v in args.hyp]))
        self._row(ghost, ghost.report())
        if args.trace:
            with open(args.trace, "r", encoding="utf-8") as stream:
                self._stream(ghost, stream)
        else:
            self._stream(ghost, self.stdin)
        return EXIT_OK

    def _stream(self, ghost: GhostMonitor, stream: TextIO) -> None:
        for _, symbol in iter_symbols(stream, ghost.property.alphabet):
            self._row(ghost, ghost.step(symbol))

    def _row(self, ghost: GhostMonitor, report: StepReport) -> None:
        # step 0 is the empty prefix and has no symbol
        d = ghost.domain
        columns = [
            str(report.step),
            report.symbol or "",
            d.format_value(report.pi),
            d.format_value(report.lower),
            d.format_value(report.upper),
        ]
        columns.extend(h.status for h in ghost.hypotheses)
        self.write("\t".join(columns))

    def cmd_classify(self, p: Property, args) -> int:
        report = classify(p, args.budget, seed=args.seed)
        for line in report.lines():
            self.write(line)
        return report.exit_code(args.expect)

    def cmd_decompose(self, p: Property, args) -> int:
        symbols = [s.strip() for s in args.symbols.split(",")] if args.symbols else None
        parts = decompose(p, args.mode, symbols)
        report = verify_decomposition(p, parts, args.mode, samples=args.samples, seed=args.seed, budget=args.budget)
        for i, part in enumerate(parts, start=1):
            self.write(f"part {i}: {part.name}")
            self.write(f"  descriptor: {json.dumps(part.describe(), ensure_ascii=False)}")
            for check, verdict in report.part_verdicts.get(part.name, {}).items():
                self.write(f"  {check}: {verdict}")
        self.write(f"lassos checked: {report.lassos_checked}")
        self.write(f"counterexamples: {len(report.counterexamples)}")
        for c in report.counterexamples:
            self.write(f"  lasso \"{c.lasso}\" expected={p.domain.format_value(c.expected)} got={p.domain.format_value(c.got)}")
        self.write(f"result: {'pass' if report.passed else 'fail'}")
        return EXIT_OK if report.passed else EXIT_VERDICT_NO

    def cmd_synth(self, p: Property, args) -> int:
        monitor = synthesize(p, args.delta, args.max_depth)
        with open(args.out, "wb") as f:
            f.write(export_monitor(monitor, "json"))
        if args.dot:
            with open(args.dot, "wb") as f:
                f.write(export_monitor(monitor, "dot"))
        self.write(f"classes: {len(monitor.classes)}")
        self.write(f"wide prefixes: {len(monitor.s_delta())}")
        return EXIT_OK

    def cmd_closure(self, p: Property, args) -> int:
        closed = safety_closure(p) if args.kind == "safety" else cosafety_closure(p)
        self.stdout.write(dump_property(closed).decode("utf-8"))
        self.stdout.flush()
        return EXIT_OK


def run_cli(
    argv: Sequence[str],
    stdin: Optional[TextIO] = None,
    stdout: Optional[TextIO] = None,
    stderr: Optional[TextIO] = None,
) -> int:
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        args = build_parser().parse_args(list(argv))
    except UsageError as e:
        stderr.write(f"error: usage: {e}\n")
        return EXIT_USAGE
    except SystemExit as e:
        # --help
        return EXIT_OK if e.code in (0, None) else EXIT_USAGE

    try:
        return AnalysisApp(stdin, stdout, stderr).run(args)
    except DepthExceeded as e:
        stderr.write(f"error: {e.diagnostic()}\n")
        return EXIT_DEPTH_EXCEEDED
    except QuantError as e:
        logger.debug(f"{args.command} failed", exc_info=True)
        stderr.write(f"error: {e.diagnostic()}\n")
        return EXIT_DATA
    except OSError as e:
        stderr.write(f"error: IOError: {e.filename}: {e.strerror}\n")
        return EXIT_DATA


def main() -> int:
    logging.basicConfig(
        level=getattr(logging, AnalysisConfig.get_log_level(), logging.WARNING),
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )
    return run_cli(sys.argv[1:])


if __name__ == "__main__":
    sys.exit(main())
