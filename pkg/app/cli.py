"""
Command-line surface: ``python -m app.cli <command> ...``.

    evaluate  --problem P --theory T [--obs Var=outcome ...]
    table     [--problems all|list] [--theories all|list] [--workers N]
    check     <path|builtin:name>
    simulate  --problem P (--rule SPEC | --theory T) [--episodes N] [--seed S]
    explain   --problem P --query "X _||_ Y | Z" [--graph physical|logical]

Payloads go to standard output, diagnostics to standard error. Exit codes:
0 success, 1 domain error (or a failed check), 2 usage or parse error.
"""

import argparse
import logging
import sys
from typing import Any, Callable, Dict, Optional, Sequence, Tuple

from app.causal.errors import DtlabError, ProblemDefinitionError, UsageError
from app.config import config
from app.decision.reports import check_problem_text, explain, simulate
from app.decision.theories import behaviour_matrix, evaluate
from app.dsl.serializer import serialize_problem
from app.models.api import OutputEnvelope, OutputFormat
from app.utils.conversion import render, to_payload
from app.utils.tools import (
    BUILTIN_PREFIX,
    load_problem,
    load_problems,
    parse_assignment,
    parse_params,
    parse_query,
    parse_theories,
    parse_theory,
    read_problem_text,
)

EXIT_OK = 0
EXIT_DOMAIN = 1
EXIT_USAGE = 2

Result = Tuple[Any, int]


def _problem(args: argparse.Namespace):
    return load_problem(args.problem, parse_params(args.param))


def cmd_evaluate(args: argparse.Namespace) -> Result:
    theory = parse_theory(args.theory)
    return evaluate(_problem(args), theory, parse_assignment(args.obs)), EXIT_OK


def cmd_table(args: argparse.Namespace) -> Result:
    problems = load_problems(args.problems, parse_params(args.param))
    theories = parse_theories(args.theories)
    return behaviour_matrix(problems, theories, workers=args.workers), EXIT_OK


def cmd_check(args: argparse.Namespace) -> Result:
    if args.path.startswith(BUILTIN_PREFIX):
        text = serialize_problem(load_problem(args.path, parse_params(args.param)))
    else:
        text = read_problem_text(args.path)
    report = check_problem_text(text)
    if report.ok:
        return report, EXIT_OK
    syntax = any(" syntax error: " in d for d in report.diagnostics)
    return report, EXIT_USAGE if syntax else EXIT_DOMAIN


def cmd_simulate(args: argparse.Namespace) -> Result:
    if args.rule is None and args.theory is None:
        raise UsageError("simulate needs --rule or --theory")
    theory = parse_theory(args.theory) if args.theory else None
    reports = simulate(_problem(args), theory, args.rule, parse_assignment(args.obs), args.episodes, args.seed)
    return reports, EXIT_OK


def cmd_explain(args: argparse.Namespace) -> Result:
    x, y, z = parse_query(args.query)
    return explain(_problem(args), x, y, z, args.graph), EXIT_OK


COMMANDS: Dict[str, Callable[[argparse.Namespace], Result]] = {
    "evaluate": cmd_evaluate,
    "table": cmd_table,
    "check": cmd_check,
    "simulate": cmd_simulate,
    "explain": cmd_explain,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dtlab", description="Decision theories on mechanised causal graphs.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, with_problem: bool = True) -> None:
        if with_problem:
            p.add_argument("--problem", required=True, help="Path to a .dtp file or builtin:<name>.")
        p.add_argument("--param", action="append", default=[], metavar="KEY=VALUE",
                       help="Built-in parameter override, e.g. accuracy=0.9 (repeatable).")
        p.add_argument("--format", default=OutputFormat.TEXT.value, choices=[f.value for f in OutputFormat])

    p = sub.add_parser("evaluate", help="Expected-utility table and recommendation of one theory.")
    common(p)
    p.add_argument("--theory", required=True, help="edt, cdt, ufdt, uedt, ucdt or fdt.")
    p.add_argument("--obs", action="append", default=[], metavar="VAR=OUTCOME")

    p = sub.add_parser("table", help="Action of each theory in each problem.")
    common(p, with_problem=False)
    p.add_argument("--problems", default="all", help="'all' or a comma-separated list of problems.")
    p.add_argument("--theories", default="all", help="'all' or a comma-separated list of theories.")
    p.add_argument("--workers", type=int, default=None, help="Threads evaluating cells.")

    p = sub.add_parser("check", help="Parse, validate and cross-check a problem file.")
    p.add_argument("path")
    p.add_argument("--param", action="append", default=[], metavar="KEY=VALUE")
    p.add_argument("--format", default=OutputFormat.TEXT.value, choices=[f.value for f in OutputFormat])

    p = sub.add_parser("simulate", help="Monte Carlo estimates next to the exact values.")
    common(p)
    p.add_argument("--rule", default=None, help="Rule spec, e.g. '(P=full->one_box,P=empty->two_box)'.")
    p.add_argument("--theory", default=None)
    p.add_argument("--obs", action="append", default=[], metavar="VAR=OUTCOME")
    p.add_argument("--episodes", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)

    p = sub.add_parser("explain", help="d-separation verdict with an active path.")
    common(p)
    p.add_argument("--query", required=True, help="'X _||_ Y | Z', comma-separated lists.")
    p.add_argument("--graph", default="physical", choices=["physical", "logical"])
    return parser


def _exit_code(e: DtlabError) -> int:
    if isinstance(e, (UsageError, ProblemDefinitionError)):
        return EXIT_USAGE
    return EXIT_DOMAIN


def run(argv: Optional[Sequence[str]] = None) -> Tuple[OutputEnvelope, Optional[str]]:
    """
    Execute one command.

    Returns:
        The envelope (payload and exit code) and the rendered output, or
        None when the command failed before producing a result.
    """
    args = build_parser().parse_args(argv)
    fmt = OutputFormat(args.format)
    try:
        result, code = COMMANDS[args.command](args)
    except DtlabError as e:
        logging.error(f"{args.command} failed: {e}")
        print(str(e), file=sys.stderr)
        return OutputEnvelope(format=fmt, payload={"error": str(e)}, exit_code=_exit_code(e)), None
    return OutputEnvelope(format=fmt, payload=to_payload(result), exit_code=code), render(result, fmt)


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    logging.basicConfig(level=config.get_logging_level(), format=config.get_logging_format(), stream=sys.stderr)
    try:
        envelope, output = run(argv)
    except SystemExit as e:
        return int(e.code) if isinstance(e.code, int) else EXIT_USAGE
    if output is not None:
        stream = sys.stdout if envelope.exit_code == EXIT_OK or envelope.format != OutputFormat.TEXT else sys.stderr
        print(output.rstrip("\n"), file=stream)
    return envelope.exit_code


if __name__ == "__main__":
    sys.exit(main())
