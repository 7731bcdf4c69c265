"""Command-line driver: parse inputs, saturate, print SQL and answers as they arrive."""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path
from typing import Optional, Sequence, TextIO

from .compiler import Case, render_statement
from .engine import DeductiveQueryEngine
from .oracle import UnsupportedFragment, ground_answers
from .ordering import Calculus
from .parsing import ParseError
from .saturation import Status
from .terms import ArityError

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INCONSISTENT = 2
EXIT_ORACLE_MISMATCH = 3
EXIT_BUDGET = 4

_LOG_LEVELS = {"quiet": logging.WARNING, "info": logging.INFO, "trace": logging.DEBUG}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="schematic-answers",
                                description="Answer a deductive query over a relational store via schematic answers.")
    p.add_argument("--kb", type=Path, help="knowledge base clauses")
    p.add_argument("--schema", type=Path, help="table declarations")
    p.add_argument("--data", type=Path, help="table rows")
    p.add_argument("--query", required=True, help="query file, or the query text itself if it starts with ?-")
    p.add_argument("--docs", type=Path, help="document registry")
    p.add_argument("--calculus", choices=[c.value for c in Calculus], default=Calculus.UNORDERED.value)
    p.add_argument("--no-prune-db", action="store_true")
    p.add_argument("--no-prune-answers", action="store_true")
    p.add_argument("--no-prune-prefs", action="store_true")
    p.add_argument("--no-subsumption", action="store_true")
    p.add_argument("--max-derived", type=int, default=100_000)
    p.add_argument("--timeout", type=float, default=60.0)
    p.add_argument("--max-answers", type=int)
    p.add_argument("--emit", choices=["sql", "answers", "both", "docs"], default="both")
    p.add_argument("--oracle-check", action="store_true")
    p.add_argument("--oracle-depth", type=int, default=2)
    return p


def _read(path: Optional[Path]) -> Optional[str]:
    return None if path is None else path.read_text(encoding="utf-8")


def _configure_logging():
    level = os.environ.get("SA_LOG", "quiet").lower()
    if level not in _LOG_LEVELS:
        raise ValueError(f"SA_LOG must be one of {', '.join(_LOG_LEVELS)}, got {level!r}")
    logging.basicConfig(level=_LOG_LEVELS[level], stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")


def run(args: argparse.Namespace, out: Optional[TextIO] = None, err: Optional[TextIO] = None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    if args.emit == "docs" and args.docs is None:
        print("error: --emit docs needs --docs", file=err)
        return EXIT_ERROR
    try:
        _configure_logging()
        query = args.query if args.query.lstrip().startswith("?-") else Path(args.query).read_text(encoding="utf-8")
        engine = DeductiveQueryEngine(
            calculus=args.calculus, prune_db=not args.no_prune_db, prune_answers=not args.no_prune_answers,
            prune_prefs=not args.no_prune_prefs, subsumption=not args.no_subsumption,
            max_derived=args.max_derived, timeout=args.timeout, max_answers=args.max_answers,
        )
        engine.fit(_read(args.kb), _read(args.schema), _read(args.data), _read(args.docs))
        reports = engine.stream(query)
        first = next(reports, None)
    except (ParseError, ArityError, ValueError, TypeError, OSError) as exc:
        print(f"error: {exc}", file=err)
        return EXIT_ERROR

    names = engine.query_.answer_names
    inconsistent = False
    found: list = []
    n_answers = 0
    report = first
    while report is not None:
        n_answers += 1
        print(f"-- answer {report.index}", file=out)
        for note in report.compiled.diagnostics:
            print(f"% {note}", file=out)
        case = report.case
        if case is Case.KB_REFUTATION or (case is Case.KB_DB_INCONSISTENCY and report.compiled.diagnostics):
            inconsistent = True
        if args.emit in ("sql", "both") and report.compiled.sql:
            print(render_statement(report.compiled.sql), file=out)
        if args.emit in ("answers", "both"):
            for ans in report.concrete:
                print(ans.format(names), file=out)
        if args.emit == "docs":
            print("documents: " + " ".join(sorted(report.documents)), file=out)
        found.extend(report.concrete)
        out.flush()
        report = next(reports, None)

    sat = engine.saturator_
    print(f"% status: {sat.status.value}; schematic answers: {n_answers}; concrete answers: {len(found)}; "
          f"derived: {sat.stats['derived']}; kept: {sat.stats['kept']}", file=out)

    code = EXIT_OK
    if args.oracle_check:
        try:
            code = _oracle(engine, found, args.oracle_depth, out)
        except UnsupportedFragment as exc:
            print(f"error: oracle cannot decide this input: {exc}", file=err)
            return EXIT_ERROR
    if inconsistent:
        print("% the knowledge base is inconsistent (with the data)", file=out)
        return EXIT_INCONSISTENT
    if code != EXIT_OK:
        return code
    if sat.status is Status.BUDGET_EXHAUSTED:
        return EXIT_BUDGET
    return EXIT_OK


def _text(value) -> str:
    if isinstance(value, str):
        return value
    return f"{value[0]}({','.join(_text(a) for a in value[1:])})"


def _oracle(engine: DeductiveQueryEngine, found: Sequence, depth: int, out: TextIO) -> int:
    domain = engine.active_domain(engine.query_)
    ours = set()
    for ans in found:
        ours.update(ans.ground_instances(domain))
    result = ground_answers(engine.store_, engine.kb_, engine.query_, depth)
    truth = {tuple(_text(v) for v in t) for t in result.answers}
    if ours == truth:
        print("ORACLE: match" + ("" if result.exact else " (depth-bounded)"), file=out)
        return EXIT_OK
    print("ORACLE: mismatch", file=out)
    for t in sorted(truth - ours):
        print("  missing: " + ", ".join(t), file=out)
    for t in sorted(ours - truth):
        print("  extra: " + ", ".join(t), file=out)
    return EXIT_ORACLE_MISMATCH


def main(argv: Optional[Sequence[str]] = None) -> int:
    return run(build_parser().parse_args(argv))


if __name__ == "__main__":
    sys.exit(main())
