"""Command-line driver.

Subcommands: ``run`` (one maximal trace), ``explore`` (state space with
optional DOT/JSON export), ``check`` (proof-net correctness of a net JSON
file), ``encode`` (net JSON to .lmn), ``fmt`` (pretty-print), ``table1``
(push/pull study rows against their reference counts).

Exit codes: 0 success, 1 violation / incorrect net, 2 usage or parse error,
3 state cap exceeded.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

from . import proofnet, rulesets
from .congruence import canonical_form
from .matching import step_all
from .mell import ApiCallError, fire, pending_calls
from .parser import ParseError, parse_program, pretty_print
from .statespace import DEFAULT_STATE_CAP, explore, export_dot, export_json
from .terms import LinkConditionError


EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_USAGE = 2
EXIT_CAPPED = 3


def _load(args) -> tuple:
    if getattr(args, "fixture", None):
        if args.fixture not in rulesets.FIXTURE_SOURCES:
            raise ParseError(
                f"unknown fixture {args.fixture!r}; available: "
                + ", ".join(sorted(rulesets.FIXTURE_SOURCES)), 0, 0)
        text = rulesets.FIXTURE_SOURCES[args.fixture]
    else:
        with open(args.file, encoding="utf-8") as fh:
            text = fh.read()
    program = parse_program(text)
    proc, rules = program.split()
    if getattr(args, "rules", None):
        rules = rules + rulesets.rule_set(args.rules)
    return proc, rules


def cmd_run(args) -> int:
    proc, rules = _load(args)
    steps = 0
    print(f"state 0: {canonical_form(proc).text}")
    while steps < args.max_steps:
        calls = pending_calls(proc)
        if calls:
            label, nxt = calls[0].label, fire(proc, calls[0])
        else:
            succs = step_all(proc, rules)
            if not succs:
                print(f"irreducible after {steps} steps")
                return EXIT_OK
            label, nxt = succs[0]
        proc = nxt
        steps += 1
        print(f"--[{label}]-->")
        print(f"state {steps}: {canonical_form(proc).text}")
    print(f"step limit reached after {steps} steps")
    return EXIT_OK


def cmd_explore(args) -> int:
    proc, rules = _load(args)
    ts = explore(
        proc, rules,
        state_cap=args.cap,
        collapse_api=not args.no_collapse_api,
        count_multi=args.count_multi,
    )
    print(f"states={ts.num_states} transitions={ts.num_transitions} "
          f"end_states={ts.num_end_states} capped={str(ts.capped).lower()}")
    if args.dot:
        with open(args.dot, "w", encoding="utf-8") as fh:
            fh.write(export_dot(ts))
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            fh.write(export_json(ts))
    return EXIT_CAPPED if ts.capped else EXIT_OK


def cmd_check(args) -> int:
    with open(args.file, encoding="utf-8") as fh:
        structure = proofnet.loads(fh.read())
    report = proofnet.validate_structure(structure)
    if not report.ok:
        for err in report.errors:
            print(f"invalid: {err}", file=sys.stderr)
        return EXIT_USAGE
    violation = proofnet.find_dr_violation(structure)
    if violation is None:
        print("proof-net")
        return EXIT_OK
    print("not-a-proof-net")
    where = "/".join(violation.box_path) or "top level"
    switching = ", ".join(f"{cid}={side}" for cid, side in
                          sorted(violation.switching.items()))
    print(f"witness: at {where}, switching [{switching}], "
          f"cycle {' - '.join(violation.cycle)}")
    return EXIT_VIOLATION


def cmd_encode(args) -> int:
    with open(args.file, encoding="utf-8") as fh:
        structure = proofnet.loads(fh.read())
    text = pretty_print(proofnet.encode(structure))
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return EXIT_OK


def cmd_fmt(args) -> int:
    if getattr(args, "fixture", None):
        text = rulesets.FIXTURE_SOURCES[args.fixture]
    else:
        with open(args.file, encoding="utf-8") as fh:
            text = fh.read()
    print(pretty_print(parse_program(text)))
    return EXIT_OK


def cmd_table1(args) -> int:
    rows = _parse_rows(args.rows)
    initial = rulesets.fixture_process("apply_ffx")
    print(f"{'row':>3} {'rules':<22} {'states':>8} {'trans':>8} {'ends':>5} "
          f"{'reference':>20} {'time':>8}")
    worst = EXIT_OK
    for row in rows:
        spec = rulesets.TABLE_ROWS[row]
        rules = rulesets.rule_set(spec)
        t0 = time.monotonic()
        ts = explore(initial, rules, state_cap=args.cap)
        dt = time.monotonic() - t0
        ref = rulesets.REFERENCE_COUNTS[row]
        ref_text = f"{ref[0]}/{ref[1]}/{ref[2]}" if ref else "diverges"
        if ts.capped:
            print(f"{row:>3} {spec:<22} {'diverged':>8} {'-':>8} {'-':>5} "
                  f"{ref_text:>20} {dt:>7.1f}s")
            if ref is not None:
                worst = max(worst, EXIT_VIOLATION)
        else:
            observed = f"{ts.num_states}/{ts.num_transitions}/{ts.num_end_states}"
            print(f"{row:>3} {spec:<22} {ts.num_states:>8} "
                  f"{ts.num_transitions:>8} {ts.num_end_states:>5} "
                  f"{ref_text:>20} {dt:>7.1f}s")
            if ref is not None and observed != f"{ref[0]}/{ref[1]}/{ref[2]}":
                worst = max(worst, EXIT_VIOLATION)
            if ref is None:
                worst = max(worst, EXIT_VIOLATION)
    return worst


def _parse_rows(spec: str) -> list[int]:
    rows: list[int] = []
    for part in spec.split(","):
        if "-" in part:
            lo, hi = part.split("-", 1)
            rows.extend(range(int(lo), int(hi) + 1))
        else:
            rows.append(int(part))
    bad = [r for r in rows if r not in rulesets.TABLE_ROWS]
    if bad:
        raise ValueError(f"rows out of range: {bad}")
    return rows


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="lmnkit",
        description="hierarchical graph rewriting and proof-net workbench")
    sub = ap.add_subparsers(dest="command", required=True)

    def add_input(p):
        group = p.add_mutually_exclusive_group(required=True)
        group.add_argument("file", nargs="?", help=".lmn program file")
        group.add_argument("--fixture", help="use a built-in fixture instead "
                           f"of a file ({', '.join(sorted(rulesets.FIXTURE_SOURCES))})")
        p.add_argument("--rules", help="add a shipped rule set, e.g. base or "
                       "base+w_pull+w_push")

    p_run = sub.add_parser("run", help="one maximal reduction trace")
    add_input(p_run)
    p_run.add_argument("--max-steps", type=int, default=1000)
    p_run.set_defaults(func=cmd_run)

    p_exp = sub.add_parser("explore", help="build the whole state space")
    add_input(p_exp)
    p_exp.add_argument("--cap", type=int, default=DEFAULT_STATE_CAP)
    p_exp.add_argument("--no-collapse-api", action="store_true",
                       help="keep mell.* micro-steps as separate states")
    p_exp.add_argument("--count-multi", action="store_true",
                       help="record transition multiplicities")
    p_exp.add_argument("--dot", help="write DOT export here")
    p_exp.add_argument("--json", help="write JSON export here")
    p_exp.set_defaults(func=cmd_explore)

    p_chk = sub.add_parser("check", help="proof-net correctness of a net JSON")
    p_chk.add_argument("file", help="net JSON file")
    p_chk.set_defaults(func=cmd_check)

    p_enc = sub.add_parser("encode", help="net JSON -> .lmn text")
    p_enc.add_argument("file", help="net JSON file")
    p_enc.add_argument("-o", "--output", help="write .lmn here (default stdout)")
    p_enc.set_defaults(func=cmd_encode)

    p_fmt = sub.add_parser("fmt", help="parse and pretty-print a program")
    group = p_fmt.add_mutually_exclusive_group(required=True)
    group.add_argument("file", nargs="?")
    group.add_argument("--fixture")
    p_fmt.set_defaults(func=cmd_fmt)

    p_tab = sub.add_parser("table1", help="push/pull study rows")
    p_tab.add_argument("--rows", default="1-7",
                       help="rows to run, e.g. 1-5 or 1,3,7 (default 1-7)")
    p_tab.add_argument("--cap", type=int, default=DEFAULT_STATE_CAP)
    p_tab.set_defaults(func=cmd_table1)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (ParseError, LinkConditionError, proofnet.NetError, ApiCallError,
            ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
