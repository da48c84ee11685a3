"""Command-line driver.

    oblint analyze MODULE.bir [flags]          static lint
    oblint oracle MODULE.bir HARNESS.json      one dynamic run
    oblint diff MODULE.bir HARNESS...          static-vs-dynamic subset check

Exit status is the machine contract: 0 clean, 1 findings, 2 operational error
(parse/validation failure or interpreter trap).
"""

from __future__ import annotations

import argparse
import glob as globmod
import json
import sys
from pathlib import Path

from . import policy
from .cloning import AnalysisResult, analyze_to_fixpoint
from .config import AnalysisConfig
from .dynoracle import Trap, run, subset_check
from .harness import HarnessError, load_harness
from .ir import ParseError, emit_annotated, has_errors, parse_module, validate_module
from .policy import ViolationReport

SCHEMA_VERSION = 1


def _add_common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--no-cloning", action="store_true", help="single propagation round")
    p.add_argument("--max-rounds", type=int, default=32, metavar="N")
    p.add_argument("--clone-budget", type=int, default=64, metavar="N")
    p.add_argument("--check-varlat", action="store_true",
                   help="flag variable-latency division on tainted operands")
    p.add_argument("--format", choices=("text", "structured"), default="text")
    p.add_argument("--emit-annotated-ir", action="store_true",
                   help="write taint-annotated IR beside the input")
    p.add_argument("--dump-graph", action="store_true",
                   help="write the value-flow graph as DOT beside the input")


def _config_from(args: argparse.Namespace) -> AnalysisConfig:
    return AnalysisConfig(
        cloning=not args.no_cloning,
        max_rounds=args.max_rounds,
        clone_budget=args.clone_budget,
        check_varlat=args.check_varlat,
        output_format=args.format,
        emit_annotated_ir=args.emit_annotated_ir,
        dump_graph=args.dump_graph,
    )


def _load_module(path: str):
    """Parse and validate; returns (module, exit_code). Nonzero code means stop."""
    try:
        text = Path(path).read_text()
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return None, 2
    try:
        module = parse_module(text)
    except ParseError as e:
        print(f"{path}:{e}", file=sys.stderr)
        return None, 2
    diags = validate_module(module)
    for d in diags:
        print(f"{path}: {d}", file=sys.stderr)
    if has_errors(diags):
        return None, 2
    return module, 0


def _analysis_outputs(path: str, config: AnalysisConfig, result: AnalysisResult) -> None:
    base = Path(path)
    if config.emit_annotated_ir:
        out = base.with_suffix(".annotated.bir")
        out.write_text(emit_annotated(result.module, result.taint))
    if config.dump_graph:
        base.with_suffix(".vfg.dot").write_text(result.graph.to_dot())


def _trace_descriptor(node) -> str:
    return str(node)


def _structured_report(path: str, config: AnalysisConfig, report: ViolationReport) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "module": Path(path).stem,
        "config": {
            "cloning": config.cloning,
            "max_rounds": config.max_rounds,
            "clone_budget": config.clone_budget,
            "check_varlat": config.check_varlat,
        },
        "violations": [
            {
                "function": v.location.function,
                "block": v.location.block,
                "index": v.location.index,
                "category": v.category,
                "operand": v.operand,
                "trace": [_trace_descriptor(n) for n in v.trace],
            }
            for v in report.violations
        ],
        "summary": report.summary(),
    }


def _print_text_report(path: str, report: ViolationReport) -> None:
    if report.is_empty:
        print(f"{path}: no violations")
        return
    n = len(report.violations)
    print(f"{path}: {n} violation{'s' if n != 1 else ''}")
    for v in report.violations:
        print(f"  {v.category:<12} {v.location}  on {v.operand}")
        if len(v.trace) > 1:
            print(f"    trace: {' -> '.join(str(n) for n in v.trace)}")
    s = report.summary()
    print(
        f"summary: branch={s['branch']} memory={s['memory']} "
        f"varlat={s['varlat']} extern-call={s['extern_call']}"
    )


def cmd_analyze(args: argparse.Namespace) -> int:
    config = _config_from(args)
    module, code = _load_module(args.module)
    if module is None:
        return code
    result = analyze_to_fixpoint(module, config)
    for d in result.diagnostics:
        print(f"{args.module}: {d}", file=sys.stderr)
    report = policy.validate(result.module, result.taint, result.trace, result.pts, config)
    _analysis_outputs(args.module, config, result)
    if config.output_format == "structured":
        print(json.dumps(_structured_report(args.module, config, report), indent=2))
    else:
        _print_text_report(args.module, report)
    return 0 if report.is_empty else 1


def cmd_oracle(args: argparse.Namespace) -> int:
    config = _config_from(args)
    module, code = _load_module(args.module)
    if module is None:
        return code
    try:
        harness = load_harness(args.harness)
        _, report = run(module, harness, config)
    except (HarnessError, OSError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except Trap as e:
        print(f"trap: {e}", file=sys.stderr)
        return 2
    dedup = report.dedup_sorted()
    if config.output_format == "structured":
        print(json.dumps({
            "schema_version": SCHEMA_VERSION,
            "raw": len(report.raw),
            "dedup": [
                {"function": i.function, "block": i.block, "index": i.index,
                 "category": c}
                for i, c in dedup
            ],
        }, indent=2))
    else:
        print(f"raw={len(report.raw)} dedup={len(dedup)}")
        for iid, cat in dedup:
            print(f"WARN {cat} {iid}")
    return 0 if not dedup else 1


def cmd_diff(args: argparse.Namespace) -> int:
    config = _config_from(args)
    module, code = _load_module(args.module)
    if module is None:
        return code
    paths: list[str] = []
    for pattern in args.harnesses:
        matches = sorted(globmod.glob(pattern))
        paths.extend(matches if matches else [pattern])
    existing = [p for p in paths if Path(p).exists()]
    if not existing:
        print("error: no harness files matched", file=sys.stderr)
        return 2

    result = analyze_to_fixpoint(module, config)
    report = policy.validate(result.module, result.taint, result.trace, result.pts, config)

    rows = []
    all_pass = True
    dynamic_union: set = set()
    for hp in existing:
        try:
            harness = load_harness(hp)
            _, dyn = run(module, harness, config)
        except (HarnessError, OSError, json.JSONDecodeError) as e:
            print(f"error: {hp}: {e}", file=sys.stderr)
            return 2
        except Trap as e:
            print(f"trap: {hp}: {e}", file=sys.stderr)
            return 2
        verdict = subset_check(report, dyn, result.registry)
        all_pass = all_pass and verdict.passed
        dynamic_union |= verdict.dynamic_pairs
        rows.append((hp, verdict, len(dyn.raw)))

    static_counts = report.summary()
    dyn_mem = sum(1 for _, c in dynamic_union if c in ("mem-load", "mem-store"))
    dyn_branch = sum(1 for _, c in dynamic_union if c == "branch")

    if config.output_format == "structured":
        print(json.dumps({
            "schema_version": SCHEMA_VERSION,
            "harnesses": [
                {"path": hp, "passed": v.passed, "raw": raw,
                 "escaped": [f"{i} {c}" for i, c in v.escaped]}
                for hp, v, raw in rows
            ],
            "summary": {
                "static": {"memory": static_counts["memory"],
                           "branch": static_counts["branch"]},
                "dynamic": {"memory": dyn_mem, "branch": dyn_branch},
            },
        }, indent=2))
    else:
        for hp, verdict, raw in rows:
            if verdict.passed:
                print(f"PASS {hp} raw={raw} dedup={len(verdict.dynamic_pairs)}")
            else:
                escapes = ", ".join(f"{i} {c}" for i, c in verdict.escaped)
                print(f"FAIL {hp} escaped: {escapes}")
        print(f"static  memory={static_counts['memory']} branch={static_counts['branch']}")
        print(f"dynamic memory={dyn_mem} branch={dyn_branch}")
    return 0 if all_pass else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="oblint",
        description="Lint programs for data-oblivious (constant-time) execution.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="static analysis and violation report")
    p.add_argument("module", help="path to a .bir module")
    _add_common_flags(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("oracle", help="run one harness under the dynamic oracle")
    p.add_argument("module", help="path to a .bir module")
    p.add_argument("harness", help="path to a harness .json file")
    _add_common_flags(p)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("diff", help="differential subset check over harnesses")
    p.add_argument("module", help="path to a .bir module")
    p.add_argument("harnesses", nargs="+", help="harness files or globs")
    _add_common_flags(p)
    p.set_defaults(func=cmd_diff)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
