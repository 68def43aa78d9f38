"""Command line interface.

Subcommands:
  simulate   run an annotated model under a variant config, write an XES log
  analyze    fold an XES log into a cost report (json, optionally csv/svg)
  compare    diff two cost reports as a markdown table or json
  expect     analytic expectations for a model, no simulation involved
  validate   check a model plus variant config and print diagnostics

Exit codes: 0 success, 1 input or processing error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from pathlib import Path

from .core import SopaError
from .costing import analyze, load_report, save_report
from .model import load_model, validate
from .oracle import (
    expected_activity_executions,
    expected_average_activity_cost,
    expected_process_cost,
)
from .report import compare, render
from .simulate import (
    EXACT_QUOTA,
    SAMPLED,
    SimulationSettings,
    simulate,
    simulate_stream,
)
from .variants import load_variant_config
from .xes import XesWarning, load_xes, write_xes, write_xes_stream


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    try:
        return args.handler(args)
    except SopaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sopa",
        description="Quantify the environmental cost of business processes.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="simulate a model into an XES event log")
    sim.add_argument("--model", required=True, help="annotated model file")
    sim.add_argument("--variants", required=True, help="cost variant config file")
    sim.add_argument("--instances", required=True, type=int, help="number of traces")
    sim.add_argument("--seed", type=int, default=42, help="random seed (default 42)")
    sim.add_argument(
        "--exact-variant-quotas",
        action="store_true",
        help="apportion trace counts to variants exactly instead of sampling",
    )
    sim.add_argument("--threads", type=int, default=0,
                     help="worker threads; 0 honors SOPA_THREADS (default)")
    sim.add_argument("--annotations", help="sidecar annotations file")
    sim.add_argument("--tolerant-frequencies", action="store_true",
                     help="renormalize variant frequencies that are off by under 1e-9")
    sim.add_argument("--out", required=True, help="output XES path")
    sim.set_defaults(handler=_cmd_simulate)

    ana = sub.add_parser("analyze", help="compute a cost report from an XES log")
    ana.add_argument("--log", required=True, help="XES event log")
    ana.add_argument("--variants", help="cost variant config file")
    ana.add_argument("--lenient", action="store_true",
                     help="warn and continue on recoverable log defects")
    ana.add_argument("--scenario", help="report label (default: derived from --out)")
    ana.add_argument("--tolerant-frequencies", action="store_true",
                     help="renormalize variant frequencies that are off by under 1e-9")
    ana.add_argument("--out", required=True, help="output report path (json)")
    ana.add_argument("--csv", help="also write the per-activity table as csv")
    ana.add_argument("--svg", help="also write a bar chart as svg")
    ana.set_defaults(handler=_cmd_analyze)

    cmp_ = sub.add_parser("compare", help="compare two cost reports")
    cmp_.add_argument("baseline", help="baseline report (json)")
    cmp_.add_argument("candidate", help="candidate report (json)")
    cmp_.add_argument("--out", help="output path; .md or .json decides the format")
    cmp_.set_defaults(handler=_cmd_compare)

    exp = sub.add_parser("expect", help="analytic per-activity expectations")
    exp.add_argument("--model", required=True, help="annotated model file")
    exp.add_argument("--variants", required=True, help="cost variant config file")
    exp.add_argument("--annotations", help="sidecar annotations file")
    exp.add_argument("--tolerant-frequencies", action="store_true",
                     help="renormalize variant frequencies that are off by under 1e-9")
    exp.add_argument("--out", required=True, help="output path (json)")
    exp.set_defaults(handler=_cmd_expect)

    val = sub.add_parser("validate", help="check a model and variant config")
    val.add_argument("--model", required=True, help="annotated model file")
    val.add_argument("--variants", required=True, help="cost variant config file")
    val.add_argument("--annotations", help="sidecar annotations file")
    val.add_argument("--tolerant-frequencies", action="store_true",
                     help="renormalize variant frequencies that are off by under 1e-9")
    val.set_defaults(handler=_cmd_validate)

    return parser


def _cmd_simulate(args) -> int:
    config = load_variant_config(args.variants, tolerant_frequencies=args.tolerant_frequencies)
    model = load_model(args.model, annotations_path=args.annotations)
    diagnostics = validate(model, config)
    if diagnostics:
        for line in diagnostics:
            print(f"invalid: {line}", file=sys.stderr)
        return 1
    settings = SimulationSettings(
        instances=args.instances,
        seed=args.seed,
        variant_mode=EXACT_QUOTA if args.exact_variant_quotas else SAMPLED,
        threads=args.threads,
    )
    out = Path(args.out)
    outcome_of = {n.name: n.outcome for n in model.nodes if n.kind == "end"}
    outcomes = {"completed": 0, "failed": 0, "cancelled": 0}

    def tally(traces):
        # the final activity instance of a valid trace is its end event
        for trace in traces:
            outcomes[outcome_of[trace.instances[-1].activity]] += 1
            yield trace

    if settings.resolved_threads() > 1:
        log = simulate(model, config, settings)
        for _ in tally(log):
            pass
        out.write_bytes(write_xes(log))
        count = len(log)
    else:
        with open(out, "wb") as fh:
            count = write_xes_stream(tally(simulate_stream(model, config, settings)), fh)
    summary = ", ".join(f"{k}={v}" for k, v in outcomes.items())
    print(f"wrote {count} traces to {out} ({summary})")
    return 0


def _cmd_analyze(args) -> int:
    config = None
    if args.variants:
        config = load_variant_config(
            args.variants, tolerant_frequencies=args.tolerant_frequencies
        )
    with warnings.catch_warnings(record=True) as captured:
        warnings.simplefilter("always", XesWarning)
        log = load_xes(args.log, strict=not args.lenient)
    parse_warnings = [str(w.message) for w in captured if isinstance(w.message, XesWarning)]

    out = Path(args.out)
    scenario = args.scenario if args.scenario is not None else _derive_label(out)
    report = analyze(
        log,
        config,
        lenient=args.lenient,
        scenario=scenario,
        extra_warnings=parse_warnings,
    )
    save_report(report, out)
    if args.csv:
        Path(args.csv).write_text(render(report, "csv"), encoding="utf-8")
    if args.svg:
        Path(args.svg).write_text(render(report, "svg-bar"), encoding="utf-8")
    for message in report.warning_messages:
        print(f"warning: {message}", file=sys.stderr)
    print(f"wrote report for {report.trace_count} traces to {out}")
    return 0


def _derive_label(out: Path) -> str:
    name = out.name
    for suffix in (".report.json", ".json"):
        if name.endswith(suffix):
            return name[: -len(suffix)]
    return out.stem


def _cmd_compare(args) -> int:
    baseline = load_report(args.baseline)
    candidate = load_report(args.candidate)
    result = compare(baseline, candidate)
    if args.out is None:
        sys.stdout.write(render(result, "markdown-table"))
        return 0
    out = Path(args.out)
    if out.suffix == ".md":
        fmt = "markdown-table"
    elif out.suffix == ".json":
        fmt = "json"
    else:
        print(f"error: cannot infer format from {out.name!r}; use .md or .json",
              file=sys.stderr)
        return 1
    out.write_text(render(result, fmt), encoding="utf-8")
    print(f"wrote comparison to {out}")
    return 0


def _cmd_expect(args) -> int:
    config = load_variant_config(args.variants, tolerant_frequencies=args.tolerant_frequencies)
    model = load_model(args.model, annotations_path=args.annotations)
    diagnostics = validate(model, config)
    if diagnostics:
        for line in diagnostics:
            print(f"invalid: {line}", file=sys.stderr)
        return 1
    executions = expected_activity_executions(model)
    costs = expected_average_activity_cost(model, config)
    payload = {
        "perActivity": [
            {
                "name": name,
                "expectedExecutions": _exact(executions[name]),
                "averageCost": costs[name].canonical(),
            }
            for name in sorted(executions)
        ],
        "averageProcessInstanceCost": expected_process_cost(model, config).canonical(),
        "variants": [
            {"id": v.id, "frequency": v.frequency.canonical()} for v in config.variants
        ],
    }
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
    print(f"wrote expectations to {args.out}")
    return 0


def _exact(value) -> str:
    from .core import ExactDecimal

    return ExactDecimal(value).canonical()


def _cmd_validate(args) -> int:
    config = load_variant_config(args.variants, tolerant_frequencies=args.tolerant_frequencies)
    model = load_model(args.model, annotations_path=args.annotations)
    diagnostics = validate(model, config)
    if diagnostics:
        for line in diagnostics:
            print(f"invalid: {line}", file=sys.stderr)
        return 1
    print("OK")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
