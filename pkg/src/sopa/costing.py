"""The environmental cost calculus over event logs.

An activity instance costs the sum of its concrete driver scores; a process
instance costs the sum of its activity instances; per-activity and
per-instance averages divide exact totals by exact counts. All arithmetic is
rational, so trace order, event order, and merge order never matter.

Cost resolution: an instance's inline score (cost:value) wins when present;
otherwise the trace's variant supplies the score for each abstract driver.
Strict mode raises on anything unresolvable, lenient mode warns and moves on.
A lenient trace whose variant is unknown is excluded from every aggregate,
since none of its scores mean anything.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from datetime import datetime
from fractions import Fraction
from typing import Iterable, Mapping

from .core import ActivityInstance, EventLog, ExactDecimal, ProcessInstance, SopaError
from .variants import CostVariantConfig


_EPOCH = datetime(1970, 1, 1)


class CostingError(SopaError, ValueError):
    pass


class _SkipTrace(Exception):
    pass


@dataclass(frozen=True)
class ActivityRow:
    name: str
    average_cost: ExactDecimal
    occurrences: int


@dataclass(frozen=True)
class VariantTally:
    id: str
    trace_count: int


@dataclass(frozen=True)
class CostReport:
    scenario: str
    per_activity: tuple[ActivityRow, ...]
    average_process_instance_cost: ExactDecimal
    trace_count: int
    variants: tuple[VariantTally, ...]
    warning_count: int = 0
    warning_messages: tuple[str, ...] = ()

    def activity(self, name: str) -> ActivityRow:
        for row in self.per_activity:
            if row.name == name:
                return row
        raise CostingError(f"no activity named {name!r} in the report")

    def to_json_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "perActivity": [
                {
                    "name": row.name,
                    "averageCost": row.average_cost.canonical(),
                    "occurrences": row.occurrences,
                }
                for row in self.per_activity
            ],
            "averageProcessInstanceCost": self.average_process_instance_cost.canonical(),
            "traceCount": self.trace_count,
            "variants": [{"id": v.id, "traceCount": v.trace_count} for v in self.variants],
            "warnings": self.warning_count,
            "warningMessages": list(self.warning_messages),
        }

    @classmethod
    def from_json_dict(cls, data: Mapping) -> "CostReport":
        try:
            rows = tuple(
                ActivityRow(
                    name=entry["name"],
                    average_cost=ExactDecimal.parse(entry["averageCost"]),
                    occurrences=int(entry["occurrences"]),
                )
                for entry in data["perActivity"]
            )
            return cls(
                scenario=data.get("scenario", ""),
                per_activity=rows,
                average_process_instance_cost=ExactDecimal.parse(
                    data["averageProcessInstanceCost"]
                ),
                trace_count=int(data.get("traceCount", 0)),
                variants=tuple(
                    VariantTally(id=v["id"], trace_count=int(v["traceCount"]))
                    for v in data.get("variants", [])
                ),
                warning_count=int(data.get("warnings", 0)),
                warning_messages=tuple(data.get("warningMessages", [])),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise CostingError(f"not a valid cost report: {exc}") from exc


def save_report(report: CostReport, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report.to_json_dict(), fh, indent=2)
        fh.write("\n")


def load_report(path) -> CostReport:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise CostingError(f"{path}: {exc.strerror or exc}") from exc
    except json.JSONDecodeError as exc:
        raise CostingError(f"{path}: not valid JSON: {exc}") from exc
    return CostReport.from_json_dict(data)


# ---------------------------------------------------------------------------
# the four cost operations


def activity_instance_cost(
    instance: ActivityInstance,
    costs: Mapping[str, ExactDecimal] | None,
    *,
    lenient: bool = False,
    warn=None,
) -> ExactDecimal:
    """Sum of the instance's concrete driver scores. ``costs`` maps abstract
    driver ids to scores for the instance's variant; inline values win."""
    total = Fraction(0)
    values = instance.values or (None,) * len(instance.drivers)
    for driver, value in zip(instance.drivers, values):
        if value is not None:
            total += value.value
        elif costs is not None and driver in costs:
            total += costs[driver].value
        else:
            message = f"no cost for driver {driver!r} on activity {instance.activity!r}"
            if not lenient:
                raise CostingError(message)
            if warn is not None:
                warn(message)
    return ExactDecimal(total)


def process_instance_cost(
    trace: ProcessInstance,
    costs,
    *,
    lenient: bool = False,
    warn=None,
) -> ExactDecimal:
    """Sum over the trace's activity instances. ``costs`` may be a plain
    driver-to-score mapping or a CostVariantConfig resolved via the trace's
    variant."""
    resolved = _resolve_costs(costs, trace, lenient=lenient, warn=warn, skip=False)
    total = Fraction(0)
    for instance in trace.instances:
        total += activity_instance_cost(instance, resolved, lenient=lenient, warn=warn).value
    return ExactDecimal(total)


def average_activity_cost(
    activity: str,
    log: EventLog | Iterable[ProcessInstance],
    costs,
    *,
    lenient: bool = False,
    warn=None,
) -> ExactDecimal:
    """Total cost of the activity's instances divided by how often it ran."""
    total = Fraction(0)
    occurrences = 0
    for trace in log:
        try:
            resolved = _resolve_costs(costs, trace, lenient=lenient, warn=warn, skip=True)
        except _SkipTrace:
            continue
        for instance in trace.instances:
            if instance.activity == activity:
                total += activity_instance_cost(instance, resolved, lenient=lenient, warn=warn).value
                occurrences += 1
    if occurrences == 0:
        raise CostingError(f"activity {activity!r} does not occur in the log")
    return ExactDecimal(total / occurrences)


def average_process_instance_cost(
    log: EventLog | Iterable[ProcessInstance],
    costs,
    *,
    lenient: bool = False,
    warn=None,
) -> ExactDecimal:
    """Mean process instance cost over all usable traces."""
    total = Fraction(0)
    count = 0
    for trace in log:
        try:
            resolved = _resolve_costs(costs, trace, lenient=lenient, warn=warn, skip=True)
        except _SkipTrace:
            continue
        count += 1
        for instance in trace.instances:
            total += activity_instance_cost(instance, resolved, lenient=lenient, warn=warn).value
    if count == 0:
        raise CostingError("log contains no usable traces")
    return ExactDecimal(total / count)


def _resolve_costs(costs, trace: ProcessInstance, *, lenient: bool, warn, skip: bool):
    if costs is None:
        return None
    if isinstance(costs, CostVariantConfig):
        if trace.variant is not None and costs.has_variant(trace.variant):
            return costs.variant(trace.variant).driver_costs
        message = (
            f"trace {trace.trace_id!r} has no cost variant"
            if trace.variant is None
            else f"trace {trace.trace_id!r}: unknown variant {trace.variant!r}"
        )
        if not lenient:
            raise CostingError(message)
        if warn is not None:
            warn(message + (", trace excluded" if skip else ""))
        if skip:
            raise _SkipTrace()
        return None
    return costs


# ---------------------------------------------------------------------------
# full-log analysis


def analyze(
    log: EventLog | Iterable[ProcessInstance],
    config: CostVariantConfig | None = None,
    *,
    lenient: bool = False,
    scenario: str = "",
    extra_warnings: Iterable[str] = (),
) -> CostReport:
    """Fold a log into a cost report.

    Counting happens per distinct (variant, activity, drivers, values) key,
    so cost arithmetic runs once per concretization rather than once per
    event; totals are exact either way.
    """
    warning_log: list[str] = []
    for w in extra_warnings:
        warning_log.append(w)

    per_variant = isinstance(config, CostVariantConfig)
    key_counts: Counter = Counter()
    variant_traces: Counter = Counter()
    trace_count = 0
    for trace in log:
        variant = trace.variant
        if per_variant:
            if variant is None or not config.has_variant(variant):
                message = (
                    f"trace {trace.trace_id!r} has no cost variant"
                    if variant is None
                    else f"trace {trace.trace_id!r}: unknown variant {variant!r}"
                )
                if not lenient:
                    raise CostingError(message)
                warning_log.append(message + ", trace excluded")
                continue
        trace_count += 1
        variant_traces[variant] += 1
        for inst in trace.instances:
            key_counts[(variant, inst.activity, inst.drivers, inst.values)] += 1

    if trace_count == 0:
        raise CostingError("log contains no usable traces")

    if per_variant:
        variant_costs = {v.id: v.driver_costs for v in config.variants}
        costs_for = variant_costs.get
    else:
        # plain mapping (or None): the same table prices every trace
        costs_for = lambda variant: config

    activity_totals: dict[str, Fraction] = {}
    activity_counts: dict[str, int] = {}
    grand_total = Fraction(0)
    for (variant, activity, drivers, values), count in key_counts.items():
        instance = ActivityInstance(
            activity,
            drivers,
            start=_EPOCH,
            complete=_EPOCH,
            values=values,
        )
        cost = activity_instance_cost(
            instance,
            costs_for(variant),
            lenient=lenient,
            warn=warning_log.append,
        ).value
        activity_totals[activity] = activity_totals.get(activity, Fraction(0)) + cost * count
        activity_counts[activity] = activity_counts.get(activity, 0) + count
        grand_total += cost * count

    rows = tuple(
        ActivityRow(
            name=name,
            average_cost=ExactDecimal(activity_totals[name] / activity_counts[name]),
            occurrences=activity_counts[name],
        )
        for name in sorted(activity_totals)
    )

    if per_variant:
        tallies = tuple(
            VariantTally(id=v.id, trace_count=variant_traces.get(v.id, 0))
            for v in config.variants
        )
    else:
        seen: list[str] = []
        for variant in variant_traces:
            if variant is not None and variant not in seen:
                seen.append(variant)
        tallies = tuple(VariantTally(id=v, trace_count=variant_traces[v]) for v in seen)

    unique_warnings = tuple(dict.fromkeys(warning_log))
    return CostReport(
        scenario=scenario,
        per_activity=rows,
        average_process_instance_cost=ExactDecimal(grand_total / trace_count),
        trace_count=trace_count,
        variants=tallies,
        warning_count=len(warning_log),
        warning_messages=unique_warnings,
    )
