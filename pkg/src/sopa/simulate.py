"""Seeded token-game simulation of a process model under a variant config.

Each trace draws from its own counter-based random stream, a pure function of
(seed, trace index), so the produced log is byte-identical no matter how many
worker threads partition the traces. Timestamps are synthetic: one second per
event, counted across the whole log in trace order.
"""

from __future__ import annotations

import os
from bisect import bisect_right
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from fractions import Fraction

import numpy as np

from .core import ActivityInstance, EventLog, ProcessInstance, SopaError
from .model import END, EXCLUSIVE, PARALLEL, START, TASK, ProcessModel, validate
from .variants import CostVariantConfig

DEFAULT_BASE_TIMESTAMP = datetime(2026, 7, 17, 15, 35, 28, tzinfo=timezone(timedelta(hours=2)))

SAMPLED = "sampled"
EXACT_QUOTA = "exact-quota"


class SimulationError(SopaError, RuntimeError):
    pass


@dataclass(frozen=True)
class SimulationSettings:
    instances: int
    seed: int = 42
    variant_mode: str = SAMPLED
    max_iterations: int = 10_000
    base_timestamp: datetime = DEFAULT_BASE_TIMESTAMP
    threads: int = 0  # 0: honor SOPA_THREADS, else run single-threaded

    def __post_init__(self) -> None:
        if self.instances < 1:
            raise SimulationError(f"instance count must be positive, got {self.instances}")
        if self.variant_mode not in (SAMPLED, EXACT_QUOTA):
            raise SimulationError(f"unknown variant mode: {self.variant_mode!r}")
        if self.max_iterations < 1:
            raise SimulationError("max_iterations must be positive")

    def resolved_threads(self) -> int:
        """The worker count a simulation under these settings will use."""
        return _resolve_threads(self.threads)


def derive_instance_rng(seed: int, trace_index: int) -> np.random.Generator:
    """The random stream for one trace: independent across indices, identical
    across repeated calls, and independent of execution order."""
    return np.random.default_rng((seed, trace_index))


def simulate(model: ProcessModel, config: CostVariantConfig, settings: SimulationSettings) -> EventLog:
    """Simulate into an in-memory log. Thread count never changes the result."""
    compiled = _compile(model, config, settings)
    threads = _resolve_threads(settings.threads)
    if threads <= 1 or settings.instances < 2 * threads:
        raw = [_run_trace(compiled, i) for i in range(settings.instances)]
    else:
        bounds = _chunks(settings.instances, threads)
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = pool.map(lambda se: [_run_trace(compiled, i) for i in range(*se)], bounds)
            raw = [trace for part in parts for trace in part]
    return EventLog(tuple(_materialize(raw, settings.base_timestamp)))


def simulate_stream(
    model: ProcessModel,
    config: CostVariantConfig,
    settings: SimulationSettings,
    *,
    timestamps: bool = True,
):
    """Yield traces one at a time, in trace-index order, with the exact same
    content simulate() would produce. With timestamps=False every event reuses
    the base timestamp, which is noticeably faster for statistics-only runs."""
    compiled = _compile(model, config, settings)
    base = settings.base_timestamp
    clock = 0
    for i in range(settings.instances):
        variant, events = _run_trace(compiled, i)
        if timestamps:
            instances, clock = _instances_with_clock(events, base, clock)
        else:
            instances = tuple(
                ActivityInstance(name, drivers, base, base) for name, drivers in events
            )
        yield ProcessInstance(trace_id=str(i + 1), variant=variant, instances=instances)


# ---------------------------------------------------------------------------
# compilation


class _Compiled:
    __slots__ = (
        "start_id",
        "recs",
        "seed",
        "variant_thresholds",
        "variant_ids",
        "quota_plan",
        "max_iterations",
    )


def _compile(model: ProcessModel, config: CostVariantConfig, settings: SimulationSettings) -> _Compiled:
    diagnostics = validate(model, config)
    if diagnostics:
        raise SimulationError("model failed validation: " + diagnostics[0])

    recs: dict[str, tuple] = {}
    for n in model.nodes:
        out = model.outgoing[n.id]
        if n.kind == START:
            recs[n.id] = ("event", n.name, out[0].target, out[0].id)
        elif n.kind == END:
            recs[n.id] = ("end", n.name)
        elif n.kind == TASK:
            recs[n.id] = ("task", n.name, out[0].target, out[0].id, n.drivers)
        elif n.kind == EXCLUSIVE:
            if len(out) >= 2:
                cums: list[float] = []
                total = Fraction(0)
                for f in out:
                    total += f.probability.value
                    cums.append(float(total))
                cums[-1] = 1.0  # float shortfall must not strand a draw
                recs[n.id] = ("xsplit", tuple(cums), tuple((f.target, f.id) for f in out))
            else:
                recs[n.id] = ("route", out[0].target, out[0].id)
        elif n.kind == PARALLEL:
            if len(out) == 1:
                inputs = tuple(f.id for f in model.incoming[n.id])
                recs[n.id] = ("pjoin", inputs, out[0].target, out[0].id)
            else:
                recs[n.id] = ("psplit", tuple((f.target, f.id) for f in out))

    compiled = _Compiled()
    compiled.start_id = model.start_node().id
    compiled.recs = recs
    compiled.max_iterations = settings.max_iterations
    compiled.variant_ids = tuple(v.id for v in config.variants)
    if settings.variant_mode == EXACT_QUOTA:
        compiled.variant_thresholds = None
        compiled.quota_plan = _quota_plan(config, settings.instances)
    else:
        cums = []
        total = Fraction(0)
        for v in config.variants:
            total += v.frequency.value
            cums.append(float(total))
        cums[-1] = 1.0
        compiled.variant_thresholds = tuple(cums)
        compiled.quota_plan = None
    compiled.seed = settings.seed
    return compiled


def _quota_plan(config: CostVariantConfig, instances: int) -> tuple[int, ...]:
    """Largest-remainder apportionment of traces to variants; cumulative
    boundaries in variant document order."""
    shares = [v.frequency.value * instances for v in config.variants]
    counts = [int(s) for s in shares]
    leftover = instances - sum(counts)
    by_remainder = sorted(range(len(shares)), key=lambda i: (counts[i] - shares[i], i))
    for i in by_remainder[:leftover]:
        counts[i] += 1
    bounds = []
    acc = 0
    for c in counts:
        acc += c
        bounds.append(acc)
    return tuple(bounds)


def _resolve_threads(requested: int) -> int:
    if requested > 0:
        return requested
    env = os.environ.get("SOPA_THREADS", "").strip()
    if env:
        try:
            parsed = int(env)
        except ValueError:
            raise SimulationError(f"SOPA_THREADS must be an integer, got {env!r}") from None
        if parsed > 0:
            return parsed
        return min(8, os.cpu_count() or 1)  # 0 in the env var means auto
    return 1


def _chunks(total: int, parts: int):
    size, extra = divmod(total, parts)
    bounds = []
    lo = 0
    for i in range(parts):
        hi = lo + size + (1 if i < extra else 0)
        if hi > lo:
            bounds.append((lo, hi))
        lo = hi
    return bounds


# ---------------------------------------------------------------------------
# per-trace execution


def _run_trace(compiled: _Compiled, index: int) -> tuple[str, list[tuple[str, tuple[str, ...]]]]:
    rng = derive_instance_rng(compiled.seed, index)

    if compiled.quota_plan is not None:
        variant = compiled.variant_ids[bisect_right(compiled.quota_plan, index)]
    else:
        variant = compiled.variant_ids[bisect_right(compiled.variant_thresholds, rng.random())]

    recs = compiled.recs
    limit = compiled.max_iterations
    queue: deque = deque(((compiled.start_id, None),))
    arrivals: dict[str, dict] = {}
    events: list[tuple[str, tuple[str, ...]]] = []
    firings = 0
    ends = 0
    while queue:
        node_id, via = queue.popleft()
        firings += 1
        if firings > limit:
            raise SimulationError(
                f"trace {index + 1}: iteration limit of {limit} exceeded at node {node_id!r}"
            )
        rec = recs[node_id]
        kind = rec[0]
        if kind == "task":
            events.append((rec[1], rec[4]))
            queue.append((rec[2], rec[3]))
        elif kind == "xsplit":
            choice = rec[2][bisect_right(rec[1], rng.random())]
            queue.append(choice)
        elif kind == "route":
            queue.append((rec[1], rec[2]))
        elif kind == "psplit":
            queue.extend(rec[1])
        elif kind == "pjoin":
            table = arrivals.get(node_id)
            if table is None:
                table = dict.fromkeys(rec[1], 0)
                arrivals[node_id] = table
            table[via] += 1
            if all(table.values()):
                for k in table:
                    table[k] -= 1
                queue.append((rec[2], rec[3]))
        elif kind == "event":
            events.append((rec[1], ()))
            queue.append((rec[2], rec[3]))
        else:  # end
            events.append((rec[1], ()))
            ends += 1

    if any(any(t.values()) for t in arrivals.values()):
        raise SimulationError(f"trace {index + 1}: deadlocked tokens at a parallel join")
    if ends != 1:
        raise SimulationError(f"trace {index + 1}: {ends} end events fired, expected exactly 1")
    return variant, events


def _instances_with_clock(events, base: datetime, clock: int):
    instances = []
    for name, drivers in events:
        instances.append(
            ActivityInstance(
                name,
                drivers,
                base + timedelta(seconds=clock),
                base + timedelta(seconds=clock + 1),
            )
        )
        clock += 2
    return tuple(instances), clock


def _materialize(raw, base: datetime) -> list[ProcessInstance]:
    traces = []
    clock = 0
    for i, (variant, events) in enumerate(raw):
        instances, clock = _instances_with_clock(events, base, clock)
        traces.append(ProcessInstance(trace_id=str(i + 1), variant=variant, instances=instances))
    return traces
