"""XES event log reading and writing.

Traces carry the case id (concept:name) and the cost variant (cost:variant).
Every activity instance becomes a start event and a complete event; the
complete event lists the instance's abstract driver ids as repeated
cost:driver strings, optionally each followed by an inline cost:value score.
Start and complete events are matched FIFO per activity name on input.
"""

from __future__ import annotations

import warnings
import xml.etree.ElementTree as ET
from datetime import datetime
from xml.sax.saxutils import quoteattr

from .core import (
    ActivityInstance,
    EventLog,
    ExactDecimal,
    ExactDecimalError,
    ProcessInstance,
    SopaError,
)

XES_NS = "http://www.xes-standard.org/"
COST_EXTENSION_URI = "urn:sopa:cost.xesext"

_HEADER = (
    '<?xml version="1.0" encoding="UTF-8"?>\n'
    f'<log xes.version="2.0" xmlns="{XES_NS}">\n'
    f'  <extension name="Concept" prefix="concept" uri="{XES_NS}concept.xesext"/>\n'
    f'  <extension name="Lifecycle" prefix="lifecycle" uri="{XES_NS}lifecycle.xesext"/>\n'
    f'  <extension name="Time" prefix="time" uri="{XES_NS}time.xesext"/>\n'
    f'  <extension name="Cost" prefix="cost" uri="{COST_EXTENSION_URI}"/>\n'
)


class XesError(SopaError, ValueError):
    pass


class XesWarning(UserWarning):
    """Recoverable oddities found while reading a log in lenient mode."""


def write_xes(log: EventLog) -> bytes:
    parts = [_HEADER]
    for trace in log.traces:
        parts.append(_trace_text(trace))
    parts.append("</log>\n")
    return "".join(parts).encode("utf-8")


def write_xes_stream(traces, fh) -> int:
    """Write traces from any iterable to a binary file object; returns the
    number of traces written. Memory use is one trace at a time."""
    fh.write(_HEADER.encode("utf-8"))
    count = 0
    for trace in traces:
        fh.write(_trace_text(trace).encode("utf-8"))
        count += 1
    fh.write(b"</log>\n")
    return count


def _trace_text(trace: ProcessInstance) -> str:
    out = ["  <trace>\n"]
    out.append(f"    <string key=\"concept:name\" value={quoteattr(trace.trace_id)}/>\n")
    if trace.variant is not None:
        out.append(f"    <string key=\"cost:variant\" value={quoteattr(trace.variant)}/>\n")
    for inst in trace.instances:
        out.append("    <event>\n")
        out.append(f"      <string key=\"concept:name\" value={quoteattr(inst.activity)}/>\n")
        out.append('      <string key="lifecycle:transition" value="start"/>\n')
        out.append(f"      <date key=\"time:timestamp\" value={quoteattr(inst.start.isoformat())}/>\n")
        out.append("    </event>\n")
        out.append("    <event>\n")
        values = inst.values or (None,) * len(inst.drivers)
        for driver, value in zip(inst.drivers, values):
            out.append(f"      <string key=\"cost:driver\" value={quoteattr(driver)}/>\n")
            if value is not None:
                out.append(f"      <float key=\"cost:value\" value={quoteattr(value.canonical())}/>\n")
        out.append(f"      <string key=\"concept:name\" value={quoteattr(inst.activity)}/>\n")
        out.append('      <string key="lifecycle:transition" value="complete"/>\n')
        out.append(f"      <date key=\"time:timestamp\" value={quoteattr(inst.complete.isoformat())}/>\n")
        out.append("    </event>\n")
    out.append("  </trace>\n")
    return "".join(out)


def parse_xes(data: bytes | str, *, strict: bool = True) -> EventLog:
    """Parse a log. Strict mode errors on anything structurally dubious;
    lenient mode (strict=False) downgrades to XesWarning where a safe reading
    exists. Activity instances are ordered by their complete event."""
    try:
        root = ET.fromstring(data)
    except ET.ParseError as exc:
        raise XesError(f"malformed XML: {exc}") from exc

    traces: list[ProcessInstance] = []
    seen_ids: set[str] = set()
    for position, trace_elem in enumerate(e for e in root.iter() if _local(e.tag) == "trace"):
        trace = _parse_trace(trace_elem, position, strict)
        if trace is None:
            continue
        if trace.trace_id in seen_ids:
            if strict:
                raise XesError(f"duplicate trace id: {trace.trace_id!r}")
            _warn(f"duplicate trace id {trace.trace_id!r}, keeping the first")
            continue
        seen_ids.add(trace.trace_id)
        traces.append(trace)
    return EventLog(tuple(traces))


def _parse_trace(elem: ET.Element, position: int, strict: bool) -> ProcessInstance | None:
    trace_id: str | None = None
    variant: str | None = None
    for child in elem:
        if _local(child.tag) == "string":
            key = child.get("key")
            if key == "concept:name":
                trace_id = child.get("value")
            elif key == "cost:variant":
                variant = child.get("value")
    if trace_id is None:
        if strict:
            raise XesError(f"trace #{position} has no concept:name attribute")
        trace_id = f"trace-{position}"
        _warn(f"trace #{position} has no concept:name, synthesized {trace_id!r}")
    if variant is None and strict:
        raise XesError(f"trace {trace_id!r} has no cost:variant attribute")
    if variant is None and not strict:
        _warn(f"trace {trace_id!r} has no cost:variant attribute")

    pending: dict[str, list[tuple[datetime, list[tuple[str, ExactDecimal | None]]]]] = {}
    instances: list[ActivityInstance] = []
    last_ts: datetime | None = None
    for event in (c for c in elem if _local(c.tag) == "event"):
        parsed = _parse_event(event, trace_id, strict, last_ts)
        if parsed is None:
            continue
        name, transition, ts, drivers = parsed
        last_ts = ts
        if transition == "start":
            if drivers and strict:
                raise XesError(f"trace {trace_id!r}: cost:driver on a start event of {name!r}")
            if drivers:
                _warn(f"trace {trace_id!r}: cost:driver on a start event of {name!r}")
            pending.setdefault(name, []).append((ts, drivers))
            continue
        # complete
        if pending.get(name):
            start_ts, start_drivers = pending[name].pop(0)
            for pair in start_drivers:
                if pair[0] not in (d for d, _ in drivers):
                    drivers.append(pair)
        else:
            if strict:
                raise XesError(
                    f"trace {trace_id!r}: complete event for {name!r} without a matching start"
                )
            _warn(f"trace {trace_id!r}: complete event for {name!r} without a matching start")
            start_ts = ts
        ids = tuple(d for d, _ in drivers)
        vals = tuple(v for _, v in drivers)
        instances.append(
            ActivityInstance(
                activity=name,
                drivers=ids,
                start=start_ts,
                complete=ts,
                values=vals if any(v is not None for v in vals) else None,
            )
        )
    leftover = [name for name, stack in pending.items() if stack]
    if leftover:
        msg = f"trace {trace_id!r}: start events without completes: {', '.join(sorted(leftover))}"
        if strict:
            raise XesError(msg)
        _warn(msg)
    if not instances:
        if strict:
            raise XesError(f"trace {trace_id!r} contains no activity instances")
        _warn(f"trace {trace_id!r} contains no activity instances, skipped")
        return None
    return ProcessInstance(trace_id=trace_id, variant=variant, instances=tuple(instances))


def _parse_event(event: ET.Element, trace_id: str, strict: bool, last_ts: datetime | None):
    name: str | None = None
    transition = "complete"
    ts: datetime | None = None
    drivers: list[tuple[str, ExactDecimal | None]] = []
    seen: set[str] = set()
    for child in event:
        key = child.get("key")
        tag = _local(child.tag)
        if key == "concept:name":
            name = child.get("value")
        elif key == "lifecycle:transition":
            transition = (child.get("value") or "").strip().lower()
        elif key == "time:timestamp":
            ts = _parse_timestamp(child.get("value"), trace_id)
        elif key == "cost:driver":
            driver = child.get("value")
            if not driver:
                raise XesError(f"trace {trace_id!r}: empty cost:driver value")
            if driver in seen:
                _warn(
                    f"trace {trace_id!r}: duplicate cost:driver {driver!r} on one event,"
                    " collapsed to a set"
                )
                continue
            seen.add(driver)
            drivers.append((driver, None))
        elif key == "cost:value":
            if not drivers:
                msg = f"trace {trace_id!r}: cost:value with no preceding cost:driver"
                if strict:
                    raise XesError(msg)
                _warn(msg)
                continue
            try:
                score = ExactDecimal.parse(child.get("value") or "")
            except ExactDecimalError as exc:
                raise XesError(f"trace {trace_id!r}: bad cost:value: {exc}") from exc
            last_driver, old = drivers[-1]
            if old is not None:
                msg = f"trace {trace_id!r}: repeated cost:value for driver {last_driver!r}"
                if strict:
                    raise XesError(msg)
                _warn(msg)
                continue
            drivers[-1] = (last_driver, score)
        elif tag in ("string", "date", "float", "int", "boolean", "id", "list", "container"):
            continue  # unknown attributes are allowed and ignored
    if name is None:
        raise XesError(f"trace {trace_id!r}: event without concept:name")
    if transition not in ("start", "complete"):
        msg = f"trace {trace_id!r}: unsupported lifecycle transition {transition!r} on {name!r}"
        if strict:
            raise XesError(msg)
        _warn(msg + ", event skipped")
        return None
    if ts is None:
        if strict:
            raise XesError(f"trace {trace_id!r}: event {name!r} has no time:timestamp")
        ts = last_ts if last_ts is not None else datetime(1970, 1, 1)
        _warn(f"trace {trace_id!r}: event {name!r} has no time:timestamp, reused previous")
    return name, transition, ts, drivers


def _parse_timestamp(text: str | None, trace_id: str) -> datetime:
    if not text:
        raise XesError(f"trace {trace_id!r}: empty time:timestamp")
    normalized = text.strip()
    if normalized.endswith(("Z", "z")):
        normalized = normalized[:-1] + "+00:00"
    try:
        return datetime.fromisoformat(normalized)
    except ValueError:
        raise XesError(f"trace {trace_id!r}: malformed timestamp {text!r}") from None


def load_xes(path, *, strict: bool = True) -> EventLog:
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise XesError(f"{path}: {exc.strerror or exc}") from exc
    try:
        return parse_xes(data, strict=strict)
    except XesError as exc:
        raise XesError(f"{path}: {exc}") from exc


def _warn(message: str) -> None:
    warnings.warn(message, XesWarning, stacklevel=3)


def _local(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]
