"""Process model graphs: a BPMN 2.0 subset with cost driver annotations.

Supported elements: one start event, one or more end events (labelled
completed, failed, or cancelled), tasks, exclusive gateways and
block-structured parallel gateways. Tasks carry abstract driver annotations
as extension elements:

    <bpmn:task id="t1" name="Sift and select candidates (Dep)">
        <bpmn:extensionElements>
            <sopa:costDriver id="Sifting"/>
        </bpmn:extensionElements>
    </bpmn:task>

Outgoing flows of an exclusive split carry branch probabilities the same way
(<sopa:probability value="0.95"/>), and end events may carry an outcome label
(<sopa:outcome value="failed"/>). A sidecar annotation file can add or
override task drivers (by task name) and flow probabilities (by flow id).

The sopa extension namespace URI is "urn:sopa:annotations".
"""

from __future__ import annotations

import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from fractions import Fraction

from .core import ExactDecimal, ExactDecimalError, SopaError

SOPA_NS = "urn:sopa:annotations"
BPMN_NS = "http://www.omg.org/spec/BPMN/20100524/MODEL"

START, END, TASK, EXCLUSIVE, PARALLEL = "start", "end", "task", "exclusive", "parallel"
OUTCOMES = ("completed", "failed", "cancelled")

# BPMN elements that parse but contribute nothing to the executable graph
_DOCUMENTATION_ELEMENTS = {
    "laneSet",
    "lane",
    "documentation",
    "extensionElements",
    "textAnnotation",
    "association",
}

_TASK_TAGS = {"task", "userTask", "serviceTask", "manualTask", "scriptTask", "sendTask", "receiveTask"}


class ModelError(SopaError, ValueError):
    pass


class FlowSystemError(SopaError, ValueError):
    """The edge-flow equations have no unique solution (a loop that cannot
    terminate, or a malformed gateway layout)."""


@dataclass(frozen=True, slots=True)
class Node:
    id: str
    kind: str
    name: str = ""
    drivers: tuple[str, ...] = ()
    outcome: str = "completed"


@dataclass(frozen=True, slots=True)
class Flow:
    id: str
    source: str
    target: str
    probability: ExactDecimal | None = None


@dataclass(frozen=True)
class ProcessModel:
    nodes: tuple[Node, ...]
    flows: tuple[Flow, ...]
    by_id: dict[str, Node] = field(init=False, repr=False, compare=False)
    outgoing: dict[str, tuple[Flow, ...]] = field(init=False, repr=False, compare=False)
    incoming: dict[str, tuple[Flow, ...]] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        by_id: dict[str, Node] = {}
        for n in self.nodes:
            if n.id in by_id:
                raise ModelError(f"duplicate node id: {n.id!r}")
            by_id[n.id] = n
        outgoing: dict[str, list[Flow]] = {n.id: [] for n in self.nodes}
        incoming: dict[str, list[Flow]] = {n.id: [] for n in self.nodes}
        seen_flows = set()
        for f in self.flows:
            if f.id in seen_flows:
                raise ModelError(f"duplicate flow id: {f.id!r}")
            seen_flows.add(f.id)
            if f.source not in by_id or f.target not in by_id:
                raise ModelError(f"flow {f.id!r} references an unknown node")
            outgoing[f.source].append(f)
            incoming[f.target].append(f)
        object.__setattr__(self, "by_id", by_id)
        object.__setattr__(self, "outgoing", {k: tuple(v) for k, v in outgoing.items()})
        object.__setattr__(self, "incoming", {k: tuple(v) for k, v in incoming.items()})

    def start_node(self) -> Node:
        starts = [n for n in self.nodes if n.kind == START]
        if len(starts) != 1:
            raise ModelError(f"model has {len(starts)} start events, expected exactly 1")
        return starts[0]

    def tasks(self) -> tuple[Node, ...]:
        return tuple(n for n in self.nodes if n.kind == TASK)

    def activity_names(self) -> tuple[str, ...]:
        names: list[str] = []
        for n in self.nodes:
            if n.kind == TASK and n.name not in names:
                names.append(n.name)
        return tuple(names)


@dataclass(frozen=True)
class Annotations:
    """Sidecar content: task drivers keyed by task name, probabilities keyed
    by flow id."""

    task_drivers: dict[str, tuple[str, ...]]
    flow_probabilities: dict[str, ExactDecimal]


def parse_annotations(data: bytes | str) -> Annotations:
    try:
        root = ET.fromstring(data)
    except ET.ParseError as exc:
        raise ModelError(f"malformed annotation XML: {exc}") from exc
    if _local(root.tag) != "annotations":
        raise ModelError(f"expected root element 'annotations', got {_local(root.tag)!r}")
    task_drivers: dict[str, tuple[str, ...]] = {}
    flow_probabilities: dict[str, ExactDecimal] = {}
    for elem in root:
        tag = _local(elem.tag)
        if tag == "task":
            name = elem.get("name")
            if not name:
                raise ModelError("annotation task is missing the 'name' attribute")
            if name in task_drivers:
                raise ModelError(f"duplicate annotation for task {name!r}")
            drivers: list[str] = []
            for child in elem:
                if _local(child.tag) != "costDriver":
                    raise ModelError(
                        f"unexpected element {_local(child.tag)!r} under task annotation {name!r}"
                    )
                driver_id = child.get("id")
                if not driver_id:
                    raise ModelError(f"task annotation {name!r}: costDriver needs an 'id'")
                if driver_id in drivers:
                    raise ModelError(f"task annotation {name!r}: duplicate driver {driver_id!r}")
                drivers.append(driver_id)
            task_drivers[name] = tuple(drivers)
        elif tag == "flow":
            flow_id = elem.get("id")
            if not flow_id:
                raise ModelError("annotation flow is missing the 'id' attribute")
            if flow_id in flow_probabilities:
                raise ModelError(f"duplicate annotation for flow {flow_id!r}")
            prob_text = elem.get("probability")
            if prob_text is None:
                raise ModelError(f"flow annotation {flow_id!r} needs a 'probability'")
            try:
                flow_probabilities[flow_id] = ExactDecimal.parse(prob_text)
            except ExactDecimalError as exc:
                raise ModelError(f"flow annotation {flow_id!r}: {exc}") from exc
        else:
            raise ModelError(f"unexpected element {tag!r} under annotations")
    return Annotations(task_drivers=task_drivers, flow_probabilities=flow_probabilities)


def parse_model(data: bytes | str, annotations: Annotations | None = None) -> ProcessModel:
    """Parse and structurally validate a process model.

    The optional sidecar overrides inline task drivers (matched by task name)
    and flow probabilities (matched by flow id) before validation runs.
    """
    try:
        root = ET.fromstring(data)
    except ET.ParseError as exc:
        raise ModelError(f"malformed model XML: {exc}") from exc

    processes = [e for e in root.iter() if _local(e.tag) == "process"]
    if _local(root.tag) == "process":
        processes = [root]
    if len(processes) != 1:
        raise ModelError(f"expected exactly one process element, found {len(processes)}")

    nodes: list[Node] = []
    flows: list[Flow] = []
    for elem in processes[0]:
        tag = _local(elem.tag)
        if tag in _DOCUMENTATION_ELEMENTS:
            continue
        elem_id = elem.get("id")
        if not elem_id:
            raise ModelError(f"element {tag!r} is missing the 'id' attribute")
        name = elem.get("name", "")
        if tag == "startEvent":
            nodes.append(Node(id=elem_id, kind=START, name=name or elem_id))
        elif tag == "endEvent":
            outcome = _extension_value(elem, "outcome") or "completed"
            if outcome not in OUTCOMES:
                raise ModelError(
                    f"end event {elem_id!r}: outcome must be one of {', '.join(OUTCOMES)},"
                    f" got {outcome!r}"
                )
            nodes.append(Node(id=elem_id, kind=END, name=name or elem_id, outcome=outcome))
        elif tag in _TASK_TAGS:
            drivers = _extension_drivers(elem)
            nodes.append(Node(id=elem_id, kind=TASK, name=name or elem_id, drivers=drivers))
        elif tag == "exclusiveGateway":
            nodes.append(Node(id=elem_id, kind=EXCLUSIVE, name=name or elem_id))
        elif tag == "parallelGateway":
            nodes.append(Node(id=elem_id, kind=PARALLEL, name=name or elem_id))
        elif tag == "sequenceFlow":
            source, target = elem.get("sourceRef"), elem.get("targetRef")
            if not source or not target:
                raise ModelError(f"sequence flow {elem_id!r} needs sourceRef and targetRef")
            prob_text = _extension_value(elem, "probability")
            probability = None
            if prob_text is not None:
                try:
                    probability = ExactDecimal.parse(prob_text)
                except ExactDecimalError as exc:
                    raise ModelError(f"flow {elem_id!r}: {exc}") from exc
            flows.append(Flow(id=elem_id, source=source, target=target, probability=probability))
        else:
            raise ModelError(f"unsupported BPMN element: {tag!r} (id {elem_id!r})")

    if annotations is not None:
        nodes, flows = _apply_annotations(nodes, flows, annotations)

    model = ProcessModel(nodes=tuple(nodes), flows=tuple(flows))
    issues = _structure_issues(model) + _probability_issues(model)
    if not issues:
        issues += _termination_issues(model)
        issues += _balance_issues(model)
    if issues:
        raise ModelError("; ".join(issues))
    return model


def _apply_annotations(
    nodes: list[Node], flows: list[Flow], ann: Annotations
) -> tuple[list[Node], list[Flow]]:
    task_names = {n.name for n in nodes if n.kind == TASK}
    for name in ann.task_drivers:
        if name not in task_names:
            raise ModelError(f"annotation references unknown task {name!r}")
    flow_ids = {f.id for f in flows}
    for flow_id in ann.flow_probabilities:
        if flow_id not in flow_ids:
            raise ModelError(f"annotation references unknown flow {flow_id!r}")
    new_nodes = [
        Node(n.id, n.kind, n.name, ann.task_drivers[n.name], n.outcome)
        if n.kind == TASK and n.name in ann.task_drivers
        else n
        for n in nodes
    ]
    new_flows = [
        Flow(f.id, f.source, f.target, ann.flow_probabilities[f.id])
        if f.id in ann.flow_probabilities
        else f
        for f in flows
    ]
    return new_nodes, new_flows


def _extension_elements(elem: ET.Element, local_name: str) -> list[ET.Element]:
    found: list[ET.Element] = []
    for ext in elem:
        if _local(ext.tag) != "extensionElements":
            continue
        for child in ext:
            if child.tag == f"{{{SOPA_NS}}}{local_name}" or child.tag == local_name:
                found.append(child)
    return found


def _extension_drivers(elem: ET.Element) -> tuple[str, ...]:
    drivers: list[str] = []
    for child in _extension_elements(elem, "costDriver"):
        driver_id = child.get("id")
        if not driver_id:
            raise ModelError(f"task {elem.get('id')!r}: costDriver needs an 'id'")
        if driver_id in drivers:
            raise ModelError(f"task {elem.get('id')!r}: duplicate driver {driver_id!r}")
        drivers.append(driver_id)
    return tuple(drivers)


def _extension_value(elem: ET.Element, local_name: str) -> str | None:
    found = _extension_elements(elem, local_name)
    if not found:
        return None
    if len(found) > 1:
        raise ModelError(f"element {elem.get('id')!r}: multiple {local_name!r} annotations")
    value = found[0].get("value")
    if value is None:
        raise ModelError(f"element {elem.get('id')!r}: {local_name!r} needs a 'value'")
    return value


# ---------------------------------------------------------------------------
# structural and semantic checks


def _structure_issues(model: ProcessModel) -> list[str]:
    issues: list[str] = []
    starts = [n for n in model.nodes if n.kind == START]
    ends = [n for n in model.nodes if n.kind == END]
    if len(starts) != 1:
        issues.append(f"model has {len(starts)} start events, expected exactly 1")
    if not ends:
        issues.append("model has no end event")

    for n in model.nodes:
        n_in, n_out = len(model.incoming[n.id]), len(model.outgoing[n.id])
        if n.kind == START and (n_in != 0 or n_out != 1):
            issues.append(f"start event {n.id!r} must have no incoming and one outgoing flow")
        elif n.kind == END and (n_in < 1 or n_out != 0):
            issues.append(f"end event {n.id!r} must have incoming flows and no outgoing flow")
        elif n.kind == TASK and (n_in != 1 or n_out != 1):
            issues.append(f"task {n.name!r} must have exactly one incoming and one outgoing flow")
        elif n.kind in (EXCLUSIVE, PARALLEL):
            splits = n_in == 1 and n_out >= 2
            joins = n_in >= 2 and n_out == 1
            if not (splits or joins):
                issues.append(
                    f"gateway {n.id!r} must either split (1 in, 2+ out) or join (2+ in, 1 out),"
                    f" has {n_in} in / {n_out} out"
                )

    if len(starts) == 1:
        reachable = _reachable_from(model, starts[0].id)
        unreachable = [n.id for n in model.nodes if n.id not in reachable]
        if unreachable:
            issues.append(f"nodes unreachable from the start event: {', '.join(sorted(unreachable))}")
        reaches_end = _reaches_end(model)
        stuck = [n.id for n in model.nodes if n.id in reachable and n.id not in reaches_end]
        if stuck:
            issues.append(f"no end event reachable from: {', '.join(sorted(stuck))}")

    return issues


def _reachable_from(model: ProcessModel, node_id: str) -> set[str]:
    seen = {node_id}
    stack = [node_id]
    while stack:
        for f in model.outgoing.get(stack.pop(), ()):
            if f.target not in seen:
                seen.add(f.target)
                stack.append(f.target)
    return seen


def _reaches_end(model: ProcessModel) -> set[str]:
    seen = {n.id for n in model.nodes if n.kind == END}
    stack = list(seen)
    while stack:
        for f in model.incoming.get(stack.pop(), ()):
            if f.source not in seen:
                seen.add(f.source)
                stack.append(f.source)
    return seen


def _probability_issues(model: ProcessModel) -> list[str]:
    issues: list[str] = []
    for n in model.nodes:
        out = model.outgoing[n.id]
        if n.kind == EXCLUSIVE and len(out) >= 2:
            missing = [f.id for f in out if f.probability is None]
            if missing:
                issues.append(
                    f"exclusive split {n.id!r}: flows without probability: {', '.join(missing)}"
                )
                continue
            total = sum((f.probability.value for f in out), Fraction(0))
            if total != 1:
                issues.append(
                    f"exclusive split {n.id!r}: branch probabilities sum to"
                    f" {_frac_text(total)}, expected exactly 1"
                )
        else:
            stray = [f.id for f in out if f.probability is not None]
            if stray:
                issues.append(
                    f"probability attributes on non-exclusive-split flows: {', '.join(stray)}"
                )
    return issues


def _balance_issues(model: ProcessModel) -> list[str]:
    # in a block-structured model every incoming edge of a parallel join
    # carries the same expected flow; an imbalance means a branch escapes or
    # enters the block
    try:
        flows = edge_flows(model)
    except FlowSystemError:
        return []  # termination is validate()'s concern
    issues = []
    for n in model.nodes:
        if n.kind != PARALLEL or len(model.incoming[n.id]) < 2:
            continue
        values = {flows[f.id] for f in model.incoming[n.id]}
        if len(values) > 1:
            issues.append(
                f"unstructured parallel block: join {n.id!r} receives unequal branch flows"
            )
    end_mass = sum(
        (flows[f.id] for n in model.nodes if n.kind == END for f in model.incoming[n.id]),
        Fraction(0),
    )
    if not issues and end_mass != 1:
        issues.append(
            f"unstructured parallel block: {_frac_text(end_mass)} tokens reach end"
            " events per instance, expected exactly 1"
        )
    return issues


def _termination_issues(model: ProcessModel) -> list[str]:
    try:
        edge_flows(model)
    except FlowSystemError:
        return ["loop cannot terminate: flow equations have no unique solution"]
    return []


def validate(model: ProcessModel, config=None) -> list[str]:
    """All diagnostics for a model, optionally cross-checked against a variant
    configuration. An empty list means the model is ready to simulate."""
    issues = _structure_issues(model)
    issues += _probability_issues(model)
    if not issues:
        issues += _termination_issues(model)
        issues += _balance_issues(model)
    if config is not None:
        for task in model.tasks():
            for driver in task.drivers:
                for variant in config.variants:
                    if driver not in variant.driver_costs:
                        issues.append(
                            f"task {task.name!r}: driver {driver!r} is not concretized"
                            f" by variant {variant.id!r}"
                        )
    return issues


# ---------------------------------------------------------------------------
# exact expected-flow solution


def edge_flows(model: ProcessModel) -> dict[str, Fraction]:
    """Expected traversals of every flow per process instance, solved exactly.

    The start node emits flow 1; exclusive splits scale by branch probability,
    parallel splits copy, exclusive joins sum, and a parallel join forwards
    its first branch's flow (balance across branches is checked separately).
    Raises FlowSystemError when the linear system is singular, which happens
    exactly when some loop has no escaping probability mass.
    """
    flow_ids = [f.id for f in model.flows]
    index = {fid: i for i, fid in enumerate(flow_ids)}
    n = len(flow_ids)
    rows: list[list[Fraction]] = []
    rhs: list[Fraction] = []

    def new_row() -> list[Fraction]:
        return [Fraction(0)] * n

    for node in model.nodes:
        inc = model.incoming[node.id]
        out = model.outgoing[node.id]
        if node.kind == START:
            if len(out) != 1:
                raise FlowSystemError(f"start event {node.id!r} must have one outgoing flow")
            row = new_row()
            row[index[out[0].id]] = Fraction(1)
            rows.append(row)
            rhs.append(Fraction(1))
        elif node.kind == END:
            continue
        elif node.kind == EXCLUSIVE:
            for f in out:
                p = f.probability.value if f.probability is not None else Fraction(1)
                row = new_row()
                row[index[f.id]] = Fraction(1)
                for g in inc:
                    row[index[g.id]] -= p
                rows.append(row)
                rhs.append(Fraction(0))
        elif node.kind == PARALLEL:
            if len(out) == 1 and len(inc) >= 2:
                row = new_row()
                row[index[out[0].id]] = Fraction(1)
                row[index[inc[0].id]] -= Fraction(1)
                rows.append(row)
                rhs.append(Fraction(0))
            else:
                for f in out:
                    row = new_row()
                    row[index[f.id]] = Fraction(1)
                    for g in inc:
                        row[index[g.id]] -= Fraction(1)
                    rows.append(row)
                    rhs.append(Fraction(0))
        else:  # task
            for f in out:
                row = new_row()
                row[index[f.id]] = Fraction(1)
                for g in inc:
                    row[index[g.id]] -= Fraction(1)
                rows.append(row)
                rhs.append(Fraction(0))

    if len(rows) != n:
        raise FlowSystemError(
            f"flow system is not square: {len(rows)} equations for {n} flows"
        )
    solution = _solve_exact(rows, rhs)
    return {fid: solution[index[fid]] for fid in flow_ids}


def _solve_exact(rows: list[list[Fraction]], rhs: list[Fraction]) -> list[Fraction]:
    # Gaussian elimination with exact rationals; partial pivoting on the first
    # non-zero entry keeps it deterministic
    n = len(rows)
    a = [row[:] + [rhs[i]] for i, row in enumerate(rows)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if a[r][col] != 0), None)
        if pivot is None:
            raise FlowSystemError("flow equations are singular (no unique solution)")
        a[col], a[pivot] = a[pivot], a[col]
        inv = 1 / a[col][col]
        a[col] = [x * inv for x in a[col]]
        for r in range(n):
            if r != col and a[r][col] != 0:
                factor = a[r][col]
                a[r] = [x - factor * y for x, y in zip(a[r], a[col])]
    return [a[i][n] for i in range(n)]


def load_model(path, annotations_path=None) -> ProcessModel:
    """Read a model file, applying a sidecar annotation file when given or
    when `<model-stem>.annotations.xml` exists next to the model."""
    import os

    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise ModelError(f"{path}: {exc.strerror or exc}") from exc
    ann = None
    if annotations_path is None:
        stem, _ = os.path.splitext(str(path))
        candidate = stem + ".annotations.xml"
        if os.path.exists(candidate):
            annotations_path = candidate
    if annotations_path is not None:
        try:
            with open(annotations_path, "rb") as fh:
                ann_data = fh.read()
        except OSError as exc:
            raise ModelError(f"{annotations_path}: {exc.strerror or exc}") from exc
        try:
            ann = parse_annotations(ann_data)
        except ModelError as exc:
            raise ModelError(f"{annotations_path}: {exc}") from exc
    try:
        return parse_model(data, ann)
    except ModelError as exc:
        raise ModelError(f"{path}: {exc}") from exc


def _local(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def _frac_text(value: Fraction) -> str:
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"
