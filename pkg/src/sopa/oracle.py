"""Analytic expectations for annotated process models.

Solves the exact edge-flow system once, then folds expected execution counts
with the variant mix to predict per-activity and per-instance average costs
without simulating a single trace. A brute-force path enumerator over small
acyclic models provides an independent cross-check that shares the token
semantics of the simulator but none of its code.
"""

from __future__ import annotations

from collections import deque
from fractions import Fraction

from .core import ExactDecimal, SopaError
from .model import END, EXCLUSIVE, PARALLEL, START, TASK, ProcessModel, edge_flows
from .variants import CostVariantConfig


class OracleError(SopaError, ValueError):
    pass


def expected_activity_executions(model: ProcessModel) -> dict[str, Fraction]:
    """Expected number of times each logged activity runs per trace.

    Start, task, and end nodes all produce log events, so all three count.
    Nodes sharing a name pool their flow mass.
    """
    flows = edge_flows(model)
    totals: dict[str, Fraction] = {}
    for node in model.nodes:
        if node.kind == START:
            mass = Fraction(1)
        elif node.kind in (TASK, END):
            mass = sum((flows[f.id] for f in model.incoming[node.id]), Fraction(0))
        else:
            continue
        totals[node.name] = totals.get(node.name, Fraction(0)) + mass
    return totals


def expected_average_activity_cost(
    model: ProcessModel, config: CostVariantConfig
) -> dict[str, ExactDecimal]:
    """Expected cost of one execution of each activity, averaged over the
    variant mix and, for names shared by several nodes, over the nodes
    weighted by their flow mass."""
    flows = edge_flows(model)
    mixes = _node_mixes(model, config)
    numerators: dict[str, Fraction] = {}
    denominators: dict[str, Fraction] = {}
    unweighted: dict[str, list[Fraction]] = {}
    for node in model.nodes:
        if node.kind == START:
            mass = Fraction(1)
        elif node.kind in (TASK, END):
            mass = sum((flows[f.id] for f in model.incoming[node.id]), Fraction(0))
        else:
            continue
        mix = mixes.get(node.id, Fraction(0))
        numerators[node.name] = numerators.get(node.name, Fraction(0)) + mass * mix
        denominators[node.name] = denominators.get(node.name, Fraction(0)) + mass
        unweighted.setdefault(node.name, []).append(mix)
    out: dict[str, ExactDecimal] = {}
    for name, denom in denominators.items():
        if denom:
            out[name] = ExactDecimal(numerators[name] / denom)
        else:
            # never executed: report the plain mean over its nodes
            nodes = unweighted[name]
            out[name] = ExactDecimal(sum(nodes, Fraction(0)) / len(nodes))
    return out


def expected_process_cost(model: ProcessModel, config: CostVariantConfig) -> ExactDecimal:
    """Expected total cost of one trace: flow mass times variant-mixed cost,
    summed over every task node."""
    flows = edge_flows(model)
    mixes = _node_mixes(model, config)
    total = Fraction(0)
    for node in model.nodes:
        if node.kind != TASK:
            continue
        mass = sum((flows[f.id] for f in model.incoming[node.id]), Fraction(0))
        total += mass * mixes[node.id]
    return ExactDecimal(total)


def _node_mixes(model: ProcessModel, config: CostVariantConfig) -> dict[str, Fraction]:
    """Variant-frequency-weighted cost of one execution, per task node id."""
    mixes: dict[str, Fraction] = {}
    for node in model.nodes:
        if node.kind != TASK:
            continue
        mix = Fraction(0)
        for variant in config.variants:
            for driver in node.drivers:
                if driver not in variant.driver_costs:
                    raise OracleError(
                        f"task {node.name!r}: driver {driver!r} has no cost in "
                        f"variant {variant.id!r}"
                    )
                mix += variant.frequency.value * variant.driver_costs[driver].value
        mixes[node.id] = mix
    return mixes


# ---------------------------------------------------------------------------
# independent cross-check


def enumerate_expected_executions(
    model: ProcessModel, *, node_limit: int = 12
) -> dict[str, Fraction]:
    """Exhaustively walk every exclusive-choice resolution of an acyclic
    model, accumulating probability-weighted activity counts.

    Token handling deliberately mirrors the simulator: a FIFO queue, parallel
    splits fanning out, joins firing once every incoming flow has delivered.
    Exponential in the number of choices, hence the node limit.
    """
    if len(model.nodes) > node_limit:
        raise OracleError(
            f"model has {len(model.nodes)} nodes, enumeration is capped at {node_limit}"
        )
    if _has_cycle(model):
        raise OracleError("model has cycles; enumeration only handles acyclic models")

    totals: dict[str, Fraction] = {}
    start = model.start_node()

    def walk(queue: deque, arrivals: dict[str, dict], weight: Fraction, counts: dict[str, int]):
        while queue:
            node_id, via = queue.popleft()
            node = model.by_id[node_id]
            out = model.outgoing[node_id]
            if node.kind in (START, TASK):
                counts[node.name] = counts.get(node.name, 0) + 1
                queue.append((out[0].target, out[0].id))
            elif node.kind == END:
                counts[node.name] = counts.get(node.name, 0) + 1
            elif node.kind == EXCLUSIVE:
                if len(out) >= 2:
                    for flow in out:
                        branch = deque(queue)
                        branch.append((flow.target, flow.id))
                        walk(
                            branch,
                            {k: dict(v) for k, v in arrivals.items()},
                            weight * flow.probability.value,
                            dict(counts),
                        )
                    return
                queue.append((out[0].target, out[0].id))
            elif len(out) >= 2:  # parallel split
                queue.extend((f.target, f.id) for f in out)
            else:  # parallel join
                table = arrivals.get(node_id)
                if table is None:
                    table = dict.fromkeys((f.id for f in model.incoming[node_id]), 0)
                    arrivals[node_id] = table
                table[via] += 1
                if all(table.values()):
                    for k in table:
                        table[k] -= 1
                    queue.append((out[0].target, out[0].id))
        for name, count in counts.items():
            totals[name] = totals.get(name, Fraction(0)) + weight * count

    walk(deque([(start.id, None)]), {}, Fraction(1), {})
    return totals


def _has_cycle(model: ProcessModel) -> bool:
    WHITE, GRAY, BLACK = 0, 1, 2
    color = {n.id: WHITE for n in model.nodes}

    def visit(node_id: str) -> bool:
        color[node_id] = GRAY
        for flow in model.outgoing[node_id]:
            state = color[flow.target]
            if state == GRAY:
                return True
            if state == WHITE and visit(flow.target):
                return True
        color[node_id] = BLACK
        return False

    return any(visit(n.id) for n in model.nodes if color[n.id] == WHITE)
