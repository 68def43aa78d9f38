"""
Cost calculus by hand
=====================

Builds a three-trace event log inline and walks through every aggregate
the toolkit computes, checking each one against pencil-and-paper values.
All arithmetic is exact: costs are rationals, never floats.
"""

from datetime import datetime, timezone

from sopa import (
    ActivityInstance,
    EventLog,
    ProcessInstance,
    activity_instance_cost,
    analyze,
    average_activity_cost,
    average_process_instance_cost,
    parse_exact_decimal,
    process_instance_cost,
)

T0 = datetime(2026, 7, 17, 15, 35, 28, tzinfo=timezone.utc)

# A flat cost table: driver id -> cost score. Plain dicts work anywhere a
# variant config does, which keeps small experiments free of XML.
costs = {
    "electricity": parse_exact_decimal("0.0000356"),
    "paper": parse_exact_decimal("0.0000363"),
    "travel": parse_exact_decimal("0.000035"),
    "shipping": parse_exact_decimal("0.0000605"),
    "disposal": parse_exact_decimal("0.0000537"),
}


def inst(activity, *drivers):
    return ActivityInstance(activity, drivers, T0, T0)


# Trace 1: activity "a" consumes two drivers, "b" one.
t1 = ProcessInstance("1", None, (inst("a", "electricity", "paper"), inst("b", "travel")))
# Trace 2: "a" twice (paper only), then "c".
t2 = ProcessInstance("2", None, (inst("a", "paper"), inst("a", "paper"), inst("c", "shipping")))
# Trace 3: "a" once more, then "d".
t3 = ProcessInstance("3", None, (inst("a", "paper"), inst("d", "disposal")))

log = EventLog((t1, t2, t3))

# Cost of one activity instance: sum of its drivers' scores.
first_a = t1.instances[0]
print("cost(a in trace 1) =", activity_instance_cost(first_a, costs).value)
assert activity_instance_cost(first_a, costs) == parse_exact_decimal("0.0000719")

# Cost of a whole trace: sum over its activity instances.
print("cost(trace 1)      =", process_instance_cost(t1, costs).value)
assert process_instance_cost(t1, costs) == parse_exact_decimal("0.0001069")

# Average cost of activity "a" across the log: four instances total.
avg_a = average_activity_cost("a", log, costs)
print("avg cost of a      =", avg_a.value)
assert avg_a == parse_exact_decimal("0.0000452")  # (719+363+363+363)/4 * 1e-7

# Average cost of a process instance across the log.
avg_p = average_process_instance_cost(log, costs)
print("avg process cost   =", avg_p.value)
assert avg_p == parse_exact_decimal("0.00011")

# analyze() packages the same numbers into a report object.
report = analyze(log, costs, scenario="worked example")
assert report.activity("a").average_cost == avg_a
assert report.average_process_instance_cost == avg_p

# Decomposition identity: the average trace cost equals the sum over
# activities of (average activity cost) * (occurrences per trace).
# Exact rationals make this an equality, not an approximation.
total = sum(
    (row.average_cost.value * row.occurrences for row in report.per_activity),
    start=parse_exact_decimal("0").value,
)
assert total / report.trace_count == avg_p.value
print("decomposition identity holds exactly")
