"""sopa: quantify the environmental cost of business processes.

The toolkit connects four pieces:

  * cost variant configs: XML files scoring abstract cost drivers per variant
  * annotated process models: a BPMN subset whose tasks carry driver lists and
    whose exclusive gateways carry outgoing probabilities
  * XES event logs: simulated or imported, with per-trace variants and
    per-event drivers
  * exact cost arithmetic: every aggregate is a rational number, so results
    never depend on summation order

Typical round trip: load a model and a config, simulate() into a log,
analyze() the log into a CostReport, compare() two reports, and check either
one against the analytic oracle in sopa.oracle.
"""

from .core import (
    ActivityInstance,
    ConcreteCostDriver,
    CostDriverHierarchy,
    EventLog,
    ExactDecimal,
    ExactDecimalError,
    ProcessInstance,
    SopaError,
    parse_exact_decimal,
    sum_exact,
)
from .costing import (
    ActivityRow,
    CostReport,
    CostingError,
    VariantTally,
    activity_instance_cost,
    analyze,
    average_activity_cost,
    average_process_instance_cost,
    load_report,
    process_instance_cost,
    save_report,
)
from .model import (
    SOPA_NS,
    Annotations,
    Flow,
    FlowSystemError,
    ModelError,
    Node,
    ProcessModel,
    edge_flows,
    load_model,
    parse_annotations,
    parse_model,
    validate,
)
from .oracle import (
    OracleError,
    enumerate_expected_executions,
    expected_activity_executions,
    expected_average_activity_cost,
    expected_process_cost,
)
from .report import (
    ComparisonReport,
    ComparisonRow,
    ReportError,
    compare,
    format_percent,
    format_signed_exact,
    render,
)
from .simulate import (
    DEFAULT_BASE_TIMESTAMP,
    EXACT_QUOTA,
    SAMPLED,
    SimulationError,
    SimulationSettings,
    derive_instance_rng,
    simulate,
    simulate_stream,
)
from .variants import (
    CostVariant,
    CostVariantConfig,
    VariantConfigError,
    cost_function,
    hierarchy,
    load_variant_config,
    parse_variant_config,
    serialize_variant_config,
)
from .xes import (
    COST_EXTENSION_URI,
    XesError,
    XesWarning,
    load_xes,
    parse_xes,
    write_xes,
    write_xes_stream,
)

__version__ = "0.1.0"

__all__ = [
    "ActivityInstance",
    "ActivityRow",
    "Annotations",
    "COST_EXTENSION_URI",
    "ComparisonReport",
    "ComparisonRow",
    "ConcreteCostDriver",
    "CostDriverHierarchy",
    "CostReport",
    "CostVariant",
    "CostVariantConfig",
    "CostingError",
    "DEFAULT_BASE_TIMESTAMP",
    "EXACT_QUOTA",
    "EventLog",
    "ExactDecimal",
    "ExactDecimalError",
    "Flow",
    "FlowSystemError",
    "ModelError",
    "Node",
    "OracleError",
    "ProcessInstance",
    "ProcessModel",
    "ReportError",
    "SAMPLED",
    "SOPA_NS",
    "SimulationError",
    "SimulationSettings",
    "SopaError",
    "VariantConfigError",
    "VariantTally",
    "XesError",
    "XesWarning",
    "activity_instance_cost",
    "analyze",
    "average_activity_cost",
    "average_process_instance_cost",
    "compare",
    "cost_function",
    "derive_instance_rng",
    "edge_flows",
    "enumerate_expected_executions",
    "expected_activity_executions",
    "expected_average_activity_cost",
    "expected_process_cost",
    "format_percent",
    "format_signed_exact",
    "hierarchy",
    "load_model",
    "load_report",
    "load_variant_config",
    "load_xes",
    "parse_annotations",
    "parse_exact_decimal",
    "parse_model",
    "parse_variant_config",
    "parse_xes",
    "process_instance_cost",
    "render",
    "save_report",
    "serialize_variant_config",
    "simulate",
    "simulate_stream",
    "sum_exact",
    "validate",
    "write_xes",
    "write_xes_stream",
]
