"""Scenario comparison and deterministic rendering.

compare() takes two cost reports and produces exact relative differences per
activity and for the process instance average. render() serializes reports
and comparisons to json, csv, markdown tables, or a self-contained SVG bar
chart. Every renderer is byte-deterministic: equal inputs, equal text.

Percentages are truncated toward zero at two decimals, so -23.229 prints as
-23.22%, never -23.23%.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
import json
from typing import Sequence

from .core import ExactDecimal, SopaError
from .costing import CostReport

UNDEFINED_MARKER = "undefined (division by zero)"
AVERAGE_ROW_NAME = "average process instance cost"


class ReportError(SopaError, ValueError):
    pass


@dataclass(frozen=True)
class ComparisonRow:
    name: str
    baseline: ExactDecimal | None
    candidate: ExactDecimal | None
    ratio_delta: Fraction | None
    marker: str = ""

    @property
    def percent(self) -> str:
        if self.ratio_delta is None:
            return self.marker
        return format_percent(self.ratio_delta)


@dataclass(frozen=True)
class ComparisonReport:
    baseline_label: str
    candidate_label: str
    rows: tuple[ComparisonRow, ...]
    average_row: ComparisonRow

    def row(self, name: str) -> ComparisonRow:
        for r in self.rows:
            if r.name == name:
                return r
        raise ReportError(f"no activity named {name!r} in the comparison")

    def to_json_dict(self) -> dict:
        return {
            "baseline": self.baseline_label,
            "candidate": self.candidate_label,
            "perActivity": [_row_json(r, with_name=True) for r in self.rows],
            "averageProcessInstanceCost": _row_json(self.average_row, with_name=False),
        }


def compare(baseline: CostReport, candidate: CostReport) -> ComparisonReport:
    """Exact relative change per activity, candidate versus baseline.

    A zero baseline with a nonzero candidate has no finite relative change
    and is marked rather than computed; activities present on one side only
    are marked likewise.
    """
    base_rows = {r.name: r for r in baseline.per_activity}
    cand_rows = {r.name: r for r in candidate.per_activity}
    rows: list[ComparisonRow] = []
    for name in sorted(set(base_rows) | set(cand_rows)):
        b = base_rows.get(name)
        c = cand_rows.get(name)
        if b is None:
            rows.append(ComparisonRow(name, None, c.average_cost, None, "only in candidate"))
        elif c is None:
            rows.append(ComparisonRow(name, b.average_cost, None, None, "only in baseline"))
        else:
            delta, marker = _relative_difference(b.average_cost, c.average_cost)
            rows.append(ComparisonRow(name, b.average_cost, c.average_cost, delta, marker))
    avg_delta, avg_marker = _relative_difference(
        baseline.average_process_instance_cost, candidate.average_process_instance_cost
    )
    average = ComparisonRow(
        AVERAGE_ROW_NAME,
        baseline.average_process_instance_cost,
        candidate.average_process_instance_cost,
        avg_delta,
        avg_marker,
    )
    return ComparisonReport(
        baseline_label=baseline.scenario or "baseline",
        candidate_label=candidate.scenario or "candidate",
        rows=tuple(rows),
        average_row=average,
    )


def _relative_difference(
    base: ExactDecimal, cand: ExactDecimal
) -> tuple[Fraction | None, str]:
    if base.value == 0:
        if cand.value == 0:
            return Fraction(0), ""
        return None, UNDEFINED_MARKER
    return (cand.value - base.value) / base.value, ""


def format_percent(delta: Fraction) -> str:
    """Render a ratio as a percentage, truncating toward zero at two
    decimals. -0.50184 becomes -50.18%, 0 becomes 0.00%."""
    scaled = delta * 10000
    units = abs(scaled.numerator) // scaled.denominator
    sign = "-" if delta < 0 and units else ""
    return f"{sign}{units // 100}.{units % 100:02d}%"


def format_signed_exact(value: Fraction) -> str:
    """Exact canonical text for a possibly negative rational."""
    magnitude = ExactDecimal(abs(value)).canonical()
    return f"-{magnitude}" if value < 0 else magnitude


def _row_json(row: ComparisonRow, *, with_name: bool) -> dict:
    data: dict = {}
    if with_name:
        data["name"] = row.name
    data["baselineAverageCost"] = None if row.baseline is None else row.baseline.canonical()
    data["candidateAverageCost"] = None if row.candidate is None else row.candidate.canonical()
    data["relativeDifference"] = (
        None if row.ratio_delta is None else format_signed_exact(row.ratio_delta)
    )
    data["percent"] = row.percent
    return data


# ---------------------------------------------------------------------------
# rendering

_FORMATS = ("json", "csv", "markdown-table", "svg-bar")
_PALETTE = ("#4a90d9", "#e0a030", "#58a55c", "#b05ac2", "#d9574a", "#4ac2b0")

# fixed chart geometry, pixels
_CHART_WIDTH = 900
_LABEL_COLUMN = 360
_BAR_MAX = 480
_ROW_HEIGHT = 22
_BAR_HEIGHT = 14
_HEADER_HEIGHT = 40


def render(obj, fmt: str) -> str:
    """Serialize a cost report, a comparison, or a sequence of cost reports.

    Formats: json, csv, markdown-table, svg-bar. Markdown and SVG labels are
    rounded to three significant digits; json and csv carry exact values.
    """
    if fmt not in _FORMATS:
        raise ReportError(f"unknown format {fmt!r}; expected one of {', '.join(_FORMATS)}")
    if isinstance(obj, CostReport):
        reports = [obj]
    elif isinstance(obj, ComparisonReport):
        return _render_comparison(obj, fmt)
    elif isinstance(obj, Sequence) and obj and all(isinstance(r, CostReport) for r in obj):
        reports = list(obj)
    else:
        raise ReportError("render() expects a CostReport, a ComparisonReport, "
                          "or a non-empty sequence of CostReports")
    if len(reports) == 1:
        return _render_single(reports[0], fmt)
    return _render_many(reports, fmt)


def _sig(value: ExactDecimal | None) -> str:
    if value is None:
        return "-"
    return f"{float(value.value):.2e}"


def _label(report: CostReport, index: int) -> str:
    return report.scenario or f"scenario {index + 1}"


def _csv_cell(text: str) -> str:
    if any(ch in text for ch in ',"\n'):
        return '"' + text.replace('"', '""') + '"'
    return text


def _render_single(report: CostReport, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(report.to_json_dict(), indent=2) + "\n"
    if fmt == "csv":
        lines = ["activity,averageCost,occurrences"]
        for row in report.per_activity:
            lines.append(
                f"{_csv_cell(row.name)},{row.average_cost.canonical()},{row.occurrences}"
            )
        lines.append(
            f"{_csv_cell(AVERAGE_ROW_NAME)},"
            f"{report.average_process_instance_cost.canonical()},{report.trace_count}"
        )
        return "\n".join(lines) + "\n"
    if fmt == "markdown-table":
        title = report.scenario or "cost report"
        lines = [
            f"# {title}",
            "",
            "| activity | average cost | occurrences |",
            "| --- | --- | --- |",
        ]
        for row in report.per_activity:
            lines.append(f"| {row.name} | {_sig(row.average_cost)} | {row.occurrences} |")
        lines.append(
            f"| **{AVERAGE_ROW_NAME}** | **{_sig(report.average_process_instance_cost)}** "
            f"| {report.trace_count} |"
        )
        return "\n".join(lines) + "\n"
    return _render_bars(
        title=report.scenario or "cost report",
        names=[row.name for row in report.per_activity],
        series=[(None, [row.average_cost for row in report.per_activity])],
    )


def _render_many(reports: list[CostReport], fmt: str) -> str:
    labels = [_label(r, i) for i, r in enumerate(reports)]
    names = sorted({row.name for r in reports for row in r.per_activity})
    tables = [{row.name: row for row in r.per_activity} for r in reports]
    if fmt == "json":
        return json.dumps([r.to_json_dict() for r in reports], indent=2) + "\n"
    if fmt == "csv":
        lines = ["activity," + ",".join(_csv_cell(l) for l in labels)]
        for name in names:
            cells = [
                t[name].average_cost.canonical() if name in t else "" for t in tables
            ]
            lines.append(f"{_csv_cell(name)}," + ",".join(cells))
        lines.append(
            f"{_csv_cell(AVERAGE_ROW_NAME)},"
            + ",".join(r.average_process_instance_cost.canonical() for r in reports)
        )
        return "\n".join(lines) + "\n"
    if fmt == "markdown-table":
        header = "| activity | " + " | ".join(labels) + " |"
        rule = "| --- |" + " --- |" * len(labels)
        lines = ["# scenario costs", "", header, rule]
        for name in names:
            cells = [_sig(t[name].average_cost) if name in t else "-" for t in tables]
            lines.append(f"| {name} | " + " | ".join(cells) + " |")
        lines.append(
            f"| **{AVERAGE_ROW_NAME}** | "
            + " | ".join(f"**{_sig(r.average_process_instance_cost)}**" for r in reports)
            + " |"
        )
        return "\n".join(lines) + "\n"
    series = [
        (
            labels[i],
            [tables[i][name].average_cost if name in tables[i] else None for name in names],
        )
        for i in range(len(reports))
    ]
    return _render_bars(title="scenario costs", names=names, series=series)


def _render_comparison(cmp: ComparisonReport, fmt: str) -> str:
    all_rows = list(cmp.rows) + [cmp.average_row]
    if fmt == "json":
        return json.dumps(cmp.to_json_dict(), indent=2) + "\n"
    if fmt == "csv":
        lines = ["activity,baselineAverageCost,candidateAverageCost,relativeDifference,percent"]
        for row in all_rows:
            base = "" if row.baseline is None else row.baseline.canonical()
            cand = "" if row.candidate is None else row.candidate.canonical()
            rel = "" if row.ratio_delta is None else format_signed_exact(row.ratio_delta)
            lines.append(
                f"{_csv_cell(row.name)},{base},{cand},{rel},{_csv_cell(row.percent)}"
            )
        return "\n".join(lines) + "\n"
    if fmt == "markdown-table":
        lines = [
            f"# {cmp.baseline_label} vs {cmp.candidate_label}",
            "",
            f"| activity | {cmp.baseline_label} | {cmp.candidate_label} | change |",
            "| --- | --- | --- | --- |",
        ]
        for row in cmp.rows:
            lines.append(
                f"| {row.name} | {_sig(row.baseline)} | {_sig(row.candidate)} "
                f"| {row.percent} |"
            )
        avg = cmp.average_row
        lines.append(
            f"| **{avg.name}** | **{_sig(avg.baseline)}** | **{_sig(avg.candidate)}** "
            f"| **{avg.percent}** |"
        )
        return "\n".join(lines) + "\n"
    names = [row.name for row in all_rows]
    series = [
        (cmp.baseline_label, [row.baseline for row in all_rows]),
        (cmp.candidate_label, [row.candidate for row in all_rows]),
    ]
    return _render_bars(
        title=f"{cmp.baseline_label} vs {cmp.candidate_label}", names=names, series=series
    )


def _render_bars(
    title: str,
    names: list[str],
    series: list[tuple[str | None, list[ExactDecimal | None]]],
) -> str:
    per_name = len(series) * (_BAR_HEIGHT + 2) + 6
    block = max(per_name, _ROW_HEIGHT)
    height = _HEADER_HEIGHT + block * len(names) + 10
    peak = max(
        (float(v.value) for _, values in series for v in values if v is not None),
        default=0.0,
    )
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_CHART_WIDTH}" '
        f'height="{height}" viewBox="0 0 {_CHART_WIDTH} {height}" '
        'font-family="sans-serif" font-size="12">',
        f'<rect width="{_CHART_WIDTH}" height="{height}" fill="#ffffff"/>',
        f'<text x="8" y="20" font-size="15" font-weight="bold">{_svg_escape(title)}</text>',
    ]
    legend_x = _LABEL_COLUMN + 10
    if len(series) > 1:
        for i, (label, _) in enumerate(series):
            color = _PALETTE[i % len(_PALETTE)]
            lines.append(f'<rect x="{legend_x}" y="10" width="10" height="10" fill="{color}"/>')
            lines.append(f'<text x="{legend_x + 14}" y="20">{_svg_escape(label or "")}</text>')
            legend_x += 14 + 8 * max(4, len(label or "")) + 16
    y = _HEADER_HEIGHT
    for row_index, name in enumerate(names):
        text_y = y + block // 2 + 4
        lines.append(f'<text x="8" y="{text_y}">{_svg_escape(name)}</text>')
        bar_y = y + 3
        for i, (_, values) in enumerate(series):
            value = values[row_index]
            color = _PALETTE[i % len(_PALETTE)]
            if value is not None:
                width = 0.0 if peak == 0.0 else float(value.value) / peak * _BAR_MAX
                lines.append(
                    f'<rect x="{_LABEL_COLUMN + 10}" y="{bar_y}" width="{width:.2f}" '
                    f'height="{_BAR_HEIGHT}" fill="{color}"/>'
                )
                lines.append(
                    f'<text x="{_LABEL_COLUMN + 16 + width:.2f}" y="{bar_y + 11}">'
                    f"{_sig(value)}</text>"
                )
            else:
                lines.append(f'<text x="{_LABEL_COLUMN + 10}" y="{bar_y + 11}">-</text>')
            bar_y += _BAR_HEIGHT + 2
        y += block
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def _svg_escape(text: str) -> str:
    return (
        text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
    )
