"""Cost variant configuration files.

A configuration names the variants a process can run under, the frequency of
each variant, and the concrete impact score each variant assigns to every
abstract cost driver. The XML format:

    <?xml version="1.0" encoding="UTF-8"?>
    <costVariantConfig count="500">
        <variant id="standard procedure" frequency="0.5">
            <driver id="In-house mail" cost="0.0000391"/>
        </variant>
    </costVariantConfig>
"""

from __future__ import annotations

import xml.etree.ElementTree as ET
from dataclasses import dataclass
from fractions import Fraction

from .core import (
    ConcreteCostDriver,
    CostDriverHierarchy,
    ExactDecimal,
    ExactDecimalError,
    SopaError,
)

# exact slack accepted by the tolerant-frequencies mode before renormalizing
FREQUENCY_SLACK = Fraction(1, 10**9)

ONE = Fraction(1)


class VariantConfigError(SopaError, ValueError):
    pass


@dataclass(frozen=True)
class CostVariant:
    id: str
    frequency: ExactDecimal
    driver_costs: dict[str, ExactDecimal]

    def __post_init__(self) -> None:
        if not self.id:
            raise VariantConfigError("variant id must be non-empty")
        if self.frequency.value > 1:
            raise VariantConfigError(
                f"variant {self.id!r}: frequency {self.frequency} is above 1"
            )


@dataclass(frozen=True)
class CostVariantConfig:
    count: int
    variants: tuple[CostVariant, ...]

    def __post_init__(self) -> None:
        if self.count < 1:
            raise VariantConfigError(f"instance count must be positive, got {self.count}")
        if not self.variants:
            raise VariantConfigError("configuration declares no variants")
        ids = [v.id for v in self.variants]
        if len(set(ids)) != len(ids):
            raise VariantConfigError("duplicate variant id in configuration")

    def variant(self, variant_id: str) -> CostVariant:
        for v in self.variants:
            if v.id == variant_id:
                return v
        raise VariantConfigError(f"unknown variant: {variant_id!r}")

    def has_variant(self, variant_id: str) -> bool:
        return any(v.id == variant_id for v in self.variants)


def parse_variant_config(data: bytes | str, *, tolerant_frequencies: bool = False) -> CostVariantConfig:
    """Parse configuration XML.

    Frequencies must sum to exactly 1 after exact-rational parsing. With
    ``tolerant_frequencies`` a deviation of at most 1e-9 is renormalized away;
    anything larger is an error either way.
    """
    try:
        root = ET.fromstring(data)
    except ET.ParseError as exc:
        raise VariantConfigError(f"malformed XML: {exc}") from exc
    if _local(root.tag) != "costVariantConfig":
        raise VariantConfigError(
            f"expected root element 'costVariantConfig', got {_local(root.tag)!r}"
        )
    count_text = root.get("count")
    if count_text is None:
        raise VariantConfigError("costVariantConfig is missing the 'count' attribute")
    try:
        count = int(count_text)
    except ValueError:
        raise VariantConfigError(f"count must be an integer, got {count_text!r}") from None

    variants: list[CostVariant] = []
    for elem in root:
        if _local(elem.tag) != "variant":
            raise VariantConfigError(f"unexpected element {_local(elem.tag)!r} under costVariantConfig")
        variants.append(_parse_variant(elem))

    config = CostVariantConfig(count=count, variants=tuple(variants))
    total = sum((v.frequency.value for v in config.variants), Fraction(0))
    if total != ONE:
        if tolerant_frequencies and abs(total - ONE) <= FREQUENCY_SLACK:
            rebalanced = tuple(
                CostVariant(v.id, ExactDecimal(v.frequency.value / total), v.driver_costs)
                for v in config.variants
            )
            return CostVariantConfig(count=count, variants=rebalanced)
        raise VariantConfigError(
            f"variant frequencies sum to {_frac_text(total)}, expected exactly 1"
        )
    return config


def _parse_variant(elem: ET.Element) -> CostVariant:
    variant_id = elem.get("id")
    if not variant_id:
        raise VariantConfigError("variant is missing the 'id' attribute")
    freq_text = elem.get("frequency")
    if freq_text is None:
        raise VariantConfigError(f"variant {variant_id!r} is missing the 'frequency' attribute")
    try:
        frequency = ExactDecimal.parse(freq_text)
    except ExactDecimalError as exc:
        raise VariantConfigError(f"variant {variant_id!r}: {exc}") from exc

    costs: dict[str, ExactDecimal] = {}
    for child in elem:
        if _local(child.tag) != "driver":
            raise VariantConfigError(
                f"unexpected element {_local(child.tag)!r} under variant {variant_id!r}"
            )
        driver_id = child.get("id")
        if not driver_id:
            raise VariantConfigError(f"variant {variant_id!r}: driver is missing the 'id' attribute")
        if driver_id in costs:
            raise VariantConfigError(f"variant {variant_id!r}: duplicate driver {driver_id!r}")
        cost_text = child.get("cost")
        if cost_text is None:
            raise VariantConfigError(
                f"variant {variant_id!r}: driver {driver_id!r} is missing the 'cost' attribute"
            )
        try:
            costs[driver_id] = ExactDecimal.parse(cost_text)
        except ExactDecimalError as exc:
            raise VariantConfigError(
                f"variant {variant_id!r}, driver {driver_id!r}: {exc}"
            ) from exc
    return CostVariant(id=variant_id, frequency=frequency, driver_costs=costs)


def serialize_variant_config(config: CostVariantConfig) -> bytes:
    """Canonical XML serialization; parse(serialize(config)) == config."""
    lines = ['<?xml version="1.0" encoding="UTF-8"?>']
    lines.append(f'<costVariantConfig count="{config.count}">')
    for v in config.variants:
        lines.append(
            f'    <variant id={_attr(v.id)} frequency={_attr(v.frequency.canonical())}>'
        )
        for driver_id, cost in v.driver_costs.items():
            lines.append(
                f'        <driver id={_attr(driver_id)} cost={_attr(cost.canonical())}/>'
            )
        lines.append("    </variant>")
    lines.append("</costVariantConfig>")
    lines.append("")
    return "\n".join(lines).encode("utf-8")


def cost_function(config: CostVariantConfig, variant_id: str, driver_id: str) -> ExactDecimal:
    """The concrete score a variant assigns to an abstract driver."""
    variant = config.variant(variant_id)
    if driver_id not in variant.driver_costs:
        raise VariantConfigError(
            f"driver {driver_id!r} is not concretized by variant {variant_id!r}"
        )
    return variant.driver_costs[driver_id]


def hierarchy(config: CostVariantConfig) -> CostDriverHierarchy:
    """Derive the driver hierarchy implied by a configuration: one concrete
    driver per (abstract driver, variant) pair."""
    concrete = tuple(
        ConcreteCostDriver(id=f"{driver_id} [{v.id}]", parent=driver_id, cost=cost)
        for v in config.variants
        for driver_id, cost in v.driver_costs.items()
    )
    return CostDriverHierarchy(concrete)


def load_variant_config(path, *, tolerant_frequencies: bool = False) -> CostVariantConfig:
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise VariantConfigError(f"{path}: {exc.strerror or exc}") from exc
    try:
        return parse_variant_config(data, tolerant_frequencies=tolerant_frequencies)
    except VariantConfigError as exc:
        raise VariantConfigError(f"{path}: {exc}") from exc


def _local(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def _attr(value: str) -> str:
    escaped = (
        value.replace("&", "&amp;")
        .replace("<", "&lt;")
        .replace('"', "&quot;")
    )
    return f'"{escaped}"'


def _frac_text(value: Fraction) -> str:
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"
