"""Domain types and exact decimal arithmetic shared by all other modules.

Cost values are exact rationals, never binary floats. Aggregation is therefore
order-independent, and any value parsed from decimal text can be re-serialized
without loss.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from datetime import datetime
from fractions import Fraction


class SopaError(Exception):
    """Base class for all errors raised by this package."""


class ExactDecimalError(SopaError, ValueError):
    pass


# plain decimal or scientific notation, non-negative
_DECIMAL_RE = re.compile(r"^\+?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?$")
# fallback rational form produced by canonical() for non-decimal denominators
_RATIO_RE = re.compile(r"^\+?\d+/\d+$")


@dataclass(frozen=True, slots=True, order=True)
class ExactDecimal:
    """A non-negative arbitrary-precision rational parsed from decimal text.

    Accepts plain decimals ("0.0000391"), scientific notation ("3.91e-5"),
    integers ("500"), and the "p/q" form emitted by canonical() for values
    whose denominator is not a product of twos and fives.
    """

    value: Fraction

    def __post_init__(self) -> None:
        if not isinstance(self.value, Fraction):
            object.__setattr__(self, "value", Fraction(self.value))
        if self.value < 0:
            raise ExactDecimalError(f"cost values must be non-negative, got {self.value}")

    @classmethod
    def parse(cls, text: str) -> "ExactDecimal":
        if not isinstance(text, str):
            raise ExactDecimalError(f"expected decimal text, got {type(text).__name__}")
        stripped = text.strip()
        if not (_DECIMAL_RE.match(stripped) or _RATIO_RE.match(stripped)):
            raise ExactDecimalError(f"malformed decimal value: {text!r}")
        try:
            return cls(Fraction(stripped))
        except ZeroDivisionError:
            raise ExactDecimalError(f"zero denominator: {text!r}") from None

    @classmethod
    def zero(cls) -> "ExactDecimal":
        return cls(Fraction(0))

    def canonical(self) -> str:
        """Shortest exact representation.

        Values with a denominator of the form 2^a * 5^b print as plain
        decimals ("0.0000391"); anything else prints as "p/q" so that
        parse(canonical(x)) == x always holds.
        """
        f = self.value
        if f == 0:
            return "0"
        rest = f.denominator
        twos = 0
        while rest % 2 == 0:
            rest //= 2
            twos += 1
        fives = 0
        while rest % 5 == 0:
            rest //= 5
            fives += 1
        if rest != 1:
            return f"{f.numerator}/{f.denominator}"
        places = max(twos, fives)
        digits = str(f.numerator * 10**places // f.denominator)
        if places == 0:
            return digits
        digits = digits.rjust(places + 1, "0")
        whole, frac = digits[:-places], digits[-places:]
        frac = frac.rstrip("0")
        return whole if not frac else f"{whole}.{frac}"

    def __str__(self) -> str:
        return self.canonical()

    def __add__(self, other: "ExactDecimal") -> "ExactDecimal":
        if not isinstance(other, ExactDecimal):
            return NotImplemented
        return ExactDecimal(self.value + other.value)

    def __mul__(self, other: "int | Fraction | ExactDecimal") -> "ExactDecimal":
        scalar = other.value if isinstance(other, ExactDecimal) else Fraction(other)
        if scalar < 0:
            raise ExactDecimalError("cannot scale a cost by a negative factor")
        return ExactDecimal(self.value * scalar)

    __rmul__ = __mul__

    def __truediv__(self, other: "int | Fraction | ExactDecimal") -> "ExactDecimal":
        scalar = other.value if isinstance(other, ExactDecimal) else Fraction(other)
        if scalar <= 0:
            raise ExactDecimalError("division requires a positive divisor")
        return ExactDecimal(self.value / scalar)

    def __bool__(self) -> bool:
        return self.value != 0


def parse_exact_decimal(text: str) -> ExactDecimal:
    return ExactDecimal.parse(text)


def sum_exact(values) -> ExactDecimal:
    total = Fraction(0)
    for v in values:
        total += v.value
    return ExactDecimal(total)


@dataclass(frozen=True, slots=True)
class ConcreteCostDriver:
    """A concrete realization of an abstract driver with a fixed impact score."""

    id: str
    parent: str
    cost: ExactDecimal

    def __post_init__(self) -> None:
        if not self.id or not self.parent:
            raise SopaError("concrete cost driver needs a non-empty id and parent")


@dataclass(frozen=True, slots=True)
class CostDriverHierarchy:
    """Which concrete drivers may concretize which abstract driver.

    Each concrete driver has exactly one abstract parent; an abstract driver
    must own at least one concrete driver to be usable.
    """

    drivers: tuple[ConcreteCostDriver, ...]

    def __post_init__(self) -> None:
        seen = set()
        for d in self.drivers:
            if d.id in seen:
                raise SopaError(f"duplicate concrete driver id: {d.id!r}")
            seen.add(d.id)

    def concretizations(self, abstract_id: str) -> tuple[ConcreteCostDriver, ...]:
        return tuple(d for d in self.drivers if d.parent == abstract_id)

    def abstract_ids(self) -> tuple[str, ...]:
        out: list[str] = []
        for d in self.drivers:
            if d.parent not in out:
                out.append(d.parent)
        return tuple(out)


@dataclass(frozen=True, slots=True)
class ActivityInstance:
    """One recorded execution of an activity with its driver set.

    ``drivers`` holds abstract driver ids with set semantics (no duplicates),
    in first-seen order for stable serialization. ``values`` optionally
    carries one inline score per driver (positionally aligned) for logs that
    record scores directly; ``None`` entries fall back to config lookup.
    """

    activity: str
    drivers: tuple[str, ...]
    start: datetime
    complete: datetime
    values: tuple[ExactDecimal | None, ...] | None = None

    def __post_init__(self) -> None:
        if not self.activity:
            raise SopaError("activity name must be non-empty")
        if len(self.drivers) > 1 and len(set(self.drivers)) != len(self.drivers):
            raise SopaError(f"duplicate driver ids on activity {self.activity!r}")
        if self.complete < self.start:
            raise SopaError(f"activity {self.activity!r} completes before it starts")
        if self.values is not None:
            if len(self.values) != len(self.drivers):
                raise SopaError(
                    f"activity {self.activity!r}: {len(self.values)} inline values"
                    f" for {len(self.drivers)} drivers"
                )
            if all(v is None for v in self.values):
                object.__setattr__(self, "values", None)


@dataclass(frozen=True, slots=True)
class ProcessInstance:
    """A totally ordered, non-empty sequence of activity instances (one case)."""

    trace_id: str
    variant: str | None
    instances: tuple[ActivityInstance, ...]

    def __post_init__(self) -> None:
        if not self.trace_id:
            raise SopaError("trace id must be non-empty")
        if not self.instances:
            raise SopaError(f"trace {self.trace_id!r} has no activity instances")


@dataclass(frozen=True, slots=True)
class EventLog:
    """A collection of process instances; trace ids are unique, but two traces
    may be structurally identical (multiset semantics for costing)."""

    traces: tuple[ProcessInstance, ...]

    def __post_init__(self) -> None:
        seen = set()
        for t in self.traces:
            if t.trace_id in seen:
                raise SopaError(f"duplicate trace id: {t.trace_id!r}")
            seen.add(t.trace_id)

    def __len__(self) -> int:
        return len(self.traces)

    def __iter__(self):
        return iter(self.traces)
