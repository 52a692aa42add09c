"""
Value Domains Module
Complete lattices used as codomains of quantitative properties, with
comparison semantics that keep "not >=" distinct from "<" on partial orders.
"""

import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from enum import Enum
from functools import reduce
from typing import Any, Dict, Iterable, List, Optional, Tuple

from constants.constants import VALUE_TOLERANCE
from helper.errors import (
    BadParams,
    DomainMismatch,
    DomainNotNumeric,
    EmptySet,
    UnsupportedDomain,
)

logger = logging.getLogger(__name__)

Value = Any


class Order(Enum):
    LESS = "Less"
    EQUAL = "Equal"
    GREATER = "Greater"
    INCOMPARABLE = "Incomparable"

    def reversed(self) -> "Order":
        if self is Order.LESS:
            return Order.GREATER
        if self is Order.GREATER:
            return Order.LESS
        return self


def _order_of(a, b) -> Order:
    if a == b:
        return Order.EQUAL
    return Order.LESS if a < b else Order.GREATER


class ValueDomain(ABC):
    """A nontrivial complete lattice of values."""

    kind = "abstract"
    is_total = True
    is_numeric = False

    @abstractmethod
    def contains(self, v: Value) -> bool:
        ...

    @abstractmethod
    def top(self) -> Value:
        ...

    @abstractmethod
    def bottom(self) -> Value:
        ...

    @abstractmethod
    def raw_compare(self, a: Value, b: Value) -> Order:
        """Compare two members without membership checks."""

    @abstractmethod
    def format_value(self, v: Value) -> str:
        ...

    @abstractmethod
    def parse_value(self, raw: Any) -> Value:
        ...

    @abstractmethod
    def to_descriptor(self) -> Dict[str, Any]:
        ...

    @abstractmethod
    def sample(self, rng) -> Value:
        ...

    def normalize(self, v: Value) -> Value:
        if not self.contains(v):
            raise DomainMismatch(f"{v!r} is not a value of {self.describe()}")
        return v

    def join(self, a: Value, b: Value) -> Value:
        return b if self.raw_compare(a, b) is Order.LESS else a

    def meet(self, a: Value, b: Value) -> Value:
        return b if self.raw_compare(a, b) is Order.GREATER else a

    def order_key(self, v: Value):
        """Sort key for totally ordered domains."""
        raise UnsupportedDomain(f"{self.describe()} is not totally ordered")

    def to_number(self, v: Value) -> float:
        raise DomainNotNumeric(f"{self.describe()} does not embed into the extended reals")

    def stands_for_top(self, v: Value) -> bool:
        """True for the top and for values that saturate toward it."""
        return self.raw_compare(v, self.top()) is Order.EQUAL

    def stands_for_bottom(self, v: Value) -> bool:
        return self.raw_compare(v, self.bottom()) is Order.EQUAL

    def dual(self) -> "ValueDomain":
        return DualDomain(self)

    def describe(self) -> str:
        return self.kind


@dataclass(frozen=True)
class BooleanDomain(ValueDomain):
    kind = "boolean"
    is_numeric = True

    def contains(self, v: Value) -> bool:
        return isinstance(v, int) and v in (0, 1)

    def normalize(self, v: Value) -> Value:
        return int(super().normalize(v))

    def top(self) -> Value:
        return 1

    def bottom(self) -> Value:
        return 0

    def raw_compare(self, a: Value, b: Value) -> Order:
        return _order_of(a, b)

    def order_key(self, v: Value):
        return v

    def to_number(self, v: Value) -> float:
        return float(v)

    def format_value(self, v: Value) -> str:
        return str(int(v))

    def parse_value(self, raw: Any) -> Value:
        if isinstance(raw, str):
            lowered = raw.strip().lower()
            if lowered in ("0", "false"):
                return 0
            if lowered in ("1", "true"):
                return 1
            raise DomainMismatch(f"{raw!r} is not a boolean value")
        return self.normalize(raw)

    def to_descriptor(self) -> Dict[str, Any]:
        return {"kind": self.kind}

    def sample(self, rng) -> Value:
        return int(rng.integers(0, 2))


@dataclass(frozen=True)
class ExtendedNatDomain(ValueDomain):
    """
    Naturals with infinity. With a cap, every finite value at or above the
    cap collapses to the saturation value "≥cap", stored as the cap itself.
    Infinity stays a separate top strictly above it. Both embed numerically
    as +inf, so "≥cap" stands in for unbounded counters.
    """

    cap: Optional[int] = None

    kind = "extended_nat"
    is_numeric = True

    def __post_init__(self):
        if self.cap is not None and (isinstance(self.cap, bool) or not isinstance(self.cap, int) or self.cap < 1):
            raise BadParams(f"extended_nat cap must be a positive integer, got {self.cap!r}")

    def contains(self, v: Value) -> bool:
        if isinstance(v, bool):
            return False
        if isinstance(v, float) and math.isinf(v) and v > 0:
            return True
        if not isinstance(v, int) or v < 0:
            return False
        return self.cap is None or v <= self.cap

    def normalize(self, v: Value) -> Value:
        if isinstance(v, float):
            if math.isinf(v) and v > 0:
                return math.inf
            if v.is_integer():
                v = int(v)
        if isinstance(v, int) and not isinstance(v, bool) and v >= 0:
            if self.cap is not None and v >= self.cap:
                return self.cap
            return v
        raise DomainMismatch(f"{v!r} is not a value of {self.describe()}")

    def is_saturated(self, v: Value) -> bool:
        return self.cap is not None and v == self.cap

    def stands_for_top(self, v: Value) -> bool:
        return v == math.inf or self.is_saturated(v)

    def top(self) -> Value:
        return math.inf

    def bottom(self) -> Value:
        return 0

    def raw_compare(self, a: Value, b: Value) -> Order:
        return _order_of(a, b)

    def order_key(self, v: Value):
        return v

    def to_number(self, v: Value) -> float:
        if v == math.inf or self.is_saturated(v):
            return math.inf
        return float(v)

    def format_value(self, v: Value) -> str:
        if self.is_saturated(v):
            return f"≥{self.cap}"
        if v == math.inf:
            return "inf"
        return str(v)

    def parse_value(self, raw: Any) -> Value:
        if isinstance(raw, str):
            text = raw.strip()
            if text in ("inf", "∞", "+inf", "infinity"):
                return math.inf
            for prefix in ("≥", ">="):
                if text.startswith(prefix):
                    bound = self._parse_int(text[len(prefix):], raw)
                    if self.cap is None or bound != self.cap:
                        raise DomainMismatch(f"{raw!r} does not name the saturation value of {self.describe()}")
                    return self.cap
            return self.normalize(self._parse_int(text, raw))
        return self.normalize(raw)

    @staticmethod
    def _parse_int(text: str, raw: Any) -> int:
        try:
            return int(text)
        except ValueError:
            raise DomainMismatch(f"{raw!r} is not a natural number")

    def to_descriptor(self) -> Dict[str, Any]:
        descriptor: Dict[str, Any] = {"kind": self.kind}
        if self.cap is not None:
            descriptor["cap"] = self.cap
        return descriptor

    def sample(self, rng) -> Value:
        limit = self.cap if self.cap is not None else 12
        v = int(rng.integers(0, limit + 2))
        return math.inf if v > limit else v

    def describe(self) -> str:
        return f"extended_nat(cap={self.cap})" if self.cap is not None else "extended_nat"


@dataclass(frozen=True)
class ExtendedRealDomain(ValueDomain):
    """Closed real interval [low, high]; the default is [-inf, +inf]."""

    low: float = -math.inf
    high: float = math.inf

    kind = "extended_real"
    is_numeric = True

    def __post_init__(self):
        if not self.low < self.high:
            raise BadParams(f"interval bounds must satisfy low < high, got [{self.low}, {self.high}]")

    def contains(self, v: Value) -> bool:
        if isinstance(v, bool) or not isinstance(v, (int, float)) or math.isnan(v):
            return False
        return self.low - VALUE_TOLERANCE <= v <= self.high + VALUE_TOLERANCE

    def normalize(self, v: Value) -> Value:
        v = super().normalize(v)
        return float(min(max(v, self.low), self.high))

    def top(self) -> Value:
        return float(self.high)

    def bottom(self) -> Value:
        return float(self.low)

    def raw_compare(self, a: Value, b: Value) -> Order:
        if math.isclose(a, b, rel_tol=0.0, abs_tol=VALUE_TOLERANCE):
            return Order.EQUAL
        return Order.LESS if a < b else Order.GREATER

    def order_key(self, v: Value):
        return v

    def to_number(self, v: Value) -> float:
        return float(v)

    def format_value(self, v: Value) -> str:
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, ".12g")

    def parse_value(self, raw: Any) -> Value:
        if isinstance(raw, str):
            text = raw.strip().replace("∞", "inf")
            try:
                raw = float(text)
            except ValueError:
                raise DomainMismatch(f"{raw!r} is not a real number")
        return self.normalize(raw)

    def to_descriptor(self) -> Dict[str, Any]:
        descriptor: Dict[str, Any] = {"kind": self.kind}
        if not math.isinf(self.low):
            descriptor["low"] = self.low
        if not math.isinf(self.high):
            descriptor["high"] = self.high
        return descriptor

    def sample(self, rng) -> Value:
        pick = rng.random()
        if pick < 0.1:
            return self.bottom()
        if pick < 0.2:
            return self.top()
        lo = self.low if not math.isinf(self.low) else -50.0
        hi = self.high if not math.isinf(self.high) else 50.0
        return self.normalize(round(float(rng.uniform(lo, hi)), 3))

    def describe(self) -> str:
        return f"{self.kind}[{self.format_value(self.low)}, {self.format_value(self.high)}]"


@dataclass(frozen=True)
class UnitIntervalDomain(ExtendedRealDomain):
    low: float = 0.0
    high: float = 1.0

    kind = "unit_interval"

    def __post_init__(self):
        if (self.low, self.high) != (0.0, 1.0):
            raise BadParams("unit_interval is fixed to [0, 1]")

    def to_descriptor(self) -> Dict[str, Any]:
        return {"kind": self.kind}

    def describe(self) -> str:
        return self.kind


@dataclass(frozen=True)
class FiniteOrderDomain(ValueDomain):
    """A finite chain of named levels; values are level indices."""

    levels: Tuple[str, ...] = ()

    kind = "finite_order"

    def __post_init__(self):
        levels = tuple(str(level) for level in self.levels)
        if len(levels) < 2 or len(set(levels)) != len(levels):
            raise BadParams("finite_order needs at least two distinct levels")
        object.__setattr__(self, "levels", levels)

    def contains(self, v: Value) -> bool:
        return isinstance(v, int) and not isinstance(v, bool) and 0 <= v < len(self.levels)

    def normalize(self, v: Value) -> Value:
        if isinstance(v, str):
            return self.parse_value(v)
        return super().normalize(v)

    def top(self) -> Value:
        return len(self.levels) - 1

    def bottom(self) -> Value:
        return 0

    def raw_compare(self, a: Value, b: Value) -> Order:
        return _order_of(a, b)

    def order_key(self, v: Value):
        return v

    def format_value(self, v: Value) -> str:
        return self.levels[v]

    def parse_value(self, raw: Any) -> Value:
        if isinstance(raw, str):
            if raw not in self.levels:
                raise DomainMismatch(f"{raw!r} is not a level of {self.describe()}")
            return self.levels.index(raw)
        return super().normalize(raw)

    def to_descriptor(self) -> Dict[str, Any]:
        return {"kind": self.kind, "levels": list(self.levels)}

    def sample(self, rng) -> Value:
        return int(rng.integers(0, len(self.levels)))

    def describe(self) -> str:
        return f"{self.kind}({','.join(self.levels)})"


@dataclass(frozen=True)
class ProductDomain(ValueDomain):
    """Componentwise order on pairs; the only partial order shipped."""

    left: ValueDomain
    right: ValueDomain

    kind = "product"
    is_total = False

    def contains(self, v: Value) -> bool:
        return (
            isinstance(v, tuple)
            and len(v) == 2
            and self.left.contains(v[0])
            and self.right.contains(v[1])
        )

    def normalize(self, v: Value) -> Value:
        if isinstance(v, (list, tuple)) and len(v) == 2:
            return (self.left.normalize(v[0]), self.right.normalize(v[1]))
        raise DomainMismatch(f"{v!r} is not a value of {self.describe()}")

    def top(self) -> Value:
        return (self.left.top(), self.right.top())

    def bottom(self) -> Value:
        return (self.left.bottom(), self.right.bottom())

    def raw_compare(self, a: Value, b: Value) -> Order:
        orders = {self.left.raw_compare(a[0], b[0]), self.right.raw_compare(a[1], b[1])}
        if Order.INCOMPARABLE in orders or {Order.LESS, Order.GREATER} <= orders:
            return Order.INCOMPARABLE
        if orders == {Order.EQUAL}:
            return Order.EQUAL
        return Order.LESS if Order.LESS in orders else Order.GREATER

    def join(self, a: Value, b: Value) -> Value:
        return (self.left.join(a[0], b[0]), self.right.join(a[1], b[1]))

    def meet(self, a: Value, b: Value) -> Value:
        return (self.left.meet(a[0], b[0]), self.right.meet(a[1], b[1]))

    def format_value(self, v: Value) -> str:
        return f"({self.left.format_value(v[0])},{self.right.format_value(v[1])})"

    def parse_value(self, raw: Any) -> Value:
        if isinstance(raw, str):
            text = raw.strip()
            if not (text.startswith("(") and text.endswith(")")) or text.count(",") != 1:
                raise DomainMismatch(f"{raw!r} is not a pair")
            raw = text[1:-1].split(",")
        if not isinstance(raw, (list, tuple)) or len(raw) != 2:
            raise DomainMismatch(f"{raw!r} is not a pair")
        return (self.left.parse_value(raw[0]), self.right.parse_value(raw[1]))

    def to_descriptor(self) -> Dict[str, Any]:
        return {
            "kind": self.kind,
            "left": self.left.to_descriptor(),
            "right": self.right.to_descriptor(),
        }

    def sample(self, rng) -> Value:
        return (self.left.sample(rng), self.right.sample(rng))

    def describe(self) -> str:
        return f"product({self.left.describe()},{self.right.describe()})"


@dataclass(frozen=True)
class DualDomain(ValueDomain):
    """The same elements as the inner domain with the order reversed."""

    inner: ValueDomain

    kind = "dual"

    @property
    def is_total(self) -> bool:
        return self.inner.is_total

    def contains(self, v: Value) -> bool:
        return self.inner.contains(v)

    def normalize(self, v: Value) -> Value:
        return self.inner.normalize(v)

    def top(self) -> Value:
        return self.inner.bottom()

    def bottom(self) -> Value:
        return self.inner.top()

    def raw_compare(self, a: Value, b: Value) -> Order:
        return self.inner.raw_compare(a, b).reversed()

    def join(self, a: Value, b: Value) -> Value:
        return self.inner.meet(a, b)

    def meet(self, a: Value, b: Value) -> Value:
        return self.inner.join(a, b)

    def order_key(self, v: Value):
        return -self.inner.order_key(v)

    def format_value(self, v: Value) -> str:
        return self.inner.format_value(v)

    def parse_value(self, raw: Any) -> Value:
        return self.inner.parse_value(raw)

    def to_descriptor(self) -> Dict[str, Any]:
        return {"kind": self.kind, "inner": self.inner.to_descriptor()}

    def sample(self, rng) -> Value:
        return self.inner.sample(rng)

    def stands_for_top(self, v: Value) -> bool:
        return self.inner.stands_for_bottom(v)

    def stands_for_bottom(self, v: Value) -> bool:
        return self.inner.stands_for_top(v)

    def dual(self) -> ValueDomain:
        return self.inner

    def describe(self) -> str:
        return f"dual({self.inner.describe()})"


def _check_member(v: Value, d: ValueDomain) -> None:
    if not d.contains(v):
        raise DomainMismatch(f"{v!r} is not a value of {d.describe()}")


def compare(a: Value, b: Value, d: ValueDomain) -> Order:
    """Order relation between two values of the same domain."""
    _check_member(a, d)
    _check_member(b, d)
    return d.raw_compare(a, b)


def not_geq(a: Value, b: Value, d: ValueDomain) -> bool:
    """True when a ≥ b fails, which on partial orders is weaker than a < b."""
    return compare(a, b, d) in (Order.LESS, Order.INCOMPARABLE)


def values_equal(a: Value, b: Value, d: ValueDomain) -> bool:
    return d.raw_compare(a, b) is Order.EQUAL


def aggregate(vs: Iterable[Value], mode: str, d: ValueDomain) -> Value:
    """
    Least upper bound (mode="join") or greatest lower bound (mode="meet")
    of a nonempty finite set of values.
    """
    if mode not in ("join", "meet"):
        raise BadParams(f"aggregate mode must be 'join' or 'meet', got {mode!r}")
    values: List[Value] = list(vs)
    if not values:
        raise EmptySet(f"cannot {mode} an empty set of values")
    for v in values:
        _check_member(v, d)
    op = d.join if mode == "join" else d.meet
    return reduce(op, values)


def dualize(d: ValueDomain) -> ValueDomain:
    return d.dual()


def sorted_values(vs: Iterable[Value], d: ValueDomain) -> List[Value]:
    """Distinct values in ascending order of a total domain."""
    unique: List[Value] = []
    for v in sorted(vs, key=d.order_key):
        if not unique or not values_equal(unique[-1], v, d):
            unique.append(v)
    return unique


def value_gap(hi: Value, lo: Value, d: ValueDomain) -> float:
    """Numeric distance hi - lo; equal values (infinite ones included) are 0 apart."""
    if values_equal(hi, lo, d):
        return 0.0
    a, b = d.to_number(hi), d.to_number(lo)
    # "≥cap" and inf both embed as +inf
    return 0.0 if a == b else a - b


def domain_from_descriptor(descriptor: Dict[str, Any]) -> ValueDomain:
    """Build a domain from its file descriptor, e.g. {"kind": "extended_nat", "cap": 8}."""
    if not isinstance(descriptor, dict) or "kind" not in descriptor:
        raise BadParams(f"domain descriptor needs a 'kind': {descriptor!r}")
    kind = descriptor["kind"]
    allowed = {
        "boolean": {"kind"},
        "extended_nat": {"kind", "cap"},
        "extended_real": {"kind", "low", "high"},
        "unit_interval": {"kind"},
        "finite_order": {"kind", "levels"},
        "product": {"kind", "left", "right"},
        "dual": {"kind", "inner"},
    }
    if kind not in allowed:
        raise BadParams(f"unknown domain kind {kind!r}")
    extra = set(descriptor) - allowed[kind]
    if extra:
        raise BadParams(f"unknown fields for domain {kind!r}: {sorted(extra)}")

    if kind == "boolean":
        return BooleanDomain()
    if kind == "extended_nat":
        return ExtendedNatDomain(cap=descriptor.get("cap"))
    if kind == "extended_real":
        return ExtendedRealDomain(
            low=float(descriptor.get("low", -math.inf)),
            high=float(descriptor.get("high", math.inf)),
        )
    if kind == "unit_interval":
        return UnitIntervalDomain()
    if kind == "finite_order":
        return FiniteOrderDomain(levels=tuple(descriptor.get("levels", ())))
    if kind == "product":
        return ProductDomain(
            domain_from_descriptor(descriptor.get("left")),
            domain_from_descriptor(descriptor.get("right")),
        )
    return DualDomain(domain_from_descriptor(descriptor.get("inner")))
