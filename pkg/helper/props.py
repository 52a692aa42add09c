"""
Properties Module
Quantitative limit properties (finitary property + value function) backed by
Moore machines, analytic oracles, or derived lasso evaluators, together with
their evaluation and combinators.
"""

import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple, Union

from helper.domains import Order, ValueDomain, Value, dualize, values_equal
from helper.errors import (
    AlphabetMismatch,
    BadParams,
    DomainMismatch,
    EmptyFamily,
    UnsupportedBackend,
)
from helper.machines import (
    FinitaryMachine,
    ValueFunction,
    product_machine,
    running_aggregate_machine,
    step_counter_machine,
)
from helper.traces import Alphabet, FiniteTrace, Lasso

logger = logging.getLogger(__name__)


# ============= PREDICTION SETS =============

@dataclass(frozen=True)
class MonotoneTail:
    """
    The infinite strictly monotone sequence term(first), term(first+1), ...
    converging to limit, which the sequence itself never reaches.
    """

    first: int
    term: Callable[[int], Value]
    limit: Value
    increasing: bool = True


@dataclass(frozen=True)
class PredictionSet:
    """A set of still-possible values: finitely many members plus an optional infinite tail."""

    domain: ValueDomain
    members: FrozenSet[Value] = frozenset()
    tail: Optional[MonotoneTail] = None

    def contains(self, v: Value) -> bool:
        if any(values_equal(m, v, self.domain) for m in self.members):
            return True
        return self.tail is not None and self._tail_contains(v)

    def _tail_contains(self, v: Value) -> bool:
        tail = self.tail
        before, after = (Order.LESS, Order.GREATER) if tail.increasing else (Order.GREATER, Order.LESS)
        if self.domain.raw_compare(v, tail.limit) is not before:
            return False
        k = tail.first
        while True:
            order = self.domain.raw_compare(tail.term(k), v)
            if order is Order.EQUAL:
                return True
            if order is after:
                return False
            k += 1

    def supremum(self) -> Value:
        candidates = list(self.members)
        if self.tail is not None:
            candidates.append(self.tail.limit if self.tail.increasing else self.tail.term(self.tail.first))
        result = candidates[0]
        for v in candidates[1:]:
            result = self.domain.join(result, v)
        return result

    def infimum(self) -> Value:
        candidates = list(self.members)
        if self.tail is not None:
            candidates.append(self.tail.term(self.tail.first) if self.tail.increasing else self.tail.limit)
        result = candidates[0]
        for v in candidates[1:]:
            result = self.domain.meet(result, v)
        return result

    @property
    def is_finite(self) -> bool:
        return self.tail is None

    def materialize(self, k: int) -> List[Value]:
        """Members plus the first k tail terms, in ascending order for total domains."""
        values = list(self.members)
        if self.tail is not None:
            values.extend(self.tail.term(self.tail.first + i) for i in range(k))
        if self.domain.is_total:
            values.sort(key=self.domain.order_key)
        return values


# ============= BACKENDS =============

class OracleFinitary(ABC):
    """
    Finitary property given by incremental statistics over the consumed
    prefix. Optional analytic hooks are detected by override.
    """

    representations: FrozenSet[ValueFunction] = frozenset()

    def __init__(self, alphabet: Alphabet, domain: ValueDomain):
        self.alphabet = alphabet
        self.domain = domain

    @abstractmethod
    def initial(self) -> Any:
        ...

    @abstractmethod
    def advance(self, stats: Any, symbol: int) -> Any:
        ...

    @abstractmethod
    def value(self, stats: Any) -> Value:
        ...

    def stats_of(self, symbols: Sequence[int]) -> Any:
        stats = self.initial()
        for a in symbols:
            stats = self.advance(stats, a)
        return stats

    def evaluate(self, symbols: Sequence[int]) -> Value:
        return self.value(self.stats_of(symbols))

    # Optional hooks.

    def sup_ext(self, stats: Any) -> Value:
        """Least upper bound of the property over all continuations."""
        raise NotImplementedError

    def inf_ext(self, stats: Any) -> Value:
        raise NotImplementedError

    def prediction_set(self, stats: Any) -> PredictionSet:
        raise NotImplementedError

    def prediction_limit(self, lasso: Lasso) -> PredictionSet:
        """Intersection of the prediction sets of all prefixes of the lasso."""
        raise NotImplementedError

    def lasso_value(self, lasso: Lasso) -> Value:
        raise NotImplementedError

    def safety_closure_lasso(self, lasso: Lasso) -> Value:
        raise NotImplementedError

    def cosafety_closure_lasso(self, lasso: Lasso) -> Value:
        raise NotImplementedError

    def alpha_min(self) -> float:
        raise NotImplementedError

    def beta_min(self) -> float:
        raise NotImplementedError

    def has_hook(self, name: str) -> bool:
        return getattr(type(self), name) is not getattr(OracleFinitary, name)


class ComplementOracle(OracleFinitary):
    """The same oracle read in the dual domain; upper and lower hooks swap."""

    _SWAPPED = {
        "sup_ext": "inf_ext",
        "inf_ext": "sup_ext",
        "safety_closure_lasso": "cosafety_closure_lasso",
        "cosafety_closure_lasso": "safety_closure_lasso",
        "alpha_min": "beta_min",
        "beta_min": "alpha_min",
    }

    def __init__(self, inner: OracleFinitary):
        super().__init__(inner.alphabet, dualize(inner.domain))
        self.inner = inner
        self.representations = frozenset(vf.dual for vf in inner.representations)

    def initial(self):
        return self.inner.initial()

    def advance(self, stats, symbol):
        return self.inner.advance(stats, symbol)

    def value(self, stats):
        return self.inner.value(stats)

    def sup_ext(self, stats):
        return self.inner.inf_ext(stats)

    def inf_ext(self, stats):
        return self.inner.sup_ext(stats)

    def prediction_set(self, stats):
        inner = self.inner.prediction_set(stats)
        return PredictionSet(self.domain, inner.members, inner.tail)

    def prediction_limit(self, lasso):
        inner = self.inner.prediction_limit(lasso)
        return PredictionSet(self.domain, inner.members, inner.tail)

    def lasso_value(self, lasso):
        return self.inner.lasso_value(lasso)

    def safety_closure_lasso(self, lasso):
        return self.inner.cosafety_closure_lasso(lasso)

    def cosafety_closure_lasso(self, lasso):
        return self.inner.safety_closure_lasso(lasso)

    def alpha_min(self):
        return self.inner.beta_min()

    def beta_min(self):
        return self.inner.alpha_min()

    def has_hook(self, name: str) -> bool:
        return self.inner.has_hook(self._SWAPPED.get(name, name))


@dataclass(frozen=True)
class DerivedBackend:
    """
    A property known only through its lasso values, e.g. a decomposition part.
    Closure rules are optional exact evaluators of its closures on lassos.
    """

    rule: str
    lasso_fn: Callable[[Lasso], Value]
    finitary_fn: Optional[Callable[[FiniteTrace], Value]] = None
    safety_closure_fn: Optional[Callable[[Lasso], Value]] = None
    cosafety_closure_fn: Optional[Callable[[Lasso], Value]] = None
    sources: Tuple[Dict[str, Any], ...] = ()


Backend = Union[FinitaryMachine, OracleFinitary, DerivedBackend]


@dataclass(frozen=True, eq=False)
class Property:
    backend: Backend
    value_function: Optional[ValueFunction]
    domain: ValueDomain
    alphabet: Alphabet
    name: str = "property"
    descriptor: Optional[Dict[str, Any]] = field(default=None, compare=False)

    def __post_init__(self):
        backend_domain = getattr(self.backend, "domain", self.domain)
        if backend_domain != self.domain:
            raise DomainMismatch(
                f"backend domain {backend_domain.describe()} differs from property domain {self.domain.describe()}"
            )
        backend_alphabet = getattr(self.backend, "alphabet", self.alphabet)
        if backend_alphabet != self.alphabet:
            raise AlphabetMismatch("backend alphabet differs from property alphabet")

    @property
    def is_machine(self) -> bool:
        return isinstance(self.backend, FinitaryMachine)

    @property
    def is_oracle(self) -> bool:
        return isinstance(self.backend, OracleFinitary)

    @property
    def is_derived(self) -> bool:
        return isinstance(self.backend, DerivedBackend)

    @property
    def machine(self) -> FinitaryMachine:
        if not self.is_machine:
            raise UnsupportedBackend(f"{self.name} is not machine-backed")
        return self.backend

    @property
    def oracle(self) -> OracleFinitary:
        if not self.is_oracle:
            raise UnsupportedBackend(f"{self.name} is not oracle-backed")
        return self.backend

    def representable_as(self, vf: ValueFunction) -> bool:
        """Whether the property is known to be a limit property with value function vf."""
        if self.value_function is vf:
            return True
        return self.is_oracle and vf in self.backend.representations

    def describe(self) -> Dict[str, Any]:
        if self.descriptor is not None:
            return self.descriptor
        return {"name": self.name}


def machine_property(machine: FinitaryMachine, vf: ValueFunction, name: str = "machine", descriptor: Optional[Dict] = None) -> Property:
    return Property(machine, vf, machine.domain, machine.alphabet, name, descriptor)


def derived_property(
    backend: DerivedBackend,
    domain: ValueDomain,
    alphabet: Alphabet,
    name: str,
) -> Property:
    descriptor = {"derived": backend.rule, "of": list(backend.sources)}
    return Property(backend, None, domain, alphabet, name, descriptor)


# ============= EVALUATION =============

def _check_alphabet(p: Property, alphabet: Alphabet) -> None:
    if alphabet != p.alphabet:
        raise AlphabetMismatch(f"trace alphabet {list(alphabet)} differs from {p.name} alphabet {list(p.alphabet)}")


def eval_finitary(p: Property, s: FiniteTrace) -> Value:
    """The finitary value Φ(s) = π(s) of a finite trace."""
    _check_alphabet(p, s.alphabet)
    backend = p.backend
    if isinstance(backend, FinitaryMachine):
        return backend.output(backend.run(s.symbols))
    if isinstance(backend, OracleFinitary):
        return backend.evaluate(s.symbols)
    if backend.finitary_fn is None:
        raise UnsupportedBackend(f"{p.name} ({backend.rule}) has no finitary evaluator")
    return backend.finitary_fn(s)


def eval_on_lasso(p: Property, l: Lasso) -> Value:
    """The exact value of the property on the infinite trace stem·cycle^ω."""
    _check_alphabet(p, l.alphabet)
    backend = p.backend
    if isinstance(backend, FinitaryMachine):
        return backend.evaluate_lasso(l, p.value_function)
    if isinstance(backend, OracleFinitary):
        if not backend.has_hook("lasso_value"):
            raise UnsupportedBackend(f"{p.name} has no analytic lasso rule")
        return backend.lasso_value(l)
    return backend.lasso_fn(l)


def has_finitary(p: Property) -> bool:
    return not p.is_derived or p.backend.finitary_fn is not None


# ============= COMBINATORS =============

_MACHINE_MODES = {
    (ValueFunction.INF, "min"),
    (ValueFunction.LIMINF, "min"),
    (ValueFunction.SUP, "max"),
    (ValueFunction.LIMSUP, "max"),
}


def combine(p1: Property, p2: Property, mode: str) -> Property:
    """
    Pointwise min or max of two properties over the same alphabet and domain.

    Machine-backed operands with a matching value function yield a product
    machine; inf/sup operands combined the other way go through their running
    aggregates first. Everything else becomes a derived property.
    """
    if mode not in ("min", "max"):
        raise BadParams(f"combine mode must be 'min' or 'max', got {mode!r}")
    if p1.alphabet != p2.alphabet:
        raise AlphabetMismatch(f"cannot combine {p1.name} and {p2.name}: alphabets differ")
    if p1.domain != p2.domain:
        raise DomainMismatch(f"cannot combine {p1.name} and {p2.name}: domains differ")

    domain = p1.domain
    op = domain.meet if mode == "min" else domain.join
    name = f"{mode}({p1.name},{p2.name})"
    descriptor = {"combine": mode, "of": [p1.describe(), p2.describe()]}

    if p1.is_machine and p2.is_machine and p1.value_function is p2.value_function:
        vf = p1.value_function
        m1, m2 = p1.machine, p2.machine
        if (vf, mode) not in _MACHINE_MODES:
            if vf.is_limit:
                return _derived_combine(p1, p2, op, mode, name)
            running = vf.aggregate_mode
            m1 = running_aggregate_machine(m1, running)
            m2 = running_aggregate_machine(m2, running)
        product = product_machine([m1, m2], lambda outs: op(outs[0], outs[1]), domain)
        return machine_property(product, vf, name, descriptor)

    return _derived_combine(p1, p2, op, mode, name)


def _derived_combine(p1: Property, p2: Property, op, mode: str, name: str) -> Property:
    finitary = None
    if has_finitary(p1) and has_finitary(p2):
        finitary = lambda s: op(eval_finitary(p1, s), eval_finitary(p2, s))
    backend = DerivedBackend(
        rule=f"pointwise_{mode}",
        lasso_fn=lambda l: op(eval_on_lasso(p1, l), eval_on_lasso(p2, l)),
        finitary_fn=finitary,
        sources=(p1.describe(), p2.describe()),
    )
    return derived_property(backend, p1.domain, p1.alphabet, name)


def complement(p: Property) -> Property:
    """Same values on the order-reversed domain; inf/sup and liminf/limsup swap."""
    domain = dualize(p.domain)
    name = p.name[len("complement("):-1] if p.name.startswith("complement(") else f"complement({p.name})"
    descriptor = {"complement": p.describe()}
    if isinstance(p.descriptor, dict) and "complement" in p.descriptor:
        descriptor = p.descriptor["complement"]
    vf = p.value_function.dual if p.value_function is not None else None
    backend = p.backend
    if isinstance(backend, FinitaryMachine):
        new_backend = backend.with_domain(domain)
    elif isinstance(backend, ComplementOracle):
        new_backend = backend.inner
    elif isinstance(backend, OracleFinitary):
        new_backend = ComplementOracle(backend)
    else:
        new_backend = DerivedBackend(
            rule=backend.rule,
            lasso_fn=backend.lasso_fn,
            finitary_fn=backend.finitary_fn,
            safety_closure_fn=backend.cosafety_closure_fn,
            cosafety_closure_fn=backend.safety_closure_fn,
            sources=backend.sources,
        )
    return Property(new_backend, vf, domain, p.alphabet, name, descriptor)


def monotone_rewrite(p: Property, value_function: ValueFunction = ValueFunction.LIMINF) -> Property:
    """
    Running-meet (inf) or running-join (sup) machine; its output sequence is
    monotone, so it evaluates identically under liminf and limsup.
    """
    if not p.is_machine or p.value_function not in (ValueFunction.INF, ValueFunction.SUP):
        raise UnsupportedBackend("monotone_rewrite needs a machine-backed inf- or sup-property")
    if not value_function.is_limit:
        raise BadParams("monotone_rewrite produces a liminf or limsup property")
    machine = running_aggregate_machine(p.machine, p.value_function.aggregate_mode)
    return machine_property(machine, value_function, f"monotone({p.name})", {"monotone": p.describe()})


def liminf_as_sup_family(p: Property, i: int) -> Property:
    """The i-th inf-property of the countable-supremum representation of a liminf-property."""
    if not p.is_machine or p.value_function is not ValueFunction.LIMINF:
        raise UnsupportedBackend("liminf_as_sup_family needs a machine-backed liminf-property")
    if i < 0:
        raise BadParams("family index must be a natural number")
    machine = step_counter_machine(p.machine, i, p.domain.top())
    return machine_property(machine, ValueFunction.INF, f"family({p.name},{i})", {"family": p.describe(), "index": i})


def liminf_upper_bound_combine(family: Sequence[Property]) -> Property:
    """
    Liminf-property whose finitary value is the join of the first
    min(|s|+1, k) members' values; bounds every member from above.
    """
    if not family:
        raise EmptyFamily("liminf_upper_bound_combine needs at least one property")
    head = family[0]
    for member in family:
        if not member.is_machine or member.value_function is not ValueFunction.INF:
            raise UnsupportedBackend("every family member must be a machine-backed inf-property")
        if member.alphabet != head.alphabet:
            raise AlphabetMismatch("family members must share one alphabet")
        if member.domain != head.domain:
            raise DomainMismatch("family members must share one domain")

    domain = head.domain
    k = len(family)
    members = [running_aggregate_machine(m.machine, "meet") for m in family]

    def step(key, a):
        states, c = key
        return tuple(m.step(q, a) for m, q in zip(members, states)), min(c + 1, k - 1)

    def output(key):
        states, c = key
        result = members[0].output(states[0])
        for m, q in list(zip(members, states))[1:c + 1]:
            result = domain.join(result, m.output(q))
        return result

    def name(key):
        states, c = key
        return "(" + ",".join(m.names[q] for m, q in zip(members, states)) + f";{c})"

    machine = FinitaryMachine.build(head.alphabet, domain, (tuple(m.initial for m in members), 0), step, output, name)
    logger.info(f"Upper-bound combination of {k} inf-properties has {machine.size} states")
    return machine_property(
        machine,
        ValueFunction.LIMINF,
        f"upper_bound({','.join(m.name for m in family)})",
        {"upper_bound": [m.describe() for m in family]},
    )
