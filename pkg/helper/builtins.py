"""
Builtin Properties Module
Response-time properties, boolean limit examples, discounted safety and the
separating-example fixtures, exposed by name.
"""

import logging
import math
from typing import Any, Dict, List, NamedTuple, Optional, Sequence, Tuple

import networkx as nx

from constants.constants import GRANT, REQUEST, RESPONSE_ALPHABET, TICK
from helper.domains import (
    BooleanDomain,
    ExtendedNatDomain,
    ExtendedRealDomain,
    FiniteOrderDomain,
    UnitIntervalDomain,
    ValueDomain,
    Value,
    domain_from_descriptor,
)
from helper.errors import BadParams, QuantError, UnknownFixture
from helper.machines import FinitaryMachine, ValueFunction
from helper.props import (
    MonotoneTail,
    OracleFinitary,
    PredictionSet,
    Property,
    machine_property,
)
from helper.traces import Alphabet, Lasso

logger = logging.getLogger(__name__)

RESPONSE = Alphabet(RESPONSE_ALPHABET)
AB = Alphabet(("a", "b"))
ABC = Alphabet(("a", "b", "c"))


def _params(name: str, params: Dict[str, Any], required: Sequence[str], optional: Sequence[str] = ()) -> Dict[str, Any]:
    if not isinstance(params, dict):
        raise BadParams(f"{name}: params must be an object")
    unknown = set(params) - set(required) - set(optional)
    if unknown:
        raise BadParams(f"{name}: unknown parameters {sorted(unknown)}")
    missing = [key for key in required if key not in params]
    if missing:
        raise BadParams(f"{name}: missing parameters {missing}")
    return params


def _natural(name: str, key: str, value: Any, minimum: int = 0) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
        raise BadParams(f"{name}: {key} must be an integer >= {minimum}, got {value!r}")
    return value


# ============= RESPONSE-TIME MACHINES =============

def _last_response_step(key: Tuple, label: str, cap: int) -> Tuple:
    """Pending-request status with a cap-saturated tick counter."""
    status, ticks = key
    if status == "pending":
        if label == TICK:
            return ("pending", min(ticks + 1, cap))
        if label == GRANT:
            return ("granted", ticks)
        return key
    if label == REQUEST:
        return ("pending", 0)
    return key


def min_response_machine(cap: int) -> FinitaryMachine:
    """π_last: the last response time when all requests are granted, the top value otherwise."""
    domain = ExtendedNatDomain(cap)

    def output(key):
        status, ticks = key
        return ticks if status == "granted" else domain.top()

    return FinitaryMachine.build(
        RESPONSE,
        domain,
        ("idle", 0),
        lambda key, a: _last_response_step(key, RESPONSE.label(a), cap),
        output,
        lambda key: key[0] if key[0] == "idle" else f"{key[0]}{key[1]}",
    )


def max_response_machine(cap: int) -> FinitaryMachine:
    """π_curr: ticks since the currently pending request was issued, 0 when none is pending."""
    domain = ExtendedNatDomain(cap)

    def step(key, a):
        pending, ticks = key
        label = RESPONSE.label(a)
        if not pending:
            return (True, 0) if label == REQUEST else key
        if label == TICK:
            return (True, min(ticks + 1, cap))
        if label == GRANT:
            return (False, 0)
        return key

    return FinitaryMachine.build(
        RESPONSE,
        domain,
        (False, 0),
        step,
        lambda key: key[1],
        lambda key: f"pending{key[1]}" if key[0] else "clear",
    )


def skip_response_machine(skip: int, cap: int) -> FinitaryMachine:
    """π_last restarted after the first `skip` observations; the top value until then."""
    domain = ExtendedNatDomain(cap)

    def step(key, a):
        if key[0] == "skip":
            remaining = key[1] - 1
            return ("skip", remaining) if remaining > 0 else ("idle", 0)
        return _last_response_step(key, RESPONSE.label(a), cap)

    def output(key):
        status, ticks = key
        return ticks if status == "granted" else domain.top()

    initial = ("skip", skip) if skip > 0 else ("idle", 0)
    return FinitaryMachine.build(
        RESPONSE,
        domain,
        initial,
        step,
        output,
        lambda key: f"{key[0]}{key[1]}",
    )


def last_symbol_machine(alphabet: Alphabet, symbol: str) -> FinitaryMachine:
    """Boolean machine reporting whether the last observation was `symbol`."""
    target = alphabet.index(symbol)
    return FinitaryMachine(
        alphabet,
        BooleanDomain(),
        [0, 1],
        [[1 if a == target else 0 for a in range(len(alphabet))] for _ in range(2)],
        0,
        ["other", f"saw_{symbol}"],
    )


def constant_machine(value: Value, domain: ValueDomain, alphabet: Alphabet) -> FinitaryMachine:
    return FinitaryMachine(alphabet, domain, [value], [[0] * len(alphabet)], 0, ["const"])


# ============= RESPONSE-TIME STATISTICS =============

class ResponseStats(NamedTuple):
    pending: bool = False
    time: int = 0
    valid: int = 0
    current: int = 0
    peak: int = 0


def advance_response(stats: ResponseStats, label: str) -> ResponseStats:
    if label == REQUEST and not stats.pending:
        return stats._replace(pending=True, valid=stats.valid + 1, current=0)
    if label == TICK and stats.pending:
        current = stats.current + 1
        return stats._replace(time=stats.time + 1, current=current, peak=max(stats.peak, current))
    if label == GRANT and stats.pending:
        return stats._replace(pending=False, current=0)
    return stats


class ResponseLasso(NamedTuple):
    """Response statistics of a lasso once its pending status is periodic."""

    settled: ResponseStats
    time_per_cycle: int
    valid_per_cycle: int
    peak: float

    @property
    def average(self) -> float:
        if self.valid_per_cycle > 0:
            return self.time_per_cycle / self.valid_per_cycle
        if self.time_per_cycle > 0 or self.settled.valid == 0:
            return math.inf
        return self.settled.time / self.settled.valid


def analyze_response_lasso(lasso: Lasso) -> ResponseLasso:
    """
    The pending bit at cycle boundaries is fixed after one cycle pass (the
    last request or grant of the cycle decides it), so every pass after the
    first is identical.
    """
    labels = lasso.alphabet.symbols

    def run(stats, symbols):
        for a in symbols:
            stats = advance_response(stats, labels[a])
        return stats

    settled = run(run(ResponseStats(), lasso.stem), lasso.cycle)
    after = run(settled, lasso.cycle)
    time_c = after.time - settled.time
    valid_c = after.valid - settled.valid
    peak = math.inf if time_c > 0 and valid_c == 0 else after.peak
    return ResponseLasso(settled, time_c, valid_c, peak)


class AvgResponseOracle(OracleFinitary):
    """π_avg = time / valid over [0, ∞], evaluated with liminf."""

    representations = frozenset({ValueFunction.LIMINF})

    def __init__(self):
        super().__init__(RESPONSE, ExtendedRealDomain(low=0.0))

    def initial(self):
        return ResponseStats()

    def advance(self, stats, symbol):
        return advance_response(stats, self.alphabet.label(symbol))

    def value(self, stats):
        if stats.valid == 0:
            return math.inf
        return stats.time / stats.valid

    def sup_ext(self, stats):
        return math.inf

    def inf_ext(self, stats):
        return 0.0

    def lasso_value(self, lasso):
        return analyze_response_lasso(lasso).average

    def safety_closure_lasso(self, lasso):
        return math.inf

    def cosafety_closure_lasso(self, lasso):
        return 0.0


class BoundedAvgResponseOracle(OracleFinitary):
    """Average response time while the maximal response time stays within `bound`, else 0."""

    representations = frozenset({ValueFunction.LIMINF})

    def __init__(self, bound: int):
        super().__init__(RESPONSE, ExtendedRealDomain(low=0.0))
        self.bound = bound

    def initial(self):
        return ResponseStats()

    def advance(self, stats, symbol):
        return advance_response(stats, self.alphabet.label(symbol))

    def value(self, stats):
        if stats.peak > self.bound:
            return 0.0
        return math.inf if stats.valid == 0 else stats.time / stats.valid

    def sup_ext(self, stats):
        if stats.peak > self.bound:
            return 0.0
        return math.inf if stats.valid == 0 else float(self.bound)

    def inf_ext(self, stats):
        return 0.0

    def lasso_value(self, lasso):
        summary = analyze_response_lasso(lasso)
        return 0.0 if summary.peak > self.bound else summary.average

    def safety_closure_lasso(self, lasso):
        summary = analyze_response_lasso(lasso)
        if summary.peak > self.bound:
            return 0.0
        if summary.settled.valid == 0 and summary.valid_per_cycle == 0:
            return math.inf
        return float(self.bound)

    def cosafety_closure_lasso(self, lasso):
        return 0.0


# ============= DISCOUNTED SAFETY =============

class SafetyDFA:
    """
    Deterministic automaton of a boolean safety property. A state is dead
    when no infinite path from it avoids the rejecting states.
    """

    def __init__(self, alphabet: Alphabet, delta: Sequence[Sequence[int]], initial: int, rejecting: Sequence[int], names: Optional[Sequence[str]] = None):
        self.alphabet = alphabet
        self.delta = tuple(tuple(row) for row in delta)
        self.initial = initial
        self.rejecting = frozenset(rejecting)
        self.names = tuple(names) if names else tuple(f"s{i}" for i in range(len(delta)))

        graph = nx.DiGraph()
        graph.add_nodes_from(range(len(self.delta)))
        for q, row in enumerate(self.delta):
            for target in row:
                graph.add_edge(q, target)

        safe = graph.subgraph(q for q in graph if q not in self.rejecting)
        cyclic = set()
        for component in nx.strongly_connected_components(safe):
            q = next(iter(component))
            if len(component) > 1 or safe.has_edge(q, q):
                cyclic |= component
        live = set(cyclic)
        for q in cyclic:
            live |= nx.ancestors(safe, q)
        self.dead = frozenset(q for q in graph if q not in live)
        if self.dead:
            self.distance = nx.multi_source_dijkstra_path_length(graph.reverse(copy=False), set(self.dead))
        else:
            self.distance = {}

    @classmethod
    def never(cls, alphabet: Alphabet, symbol: str) -> "SafetyDFA":
        bad = alphabet.index(symbol)
        delta = [[1 if a == bad else 0 for a in range(len(alphabet))], [1] * len(alphabet)]
        return cls(alphabet, delta, 0, [1], ["ok", "violated"])

    @classmethod
    def from_params(cls, params: Dict[str, Any]) -> "SafetyDFA":
        if "alphabet" not in params:
            raise BadParams("discounted_safety: missing parameter 'alphabet'")
        try:
            alphabet = Alphabet(tuple(params["alphabet"]))
            if "never" in params:
                _params("discounted_safety", params, ("alphabet", "never"))
                return cls.never(alphabet, params["never"])
            _params("discounted_safety", params, ("alphabet", "states", "initial", "transitions", "rejecting"))
            names = [str(s) for s in params["states"]]
            index = {name: i for i, name in enumerate(names)}
            delta: List[List[Optional[int]]] = [[None] * len(alphabet) for _ in names]
            for t in params["transitions"]:
                delta[index[t["from"]]][alphabet.index(t["symbol"])] = index[t["to"]]
            if any(target is None for row in delta for target in row):
                raise BadParams("discounted_safety: automaton must be complete")
            return cls(alphabet, delta, index[params["initial"]], [index[r] for r in params["rejecting"]], names)
        except (KeyError, TypeError) as e:
            raise BadParams(f"discounted_safety: malformed automaton ({e})")

    def step(self, q: int, a: int) -> int:
        return self.delta[q][a]


class DiscountedSafetyStats(NamedTuple):
    state: int
    length: int
    bad_at: Optional[int]


def _discount(n: int) -> float:
    return 1.0 - 2.0 ** (-n)


class DiscountedSafetyOracle(OracleFinitary):
    """
    π(s) = 1 while s can still be extended into the safety property, and
    1 − 2^{−|r|} once the shortest bad prefix r has been read.
    """

    representations = frozenset({ValueFunction.INF, ValueFunction.SUP})

    def __init__(self, dfa: SafetyDFA):
        super().__init__(dfa.alphabet, UnitIntervalDomain())
        self.dfa = dfa

    def initial(self):
        q = self.dfa.initial
        return DiscountedSafetyStats(q, 0, 0 if q in self.dfa.dead else None)

    def advance(self, stats, symbol):
        if stats.bad_at is not None:
            return stats._replace(length=stats.length + 1)
        q = self.dfa.step(stats.state, symbol)
        length = stats.length + 1
        return DiscountedSafetyStats(q, length, length if q in self.dfa.dead else None)

    def value(self, stats):
        return 1.0 if stats.bad_at is None else _discount(stats.bad_at)

    def sup_ext(self, stats):
        return self.value(stats)

    def inf_ext(self, stats):
        if stats.bad_at is not None:
            return self.value(stats)
        k = self.dfa.distance.get(stats.state)
        return 1.0 if k is None else _discount(stats.length + k)

    def lasso_value(self, lasso):
        stats = self.stats_of(lasso.stem)
        seen = set()
        while stats.bad_at is None and stats.state not in seen:
            seen.add(stats.state)
            for a in lasso.cycle:
                stats = self.advance(stats, a)
        return self.value(stats)

    def safety_closure_lasso(self, lasso):
        return self.lasso_value(lasso)

    def cosafety_closure_lasso(self, lasso):
        return self.lasso_value(lasso)

    def alpha_min(self):
        return 0.0

    def beta_min(self):
        return 0.0


# ============= SEPARATING FIXTURES =============

def _first_position(lasso: Lasso, symbol: int) -> Optional[int]:
    for i, a in enumerate(lasso.stem + lasso.cycle):
        if a == symbol:
            return i + 1
    return None


class FirstBOracle(OracleFinitary):
    """0 on a^ω, otherwise the length of the shortest prefix containing b (liminf)."""

    representations = frozenset({ValueFunction.LIMINF})

    def __init__(self):
        super().__init__(AB, ExtendedNatDomain())
        self.b = AB.index("b")

    def initial(self):
        return (0, None)

    def advance(self, stats, symbol):
        length, first = stats
        length += 1
        if first is None and symbol == self.b:
            first = length
        return (length, first)

    def value(self, stats):
        return stats[1] if stats[1] is not None else 0

    def sup_ext(self, stats):
        return stats[1] if stats[1] is not None else math.inf

    def inf_ext(self, stats):
        return stats[1] if stats[1] is not None else 0

    def prediction_set(self, stats):
        length, first = stats
        if first is not None:
            return PredictionSet(self.domain, frozenset({first}))
        return PredictionSet(self.domain, frozenset({0}), MonotoneTail(length + 1, lambda k: k, math.inf, True))

    def prediction_limit(self, lasso):
        first = _first_position(lasso, self.b)
        return PredictionSet(self.domain, frozenset({first if first is not None else 0}))

    def lasso_value(self, lasso):
        first = _first_position(lasso, self.b)
        return first if first is not None else 0

    def safety_closure_lasso(self, lasso):
        first = _first_position(lasso, self.b)
        return first if first is not None else math.inf

    def cosafety_closure_lasso(self, lasso):
        return self.lasso_value(lasso)


class SecondBOracle(OracleFinitary):
    """0 on a^ω, 1 once b occurs twice, 2^{−m} when b occurs exactly once at position m (liminf)."""

    representations = frozenset({ValueFunction.LIMINF})

    def __init__(self):
        super().__init__(AB, UnitIntervalDomain())
        self.b = AB.index("b")

    def initial(self):
        return (0, None, 0)

    def advance(self, stats, symbol):
        length, first, seen = stats
        length += 1
        if symbol == self.b:
            if first is None:
                first = length
            seen = min(seen + 1, 2)
        return (length, first, seen)

    def value(self, stats):
        _, first, seen = stats
        if seen >= 2:
            return 1.0
        return 2.0 ** (-first) if seen == 1 else 0.0

    def sup_ext(self, stats):
        return 1.0

    def inf_ext(self, stats):
        return self.value(stats)

    def prediction_set(self, stats):
        length, first, seen = stats
        if seen >= 2:
            return PredictionSet(self.domain, frozenset({1.0}))
        if seen == 1:
            return PredictionSet(self.domain, frozenset({2.0 ** (-first), 1.0}))
        return PredictionSet(
            self.domain,
            frozenset({0.0, 1.0}),
            MonotoneTail(length + 1, lambda k: 2.0 ** (-k), 0.0, False),
        )

    def prediction_limit(self, lasso):
        if self.b in lasso.cycle or lasso.stem.count(self.b) >= 2:
            return PredictionSet(self.domain, frozenset({1.0}))
        first = _first_position(lasso, self.b)
        if first is None:
            return PredictionSet(self.domain, frozenset({0.0, 1.0}))
        return PredictionSet(self.domain, frozenset({2.0 ** (-first), 1.0}))

    def lasso_value(self, lasso):
        if self.b in lasso.cycle or lasso.stem.count(self.b) >= 2:
            return 1.0
        first = _first_position(lasso, self.b)
        return 0.0 if first is None else 2.0 ** (-first)

    def safety_closure_lasso(self, lasso):
        return 1.0

    def cosafety_closure_lasso(self, lasso):
        return self.lasso_value(lasso)


def multilive_machine() -> FinitaryMachine:
    """0 while only a was seen, 1 once c was seen, 2 once b but no c was seen."""
    a, b, c = (ABC.index(s) for s in ("a", "b", "c"))
    only_a, saw_c, saw_b = 0, 1, 2
    delta = [
        [only_a, saw_b, saw_c],
        [saw_c, saw_c, saw_c],
        [saw_b, saw_b, saw_c],
    ]
    return FinitaryMachine(
        ABC,
        FiniteOrderDomain(("0", "1", "2")),
        [0, 1, 2],
        delta,
        only_a,
        ["only_a", "saw_c", "saw_b"],
    )


# ============= REGISTRY =============

BUILTIN_NAMES = (
    "min_response",
    "max_response",
    "tail_min_response",
    "skip_min_response",
    "avg_response",
    "bounded_avg_response",
    "gf_a",
    "fg_b",
    "discounted_safety",
    "constant",
)

FIXTURE_NAMES = ("vsafe_not_safe", "multilive_not_live", "live_not_verdictlive")


def builtin(name: str, params: Optional[Dict[str, Any]] = None, **kwargs) -> Property:
    """
    Build a named builtin property.

    Args:
        name: One of BUILTIN_NAMES
        params: Parameter object as found in property files; keyword
            arguments are merged into it

    Returns:
        The property, carrying its builtin descriptor
    """
    params = dict(params or {})
    params.update(kwargs)
    descriptor = {"builtin": name, "params": params}

    if name in ("min_response", "max_response", "tail_min_response"):
        _params(name, params, ("cap",))
        cap = _natural(name, "cap", params["cap"], 1)
        if name == "max_response":
            return machine_property(max_response_machine(cap), ValueFunction.SUP, name, descriptor)
        vf = ValueFunction.INF if name == "min_response" else ValueFunction.LIMINF
        return machine_property(min_response_machine(cap), vf, name, descriptor)

    if name == "skip_min_response":
        _params(name, params, ("skip", "cap"))
        skip = _natural(name, "skip", params["skip"])
        cap = _natural(name, "cap", params["cap"], 1)
        return machine_property(skip_response_machine(skip, cap), ValueFunction.INF, f"{name}_{skip}", descriptor)

    if name == "avg_response":
        _params(name, params, ())
        oracle = AvgResponseOracle()
        return Property(oracle, ValueFunction.LIMINF, oracle.domain, oracle.alphabet, name, descriptor)

    if name == "bounded_avg_response":
        _params(name, params, ("bound",))
        bound = _natural(name, "bound", params["bound"], 1)
        oracle = BoundedAvgResponseOracle(bound)
        return Property(oracle, ValueFunction.LIMINF, oracle.domain, oracle.alphabet, name, descriptor)

    if name == "gf_a":
        _params(name, params, ())
        return machine_property(last_symbol_machine(AB, "a"), ValueFunction.LIMSUP, name, descriptor)

    if name == "fg_b":
        _params(name, params, ())
        return machine_property(last_symbol_machine(AB, "b"), ValueFunction.LIMINF, name, descriptor)

    if name == "discounted_safety":
        oracle = DiscountedSafetyOracle(SafetyDFA.from_params(params))
        return Property(oracle, ValueFunction.INF, oracle.domain, oracle.alphabet, name, descriptor)

    if name == "constant":
        _params(name, params, ("value", "domain", "alphabet"), ("value_function",))
        try:
            domain = params["domain"] if isinstance(params["domain"], ValueDomain) else domain_from_descriptor(params["domain"])
            alphabet = params["alphabet"] if isinstance(params["alphabet"], Alphabet) else Alphabet(tuple(params["alphabet"]))
            value = domain.parse_value(params["value"])
        except QuantError as e:
            raise BadParams(f"constant: {e.detail}")
        vf = params.get("value_function", ValueFunction.INF)
        vf = vf if isinstance(vf, ValueFunction) else ValueFunction.parse(vf)
        descriptor = {
            "builtin": name,
            "params": {
                "value": domain.format_value(value),
                "domain": domain.to_descriptor(),
                "alphabet": list(alphabet),
                "value_function": vf.value,
            },
        }
        return machine_property(constant_machine(value, domain, alphabet), vf, f"constant_{domain.format_value(value)}", descriptor)

    raise BadParams(f"unknown builtin {name!r}; expected one of {', '.join(BUILTIN_NAMES)}")


def fixture(name: str) -> Property:
    """Separating examples between the liveness and safety notions."""
    descriptor = {"fixture": name}
    if name == "multilive_not_live":
        return machine_property(multilive_machine(), ValueFunction.LIMINF, name, descriptor)
    if name == "vsafe_not_safe":
        oracle = FirstBOracle()
    elif name == "live_not_verdictlive":
        oracle = SecondBOracle()
    else:
        raise UnknownFixture(f"unknown fixture {name!r}; expected one of {', '.join(FIXTURE_NAMES)}")
    return Property(oracle, ValueFunction.LIMINF, oracle.domain, oracle.alphabet, name, descriptor)
