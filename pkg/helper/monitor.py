"""
Monitoring Module
Streaming ghost monitor with prediction bounds and hypothesis verdicts, and
synthesis of finite-state approximate monitors by unfolding the set S_δ of
traces whose prediction width is still at least δ.
"""

import json
import logging
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Dict, Iterator, List, NamedTuple, Optional, Sequence, Tuple, Union

import networkx as nx

from constants.constants import MONITOR_KEYS, SPEC_FILE_VERSION, VALUE_TOLERANCE
from helper.closure import config_space
from helper.domains import ExtendedRealDomain, Order, Value, compare, value_gap
from helper.errors import AlphabetMismatch, BadParams, DepthExceeded, DomainNotNumeric, UnsupportedBackend
from helper.machines import ValueFunction, evaluate_outputs, orbit
from helper.props import Property, eval_finitary
from helper.traces import Alphabet, FiniteTrace, Lasso
from helper.utils import AnalysisConfig

logger = logging.getLogger(__name__)


# ============= GHOST MONITOR =============

@dataclass
class Hypothesis:
    """Lower-bound (GE) or upper-bound (LE) hypothesis on the final value."""

    kind: str
    value: Value
    rejected_at: Optional[int] = None

    @property
    def status(self) -> str:
        return "Open" if self.rejected_at is None else f"Rejected@{self.rejected_at}"


@dataclass
class StepReport:
    step: int
    symbol: Optional[str]
    pi: Value
    lower: Value
    upper: Value
    sup_realizable: Optional[bool]
    updates: List[int] = field(default_factory=list)


class GhostMonitor:
    """
    Streaming monitor for one property and one trace. After each observation
    it knows π of the consumed prefix and the extremal values still possible;
    GE hypotheses fail once the upper bound drops below them, LE hypotheses
    once the lower bound rises above them.
    """

    def __init__(self, p: Property, hypotheses: Sequence[Tuple[str, Value]] = ()):
        self.property = p
        self.domain = p.domain
        self.hypotheses: List[Hypothesis] = []
        self.steps = 0
        if p.is_machine:
            self._space = config_space(p)
            self._config = 0
            self._state = p.machine.initial
        elif p.is_oracle:
            oracle = p.oracle
            if not (oracle.has_hook("sup_ext") and oracle.has_hook("inf_ext")):
                raise UnsupportedBackend(f"{p.name} needs sup_ext and inf_ext hooks to be monitored")
            self._stats = oracle.initial()
        else:
            raise UnsupportedBackend(f"{p.name} is a derived property and cannot be monitored")
        for kind, value in hypotheses:
            self.add_hypothesis(kind, value)

    @property
    def pi(self) -> Value:
        p = self.property
        if p.is_machine:
            return p.machine.output(self._state)
        return p.oracle.value(self._stats)

    @property
    def upper(self) -> Value:
        if self.property.is_machine:
            return self._space.top(self._config)
        return self.property.oracle.sup_ext(self._stats)

    @property
    def lower(self) -> Value:
        if self.property.is_machine:
            return self._space.bottom(self._config)
        return self.property.oracle.inf_ext(self._stats)

    def sup_realizable(self) -> Optional[bool]:
        """Whether the upper bound is itself still achievable."""
        p = self.property
        if p.is_machine:
            upper = self.upper
            return any(compare(upper, v, self.domain) is Order.EQUAL for v in self._space.prediction(self._config))
        if p.oracle.has_hook("prediction_set"):
            return p.oracle.prediction_set(self._stats).contains(self.upper)
        return None

    def add_hypothesis(self, kind: str, value: Value) -> Hypothesis:
        kind = kind.upper()
        if kind not in ("GE", "LE"):
            raise BadParams(f"hypothesis kind must be GE or LE, got {kind!r}")
        hypothesis = Hypothesis(kind, self.domain.normalize(value))
        self.hypotheses.append(hypothesis)
        self._judge(hypothesis)
        return hypothesis

    def _judge(self, hypothesis: Hypothesis) -> bool:
        if hypothesis.rejected_at is not None:
            return False
        if hypothesis.kind == "GE":
            refuted = compare(self.upper, hypothesis.value, self.domain) in (Order.LESS, Order.INCOMPARABLE)
        else:
            refuted = compare(hypothesis.value, self.lower, self.domain) in (Order.LESS, Order.INCOMPARABLE)
        if refuted:
            hypothesis.rejected_at = self.steps
        return refuted

    def step(self, symbol: Union[int, str]) -> StepReport:
        alphabet = self.property.alphabet
        if isinstance(symbol, str):
            symbol = alphabet.index(symbol, self.steps + 1)
        elif not 0 <= symbol < len(alphabet):
            raise AlphabetMismatch(f"symbol index {symbol} is outside the alphabet")
        p = self.property
        if p.is_machine:
            self._config = self._space.delta[self._config][symbol]
            self._state = p.machine.step(self._state, symbol)
        else:
            self._stats = p.oracle.advance(self._stats, symbol)
        self.steps += 1
        updates = [i for i, h in enumerate(self.hypotheses) if self._judge(h)]
        return self.report(alphabet.label(symbol), updates)

    def report(self, symbol: Optional[str] = None, updates: Optional[List[int]] = None) -> StepReport:
        return StepReport(self.steps, symbol, self.pi, self.lower, self.upper, self.sup_realizable(), updates or [])


GhostState = GhostMonitor


def ghost_step(g: GhostMonitor, obs: Union[int, str]) -> Tuple[GhostMonitor, StepReport]:
    report = g.step(obs)
    return g, report


# ============= ABSTRACT MONITORS =============

class MonitorClass(NamedTuple):
    id: int
    representative: FiniteTrace
    frozen: bool
    gamma: float


@dataclass(frozen=True)
class AbstractMonitor:
    """
    Finite right-monotonic partition of the finite traces with one output
    value per class. Frozen classes are absorbing.
    """

    delta: float
    alphabet: Alphabet
    value_function: ValueFunction
    classes: Tuple[MonitorClass, ...]
    initial: int
    transitions: Tuple[Tuple[int, ...], ...]

    def class_of(self, trace: FiniteTrace) -> int:
        if trace.alphabet != self.alphabet:
            raise AlphabetMismatch("trace alphabet differs from the monitor alphabet")
        c = self.initial
        for a in trace.symbols:
            c = self.transitions[c][a]
        return c

    def classify_trace(self, trace: FiniteTrace) -> MonitorClass:
        return self.classes[self.class_of(trace)]

    def gamma(self, trace: FiniteTrace) -> float:
        return self.classify_trace(trace).gamma

    def frozen_classes(self) -> List[MonitorClass]:
        return [c for c in self.classes if c.frozen]

    def s_delta(self) -> List[FiniteTrace]:
        return [c.representative for c in self.classes if not c.frozen]


def _width_fn(p: Property):
    """Prediction width over finite extensions: sup minus inf of π(sr) over r ∈ Σ*."""
    d = p.domain
    if p.is_machine:
        machine = p.machine
        graph = machine.graph()
        key = d.order_key
        cache: Dict[int, float] = {}

        def machine_width(state: int) -> float:
            if state not in cache:
                outputs = [machine.output(q) for q in nx.descendants(graph, state) | {state}]
                cache[state] = value_gap(max(outputs, key=key), min(outputs, key=key), d)
            return cache[state]

        return machine_width
    if p.is_oracle:
        oracle = p.oracle
        if not (oracle.has_hook("sup_ext") and oracle.has_hook("inf_ext")):
            raise UnsupportedBackend(f"{p.name} needs sup_ext and inf_ext hooks for synthesis")
        return lambda stats: value_gap(oracle.sup_ext(stats), oracle.inf_ext(stats), d)
    raise UnsupportedBackend(f"{p.name} is a derived property; synthesis needs a finitary evaluator")


def _check_machine_finite(p: Property, wide, max_depth: int) -> None:
    machine = p.machine
    if not wide(machine.initial):
        return
    graph = machine.graph()
    nodes = {machine.initial}
    frontier = [machine.initial]
    while frontier:
        q = frontier.pop()
        for target in graph.successors(q):
            if target not in nodes and wide(target):
                nodes.add(target)
                frontier.append(target)
    sub = graph.subgraph(nodes)
    for component in nx.strongly_connected_components(sub):
        q = next(iter(component))
        if len(component) > 1 or sub.has_edge(q, q):
            raise DepthExceeded(max_depth, "the set of wide prefixes is infinite")


def synthesize(p: Property, delta: float, max_depth: Optional[int] = None) -> AbstractMonitor:
    """
    Unfold the traces of S_δ breadth-first; every child outside S_δ becomes a
    frozen class whose output is π of that child, every member of S_δ is its
    own class with output π of itself.

    Args:
        p: Machine property, or oracle property with sup_ext/inf_ext hooks
        delta: Positive width threshold
        max_depth: Deepest member of S_δ tolerated (default from AnalysisConfig)

    Returns:
        The trie-shaped AbstractMonitor

    Raises:
        DepthExceeded: S_δ has a member at max_depth, is infinite, or the
            class budget runs out
    """
    if not delta > 0:
        raise BadParams(f"delta must be positive, got {delta}")
    d = p.domain
    if not d.is_numeric:
        raise DomainNotNumeric(f"synthesis needs a numeric domain, got {d.describe()}")
    if p.value_function is None:
        raise UnsupportedBackend(f"{p.name} has no value function")
    max_depth = AnalysisConfig.get_max_depth() if max_depth is None else max_depth
    max_classes = AnalysisConfig.get_max_classes()
    width = _width_fn(p)
    alphabet = p.alphabet

    if p.is_machine:
        machine = p.machine
        wide = lambda q: width(q) >= delta - VALUE_TOLERANCE
        _check_machine_finite(p, wide, max_depth)
        start, advance = machine.initial, machine.step
        value_of = machine.output
    else:
        oracle = p.oracle
        wide = lambda stats: width(stats) >= delta - VALUE_TOLERANCE
        start, advance = oracle.initial(), oracle.advance
        value_of = oracle.value

    gamma = lambda state: d.to_number(value_of(state))
    empty = FiniteTrace(alphabet, ())
    n = len(alphabet)
    if not wide(start):
        logger.info(f"Prediction width at the empty trace is below {delta}; single frozen class")
        classes = (MonitorClass(0, empty, True, gamma(start)),)
        return AbstractMonitor(float(delta), alphabet, p.value_function, classes, 0, ((0,) * n,))

    classes: List[MonitorClass] = [MonitorClass(0, empty, False, gamma(start))]
    transitions: List[List[int]] = [[0] * n]
    queue = deque([(0, start)])
    while queue:
        cid, state = queue.popleft()
        trace = classes[cid].representative
        for a in range(n):
            child = advance(state, a)
            child_trace = trace.extend((a,))
            frozen = not wide(child)
            if not frozen and len(child_trace) >= max_depth:
                raise DepthExceeded(max_depth, f"prefix of length {len(child_trace)} is still wide")
            if len(classes) >= max_classes:
                raise DepthExceeded(len(child_trace), f"more than {max_classes} classes")
            new_id = len(classes)
            classes.append(MonitorClass(new_id, child_trace, frozen, gamma(child)))
            transitions.append([new_id] * n if frozen else [0] * n)
            transitions[cid][a] = new_id
            if not frozen:
                queue.append((new_id, child))

    logger.info(
        f"Synthesized monitor for {p.name} at delta={delta}: {len(classes)} classes, "
        f"{sum(1 for c in classes if not c.frozen)} wide prefixes"
    )
    return AbstractMonitor(
        float(delta),
        alphabet,
        p.value_function,
        tuple(classes),
        0,
        tuple(tuple(row) for row in transitions),
    )


def s_delta(p: Property, delta: float, max_depth: Optional[int] = None) -> List[FiniteTrace]:
    """The finite traces whose prediction width is at least delta."""
    return synthesize(p, delta, max_depth).s_delta()


def monitor_run(m: AbstractMonitor, w: Union[FiniteTrace, Lasso]) -> Union[List[float], float]:
    """
    Finite trace: the output of the class of every prefix, the empty one
    included. Lasso: the monitor's value function applied to that output
    sequence.
    """
    if w.alphabet != m.alphabet:
        raise AlphabetMismatch("trace alphabet differs from the monitor alphabet")
    if isinstance(w, FiniteTrace):
        c = m.initial
        gammas = [m.classes[c].gamma]
        for a in w.symbols:
            c = m.transitions[c][a]
            gammas.append(m.classes[c].gamma)
        return gammas
    transient, recurring = orbit(m.transitions, m.initial, w)
    return evaluate_outputs(
        ExtendedRealDomain(),
        m.value_function,
        [m.classes[c].gamma for c in transient],
        [m.classes[c].gamma for c in recurring],
    )


# ============= EXPORT / IMPORT =============

def _number(x: float) -> Union[float, str]:
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def _parse_number(raw: Any) -> float:
    if raw in ("inf", "-inf"):
        return float(raw)
    if isinstance(raw, bool) or not isinstance(raw, (int, float)):
        raise BadParams(f"expected a number, got {raw!r}")
    return float(raw)


def monitor_to_dict(m: AbstractMonitor) -> Dict[str, Any]:
    values = {
        "version": SPEC_FILE_VERSION,
        "delta": m.delta,
        "value_function": m.value_function.value,
        "alphabet": list(m.alphabet),
        "initial": m.initial,
        "classes": [
            {
                "id": c.id,
                "representative": c.representative.labels(),
                "frozen": c.frozen,
                "gamma": _number(c.gamma),
            }
            for c in m.classes
        ],
        "transitions": [
            {"from": c, "symbol": m.alphabet.label(a), "to": target}
            for c, row in enumerate(m.transitions)
            for a, target in enumerate(row)
        ],
    }
    return {key: values[key] for key in MONITOR_KEYS}


def _gvquote(s: str) -> str:
    return '"{}"'.format(s.replace('"', r'\"'))


def _dot_lines(m: AbstractMonitor) -> Iterator[str]:
    yield "digraph monitor {\n"
    yield "  rankdir=LR;\n"
    for c in m.classes:
        shape = "doublecircle" if c.frozen else "circle"
        label = f"{c.representative or 'ε'}\\nγ={format(c.gamma, '.6g')}"
        yield f"  {_gvquote(f'c{c.id}')} [shape={shape} label={_gvquote(label)}];\n"
    for c, row in enumerate(m.transitions):
        for a, target in enumerate(row):
            yield f"  {_gvquote(f'c{c}')} -> {_gvquote(f'c{target}')} [label={_gvquote(m.alphabet.label(a))}];\n"
    yield "}\n"


def export_monitor(m: AbstractMonitor, fmt: str = "json") -> bytes:
    if fmt == "json":
        return (json.dumps(monitor_to_dict(m), indent=2, ensure_ascii=False) + "\n").encode("utf-8")
    if fmt == "dot":
        return "".join(_dot_lines(m)).encode("utf-8")
    raise BadParams(f"unknown monitor format {fmt!r}; expected json or dot")


def import_monitor(raw: Union[bytes, str, Dict[str, Any]]) -> AbstractMonitor:
    """Rebuild a monitor from its JSON export; unknown or missing keys are rejected."""
    if isinstance(raw, (bytes, str)):
        try:
            data = json.loads(raw)
        except (UnicodeDecodeError, json.JSONDecodeError) as e:
            raise BadParams(f"monitor is not valid JSON: {e}")
    else:
        data = raw
    if not isinstance(data, dict) or set(data) != set(MONITOR_KEYS):
        found = sorted(data) if isinstance(data, dict) else type(data).__name__
        raise BadParams(f"monitor must have exactly the keys {list(MONITOR_KEYS)}, found {found}")
    if data["version"] != SPEC_FILE_VERSION:
        raise BadParams(f"unsupported monitor version {data['version']!r}")
    try:
        alphabet = Alphabet(tuple(data["alphabet"]))
        vf = ValueFunction.parse(data["value_function"])
        classes = []
        for i, entry in enumerate(data["classes"]):
            if set(entry) != {"id", "representative", "frozen", "gamma"} or entry["id"] != i:
                raise BadParams(f"malformed class entry {i}")
            classes.append(
                MonitorClass(i, FiniteTrace.of(alphabet, entry["representative"]), bool(entry["frozen"]), _parse_number(entry["gamma"]))
            )
        rows: List[List[Optional[int]]] = [[None] * len(alphabet) for _ in classes]
        for t in data["transitions"]:
            if set(t) != {"from", "symbol", "to"} or not 0 <= t["to"] < len(classes):
                raise BadParams(f"malformed transition {t!r}")
            rows[t["from"]][alphabet.index(t["symbol"])] = t["to"]
    except (TypeError, KeyError, IndexError) as e:
        raise BadParams(f"malformed monitor: {e}")
    if any(target is None for row in rows for target in row):
        raise BadParams("monitor transitions must be total")
    initial = data["initial"]
    if not isinstance(initial, int) or not 0 <= initial < len(classes):
        raise BadParams(f"initial class {initial!r} does not exist")
    return AbstractMonitor(
        _parse_number(data["delta"]),
        alphabet,
        vf,
        tuple(classes),
        initial,
        tuple(tuple(row) for row in rows),
    )
