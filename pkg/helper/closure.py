"""
Closure Module
Configuration spaces of machine-backed properties, per-prefix top/bottom
values and prediction sets, and the safety and co-safety closures.
"""

import logging
import threading
import weakref
from collections import deque
from typing import Any, Dict, FrozenSet, Iterable, List, NamedTuple, Optional, Sequence, Set, Tuple, Union

import networkx as nx

from constants.constants import CLOSURE_HORIZON_PASSES
from helper.domains import ValueDomain, Value, sorted_values, values_equal
from helper.errors import BadParams, UnsupportedBackend, UnsupportedDomain
from helper.machines import FinitaryMachine, ValueFunction, explore
from helper.props import (
    DerivedBackend,
    OracleFinitary,
    PredictionSet,
    Property,
    derived_property,
    machine_property,
)
from helper.traces import FiniteTrace, Lasso, normalize

logger = logging.getLogger(__name__)


class Config(NamedTuple):
    """Machine state plus the running meet (inf) or join (sup) of the outputs seen."""

    state: int
    aggregate: Optional[Value] = None


class Component(NamedTuple):
    """A recurring strongly connected component of the configuration graph."""

    nodes: FrozenSet[int]
    entry: int
    achievable: Tuple[Value, ...]
    prediction: Tuple[Value, ...]


class ConfigSpace:
    """
    Reachable configurations of a machine under one value function.

    For inf/sup a configuration carries the running aggregate; for
    liminf/limsup the continuation value ignores the prefix and a
    configuration is just the machine state. A value x is achievable inside a
    recurring component K when some infinite run can settle in K with value
    x: for inf/sup that is the (constant) aggregate of K, for liminf a node
    of output x lying on a cycle of K restricted to outputs >= x, and dually
    for limsup.
    """

    def __init__(self, machine: FinitaryMachine, vf: ValueFunction):
        domain = machine.domain
        if not domain.is_total:
            raise UnsupportedDomain(f"exact analysis needs a totally ordered domain, got {domain.describe()}")
        self.machine = machine
        self.value_function = vf
        self.domain: ValueDomain = domain
        self.alphabet = machine.alphabet

        if vf.is_limit:
            initial = Config(machine.initial)
            step = lambda c, a: Config(machine.step(c.state, a))
        else:
            op = domain.meet if vf.aggregate_mode == "meet" else domain.join
            q0 = machine.initial
            initial = Config(q0, machine.output(q0))

            def step(c, a):
                q = machine.step(c.state, a)
                return Config(q, op(c.aggregate, machine.output(q)))

        self.configs, self.delta = explore(initial, step, len(self.alphabet))
        self.index = {c: i for i, c in enumerate(self.configs)}

        graph = nx.DiGraph()
        graph.add_nodes_from(range(len(self.configs)))
        for v, row in enumerate(self.delta):
            for target in row:
                graph.add_edge(v, target)
        self.graph = graph

        condensed = nx.condensation(graph)
        mapping = condensed.graph["mapping"]
        achievable: Dict[int, List[Value]] = {}
        for scc in condensed.nodes:
            members = condensed.nodes[scc]["members"]
            if self._is_cyclic(graph, members):
                achievable[scc] = self._achievable(members)

        reach: Dict[int, List[Value]] = {}
        for scc in reversed(list(nx.topological_sort(condensed))):
            values = list(achievable.get(scc, []))
            for succ in condensed.successors(scc):
                values.extend(reach[succ])
            reach[scc] = sorted_values(values, domain)

        self._scc_of = [mapping[v] for v in range(len(self.configs))]
        self._reach = reach
        self.components: List[Component] = sorted(
            (
                Component(
                    frozenset(condensed.nodes[scc]["members"]),
                    min(condensed.nodes[scc]["members"]),
                    tuple(achievable[scc]),
                    tuple(reach[scc]),
                )
                for scc in achievable
            ),
            key=lambda comp: comp.entry,
        )
        logger.info(
            f"Config space ({vf.value}) of a {machine.size}-state machine: "
            f"{len(self.configs)} configurations, {len(self.components)} recurring components"
        )

    @staticmethod
    def _is_cyclic(graph: nx.DiGraph, nodes: Iterable[int]) -> bool:
        nodes = list(nodes)
        return len(nodes) > 1 or graph.has_edge(nodes[0], nodes[0])

    def output(self, v: int) -> Value:
        return self.machine.output(self.configs[v].state)

    def _keep(self, v: int, threshold: Value) -> bool:
        key = self.domain.order_key
        if self.value_function is ValueFunction.LIMINF:
            return key(self.output(v)) >= key(threshold)
        return key(self.output(v)) <= key(threshold)

    def _limit_subcomponent(self, nodes: Iterable[int], x: Value) -> Optional[Set[int]]:
        """Cyclic component of the nodes kept by threshold x that contains an x-valued node."""
        kept = self.graph.subgraph(v for v in nodes if self._keep(v, x))
        for component in nx.strongly_connected_components(kept):
            if self._is_cyclic(kept, component) and any(values_equal(self.output(v), x, self.domain) for v in component):
                return set(component)
        return None

    def _achievable(self, members: Iterable[int]) -> List[Value]:
        members = list(members)
        if not self.value_function.is_limit:
            return [self.configs[members[0]].aggregate]
        candidates = sorted_values((self.output(v) for v in members), self.domain)
        return [x for x in candidates if self._limit_subcomponent(members, x) is not None]

    def recurrent_nodes(self, component: Component, x: Value) -> Set[int]:
        """Nodes an infinite run settling in `component` with value x may visit forever."""
        if not self.value_function.is_limit:
            return set(component.nodes)
        nodes = self._limit_subcomponent(component.nodes, x)
        if nodes is None:
            raise BadParams(f"{self.domain.format_value(x)} is not achievable in the component")
        return nodes

    # ============= PER-CONFIGURATION VALUES =============

    def after(self, symbols: Sequence[int], start: int = 0) -> int:
        v = start
        for a in symbols:
            v = self.delta[v][a]
        return v

    def prediction(self, v: int) -> Tuple[Value, ...]:
        return tuple(self._reach[self._scc_of[v]])

    def top(self, v: int) -> Value:
        return self.prediction(v)[-1]

    def bottom(self, v: int) -> Value:
        return self.prediction(v)[0]

    def component_of(self, v: int) -> Optional[Component]:
        for component in self.components:
            if v in component.nodes:
                return component
        return None

    # ============= WITNESS PATHS =============

    def path(self, source: int, targets: Set[int], allowed: Optional[Set[int]] = None, nonempty: bool = False) -> List[int]:
        """Shortest symbol sequence from source into targets, exploring symbols in alphabet order."""
        if not nonempty and source in targets:
            return []
        parent: Dict[int, Tuple[int, int]] = {}
        queue = deque([source])
        while queue:
            v = queue.popleft()
            for a, target in enumerate(self.delta[v]):
                if allowed is not None and target not in allowed:
                    continue
                if target in targets:
                    symbols = [a]
                    node = v
                    while node != source:
                        node, symbol = parent[node]
                        symbols.append(symbol)
                    return symbols[::-1]
                if target in parent or target == source:
                    continue
                parent[target] = (v, a)
                queue.append(target)
        raise BadParams("no path between the requested configurations")

    def lasso_through(self, nodes: Set[int]) -> Lasso:
        """
        Shortest stem into the first node of `nodes`, followed by a closed walk
        that visits every node of `nodes` (nearest unvisited node first).
        """
        entry = min(nodes)
        stem = self.path(0, {entry})
        cycle: List[int] = []
        current = entry
        unvisited = set(nodes) - {entry}
        while unvisited:
            leg = self.path(current, unvisited, nodes)
            for a in leg:
                current = self.delta[current][a]
                unvisited.discard(current)
            cycle.extend(leg)
        cycle.extend(self.path(current, {entry}, nodes, nonempty=not cycle))
        return normalize(Lasso(self.alphabet, tuple(stem), tuple(cycle)))

    def lasso_configs(self, lasso: Lasso) -> Tuple[List[int], List[int]]:
        """Configurations visited by the lasso: transient part, then the recurring part."""
        v = 0
        visited = [v]
        for a in lasso.stem:
            v = self.delta[v][a]
            visited.append(v)
        boundary: Dict[int, int] = {}
        while v not in boundary:
            boundary[v] = len(visited)
            for a in lasso.cycle:
                v = self.delta[v][a]
                visited.append(v)
        start = boundary[v]
        return visited[:start], visited[start:]


# ============= CACHE =============

_SPACE_LOCK = threading.RLock()
_SPACES: "weakref.WeakKeyDictionary[FinitaryMachine, Dict[Any, Any]]" = weakref.WeakKeyDictionary()


def _cached(machine: FinitaryMachine, key: Any, build):
    with _SPACE_LOCK:
        entries = _SPACES.setdefault(machine, {})
        if key not in entries:
            entries[key] = build()
        return entries[key]


def config_space(p: Property) -> ConfigSpace:
    """The configuration space of a machine-backed property (built once per machine)."""
    machine = p.machine
    vf = p.value_function
    return _cached(machine, vf, lambda: ConfigSpace(machine, vf))


def config_of(p: Property, s: FiniteTrace) -> Config:
    space = config_space(p)
    return space.configs[space.after(s.symbols)]


def _config_index(space: ConfigSpace, c: Union[Config, FiniteTrace]) -> int:
    if isinstance(c, FiniteTrace):
        return space.after(c.symbols)
    if c not in space.index:
        raise BadParams(f"{c} is not a reachable configuration")
    return space.index[c]


def _oracle_stats(oracle: OracleFinitary, c: Any):
    if isinstance(c, FiniteTrace):
        return oracle.stats_of(c.symbols)
    return c


# ============= TOP / BOTTOM / PREDICTIONS =============

def top_value(p: Property, c: Union[Config, FiniteTrace, Any]) -> Value:
    """
    Least upper bound of the property over all infinite continuations.

    Args:
        p: Machine- or oracle-backed property
        c: A Config, a finite trace, or (oracles) a statistics record

    Returns:
        The exact supremum; oracles answer through their sup_ext hook
    """
    if p.is_machine:
        space = config_space(p)
        return space.top(_config_index(space, c))
    if p.is_oracle and p.oracle.has_hook("sup_ext"):
        return p.oracle.sup_ext(_oracle_stats(p.oracle, c))
    raise UnsupportedBackend(f"{p.name} has no way to compute top values")


def bottom_value(p: Property, c: Union[Config, FiniteTrace, Any]) -> Value:
    if p.is_machine:
        space = config_space(p)
        return space.bottom(_config_index(space, c))
    if p.is_oracle and p.oracle.has_hook("inf_ext"):
        return p.oracle.inf_ext(_oracle_stats(p.oracle, c))
    raise UnsupportedBackend(f"{p.name} has no way to compute bottom values")


def prediction_set(p: Property, c: Union[Config, FiniteTrace, Any]) -> PredictionSet:
    """The set of values still achievable by infinite continuations."""
    if p.is_machine:
        space = config_space(p)
        return PredictionSet(p.domain, frozenset(space.prediction(_config_index(space, c))))
    if p.is_oracle and p.oracle.has_hook("prediction_set"):
        return p.oracle.prediction_set(_oracle_stats(p.oracle, c))
    raise UnsupportedBackend(f"{p.name} has no prediction-set rule")


# ============= CLOSURES =============

class ClosureOracle(OracleFinitary):
    """
    Safety (or co-safety) closure of an oracle-backed property: the finitary
    value is the inner sup_ext (inf_ext), aggregated with inf (sup).
    """

    def __init__(self, inner: OracleFinitary, kind: str):
        if kind not in ("safety", "cosafety"):
            raise BadParams(f"closure kind must be 'safety' or 'cosafety', got {kind!r}")
        bound = "sup_ext" if kind == "safety" else "inf_ext"
        if not inner.has_hook(bound):
            raise UnsupportedBackend(f"{kind} closure needs the {bound} hook")
        super().__init__(inner.alphabet, inner.domain)
        self.inner = inner
        self.kind = kind
        self.representations = frozenset({ValueFunction.INF if kind == "safety" else ValueFunction.SUP})
        self._bound = bound
        self._lasso_hook = "safety_closure_lasso" if kind == "safety" else "cosafety_closure_lasso"

    def initial(self):
        return self.inner.initial()

    def advance(self, stats, symbol):
        return self.inner.advance(stats, symbol)

    def value(self, stats):
        return getattr(self.inner, self._bound)(stats)

    def sup_ext(self, stats):
        if self.kind != "safety":
            raise NotImplementedError
        return self.inner.sup_ext(stats)

    def inf_ext(self, stats):
        if self.kind != "cosafety":
            raise NotImplementedError
        return self.inner.inf_ext(stats)

    def lasso_value(self, lasso):
        if self.inner.has_hook(self._lasso_hook):
            return getattr(self.inner, self._lasso_hook)(lasso)
        horizon = len(lasso.stem) + CLOSURE_HORIZON_PASSES * len(lasso.cycle)
        logger.warning(f"No analytic {self.kind} closure rule; evaluating {horizon} prefixes of {lasso}")
        op = self.domain.meet if self.kind == "safety" else self.domain.join
        stats = self.inner.initial()
        result = self.value(stats)
        for i in range(horizon):
            stats = self.inner.advance(stats, lasso.symbol_at(i))
            result = op(result, self.value(stats))
        return result

    def safety_closure_lasso(self, lasso):
        if self.kind != "safety":
            raise NotImplementedError
        return self.lasso_value(lasso)

    def cosafety_closure_lasso(self, lasso):
        if self.kind != "cosafety":
            raise NotImplementedError
        return self.lasso_value(lasso)

    def alpha_min(self):
        if self.kind != "safety":
            raise NotImplementedError
        return 0.0

    def beta_min(self):
        if self.kind != "cosafety":
            raise NotImplementedError
        return 0.0

    def has_hook(self, name: str) -> bool:
        if name == "lasso_value":
            return True
        if self.kind == "safety":
            return name in ("sup_ext", "safety_closure_lasso", "alpha_min")
        return name in ("inf_ext", "cosafety_closure_lasso", "beta_min")


def _closure(p: Property, kind: str) -> Property:
    name = f"{kind}_closure({p.name})"
    descriptor = {"closure": kind, "of": p.describe()}
    vf = ValueFunction.INF if kind == "safety" else ValueFunction.SUP

    if p.is_machine:
        def build():
            space = config_space(p)
            extreme = space.top if kind == "safety" else space.bottom
            machine = p.machine
            names = [
                machine.names[c.state] if c.aggregate is None else f"({machine.names[c.state]},{p.domain.format_value(c.aggregate)})"
                for c in space.configs
            ]
            closed = FinitaryMachine(
                p.alphabet,
                p.domain,
                [extreme(v) for v in range(len(space.configs))],
                space.delta,
                0,
                names,
            )
            logger.info(f"{kind} closure of {p.name} has {closed.size} states")
            return closed

        closed = _cached(p.machine, (kind, p.value_function), build)
        return machine_property(closed, vf, name, descriptor)

    if p.is_oracle:
        oracle = ClosureOracle(p.oracle, kind)
        return Property(oracle, vf, p.domain, p.alphabet, name, descriptor)

    backend = p.backend
    rule = backend.safety_closure_fn if kind == "safety" else backend.cosafety_closure_fn
    if rule is None:
        raise UnsupportedBackend(f"{p.name} ({backend.rule}) has no {kind} closure rule")
    closed = DerivedBackend(
        rule=f"{kind}_closure",
        lasso_fn=rule,
        safety_closure_fn=rule if kind == "safety" else None,
        cosafety_closure_fn=rule if kind == "cosafety" else None,
        sources=(p.describe(),),
    )
    result = derived_property(closed, p.domain, p.alphabet, name)
    return Property(result.backend, vf, p.domain, p.alphabet, name, result.descriptor)


def safety_closure(p: Property) -> Property:
    """The least safety property bounding p from above: Φ*(f) = inf over prefixes of the top value."""
    return _closure(p, "safety")


def cosafety_closure(p: Property) -> Property:
    """The greatest co-safety property bounding p from below."""
    return _closure(p, "cosafety")
