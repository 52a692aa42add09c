"""
Moore Machines Module
Deterministic complete Moore machines over an alphabet, the orbit method for
evaluating value functions on lassos, and the product/augmentation
constructions used by the property combinators.
"""

import logging
from enum import Enum
from typing import Any, Callable, Dict, Hashable, List, Optional, Sequence, Tuple

import networkx as nx

from helper.domains import ValueDomain, Value
from helper.errors import BadParams, UnknownSymbol
from helper.traces import Alphabet, Lasso

logger = logging.getLogger(__name__)


class ValueFunction(Enum):
    INF = "inf"
    SUP = "sup"
    LIMINF = "liminf"
    LIMSUP = "limsup"

    @property
    def dual(self) -> "ValueFunction":
        return {
            ValueFunction.INF: ValueFunction.SUP,
            ValueFunction.SUP: ValueFunction.INF,
            ValueFunction.LIMINF: ValueFunction.LIMSUP,
            ValueFunction.LIMSUP: ValueFunction.LIMINF,
        }[self]

    @property
    def is_limit(self) -> bool:
        return self in (ValueFunction.LIMINF, ValueFunction.LIMSUP)

    @property
    def aggregate_mode(self) -> str:
        return "meet" if self in (ValueFunction.INF, ValueFunction.LIMINF) else "join"

    @classmethod
    def parse(cls, raw: str) -> "ValueFunction":
        try:
            return cls(str(raw).lower())
        except ValueError:
            raise BadParams(f"unknown value function {raw!r}")


def explore(initial: Hashable, step: Callable[[Any, int], Hashable], n_symbols: int) -> Tuple[List[Any], List[List[int]]]:
    """
    Breadth-first exploration of a deterministic transition function.

    Returns:
        (keys, delta): keys in discovery order (initial first) and the
        successor index table delta[i][a].
    """
    index: Dict[Hashable, int] = {initial: 0}
    keys: List[Any] = [initial]
    delta: List[List[int]] = []
    i = 0
    while i < len(keys):
        row = []
        for a in range(n_symbols):
            nxt = step(keys[i], a)
            if nxt not in index:
                index[nxt] = len(keys)
                keys.append(nxt)
            row.append(index[nxt])
        delta.append(row)
        i += 1
    return keys, delta


def orbit(delta: Sequence[Sequence[int]], initial: int, lasso: Lasso) -> Tuple[List[int], List[int]]:
    """
    Run a lasso through a transition table.

    The stem is consumed first, then the cycle is repeated until the state at
    a cycle boundary recurs. States visited before the recurring boundary are
    transient; the rest are exactly the states visited infinitely often.

    Returns:
        (transient, recurring) lists of visited state indices, the initial
        state included in the transient part.
    """
    q = initial
    visited = [q]
    for a in lasso.stem:
        q = delta[q][a]
        visited.append(q)
    boundary: Dict[int, int] = {}
    while q not in boundary:
        boundary[q] = len(visited)
        for a in lasso.cycle:
            q = delta[q][a]
            visited.append(q)
    start = boundary[q]
    return visited[:start], visited[start:]


def evaluate_outputs(domain: ValueDomain, vf: ValueFunction, transient: Sequence[Value], recurring: Sequence[Value]) -> Value:
    """Apply a value function to an eventually periodic output sequence."""
    values = list(recurring) if vf.is_limit else list(transient) + list(recurring)
    op = domain.meet if vf.aggregate_mode == "meet" else domain.join
    result = values[0]
    for v in values[1:]:
        result = op(result, v)
    return result


class FinitaryMachine:
    """
    Deterministic complete Moore machine; the output of the state reached on
    a finite trace is the finitary value of that trace.
    """

    def __init__(
        self,
        alphabet: Alphabet,
        domain: ValueDomain,
        outputs: Sequence[Value],
        delta: Sequence[Sequence[int]],
        initial: int = 0,
        names: Optional[Sequence[str]] = None,
    ):
        if not outputs:
            raise BadParams("a machine needs at least one state")
        if len(delta) != len(outputs):
            raise BadParams(f"transition table has {len(delta)} rows for {len(outputs)} states")
        n = len(outputs)
        for q, row in enumerate(delta):
            if len(row) != len(alphabet):
                raise BadParams(f"state {q} has {len(row)} transitions, expected {len(alphabet)}")
            for target in row:
                if not 0 <= target < n:
                    raise BadParams(f"state {q} has a transition to unknown state {target}")
        if not 0 <= initial < n:
            raise BadParams(f"initial state {initial} does not exist")
        if names is None:
            names = [f"q{i}" for i in range(n)]
        if len(names) != n or len(set(names)) != n:
            raise BadParams("state names must be unique, one per state")

        self.alphabet = alphabet
        self.domain = domain
        self.outputs: Tuple[Value, ...] = tuple(domain.normalize(v) for v in outputs)
        self.delta: Tuple[Tuple[int, ...], ...] = tuple(tuple(row) for row in delta)
        self.initial = initial
        self.names: Tuple[str, ...] = tuple(str(name) for name in names)
        self._graph: Optional[nx.DiGraph] = None

    @classmethod
    def build(
        cls,
        alphabet: Alphabet,
        domain: ValueDomain,
        initial_key: Hashable,
        step: Callable[[Any, int], Hashable],
        output: Callable[[Any], Value],
        name: Callable[[Any], str] = str,
    ) -> "FinitaryMachine":
        """Construct the reachable part of a machine described by keyed states."""
        keys, delta = explore(initial_key, step, len(alphabet))
        logger.debug(f"Built machine with {len(keys)} reachable states")
        return cls(alphabet, domain, [output(k) for k in keys], delta, 0, [name(k) for k in keys])

    @property
    def size(self) -> int:
        return len(self.outputs)

    def step(self, q: int, a: int) -> int:
        return self.delta[q][a]

    def run(self, symbols: Sequence[int], start: Optional[int] = None) -> int:
        q = self.initial if start is None else start
        for pos, a in enumerate(symbols, start=1):
            if not 0 <= a < len(self.alphabet):
                raise UnknownSymbol(str(a), pos)
            q = self.delta[q][a]
        return q

    def output(self, q: int) -> Value:
        return self.outputs[q]

    def with_domain(self, domain: ValueDomain) -> "FinitaryMachine":
        """Same states and outputs, read in another (e.g. dual) domain."""
        return FinitaryMachine(self.alphabet, domain, self.outputs, self.delta, self.initial, self.names)

    def graph(self) -> nx.DiGraph:
        """State graph; each edge carries the sorted list of its symbols."""
        if self._graph is None:
            g = nx.DiGraph()
            g.add_nodes_from(range(self.size))
            for q, row in enumerate(self.delta):
                for a, target in enumerate(row):
                    if g.has_edge(q, target):
                        g[q][target]["symbols"].append(a)
                    else:
                        g.add_edge(q, target, symbols=[a])
            self._graph = g
        return self._graph

    def lasso_outputs(self, lasso: Lasso) -> Tuple[List[Value], List[Value]]:
        transient, recurring = orbit(self.delta, self.initial, lasso)
        return [self.outputs[q] for q in transient], [self.outputs[q] for q in recurring]

    def evaluate_lasso(self, lasso: Lasso, vf: ValueFunction) -> Value:
        transient, recurring = self.lasso_outputs(lasso)
        return evaluate_outputs(self.domain, vf, transient, recurring)


def product_machine(
    machines: Sequence[FinitaryMachine],
    combine: Callable[[Sequence[Value]], Value],
    domain: ValueDomain,
) -> FinitaryMachine:
    """Synchronous product; the output of a tuple state combines the components' outputs."""
    alphabet = machines[0].alphabet
    return FinitaryMachine.build(
        alphabet,
        domain,
        tuple(m.initial for m in machines),
        lambda qs, a: tuple(m.step(q, a) for m, q in zip(machines, qs)),
        lambda qs: combine([m.output(q) for m, q in zip(machines, qs)]),
        lambda qs: "(" + ",".join(m.names[q] for m, q in zip(machines, qs)) + ")",
    )


def running_aggregate_machine(machine: FinitaryMachine, mode: str) -> FinitaryMachine:
    """States (q, running value); outputs the running meet or join of the outputs seen."""
    domain = machine.domain
    op = domain.meet if mode == "meet" else domain.join
    q0 = machine.initial
    return FinitaryMachine.build(
        machine.alphabet,
        domain,
        (q0, machine.output(q0)),
        lambda key, a: (machine.step(key[0], a), op(key[1], machine.output(machine.step(key[0], a)))),
        lambda key: key[1],
        lambda key: f"({machine.names[key[0]]},{domain.format_value(key[1])})",
    )


def step_counter_machine(machine: FinitaryMachine, bound: int, padding: Value) -> FinitaryMachine:
    """
    Pair each state with min(|s|, bound); traces shorter than bound output
    the padding value instead of the machine output.
    """
    return FinitaryMachine.build(
        machine.alphabet,
        machine.domain,
        (machine.initial, 0),
        lambda key, a: (machine.step(key[0], a), min(key[1] + 1, bound)),
        lambda key: padding if key[1] < bound else machine.output(key[0]),
        lambda key: f"({machine.names[key[0]]},{key[1]})",
    )
