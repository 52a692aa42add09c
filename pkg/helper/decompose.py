"""
Decomposition Module
Safety-liveness (pointwise min), co-safety-co-liveness (pointwise max) and
liveness-liveness decompositions, plus their verification on lasso samples.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import networkx as nx

from constants.constants import CHECK_COLIVE, CHECK_COSAFE, CHECK_LIVE, CHECK_SAFE, DECOMPOSITION_MODES
from helper.classify import Verdict, classify
from helper.closure import ConfigSpace, config_space, cosafety_closure, safety_closure
from helper.domains import Value, values_equal
from helper.errors import BadParams, UnaryAlphabet
from helper.props import DerivedBackend, Property, derived_property, eval_on_lasso
from helper.traces import Lasso, normalize
from helper.utils import AnalysisConfig, make_rng, random_lasso

logger = logging.getLogger(__name__)

MAX_SIMPLE_CYCLES = 200


def _closure_of_part(space: ConfigSpace, psi: Callable[[Value, Value, Value], Value], upper: bool) -> Callable[[Lasso], Value]:
    """
    Exact closure of a part Ψ(f) = psi(Φ(f), Φ*(f), Φ_*(f)) of a machine
    property: after a prefix ending in configuration c, Ψ can still reach
    psi(x, top(K), bottom(K)) for every recurring component K reachable from c
    and every x achievable in K.
    """
    d = space.domain
    key = d.order_key
    pick = max if upper else min
    best_in = {
        component.entry: pick(
            (psi(x, component.prediction[-1], component.prediction[0]) for x in component.achievable),
            key=key,
        )
        for component in space.components
    }
    memo: Dict[int, Value] = {}

    def reach(v: int) -> Value:
        if v not in memo:
            nodes = nx.descendants(space.graph, v) | {v}
            memo[v] = pick((value for entry, value in best_in.items() if entry in nodes), key=key)
        return memo[v]

    op = d.meet if upper else d.join

    def closure(lasso: Lasso) -> Value:
        transient, recurring = space.lasso_configs(lasso)
        result = reach(transient[0])
        for v in transient[1:] + recurring:
            result = op(result, reach(v))
        return result

    return closure


def safety_liveness(p: Property) -> Tuple[Property, Property]:
    """
    Φ = min(Φ*, Ψ) with Φ* the safety closure and Ψ(f) = Φ(f) where the
    closure differs from Φ, ⊤ elsewhere.
    """
    safety = safety_closure(p)
    d = p.domain
    top = d.top()

    def liveness_value(lasso: Lasso) -> Value:
        value = eval_on_lasso(p, lasso)
        return value if not values_equal(eval_on_lasso(safety, lasso), value, d) else top

    closure_fn = None
    if p.is_machine:
        closure_fn = _closure_of_part(
            config_space(p),
            lambda x, upper, lower: x if not values_equal(upper, x, d) else top,
            upper=True,
        )
    backend = DerivedBackend(
        rule="liveness_part",
        lasso_fn=liveness_value,
        safety_closure_fn=closure_fn,
        sources=(p.describe(),),
    )
    return safety, derived_property(backend, d, p.alphabet, f"liveness_part({p.name})")


def cosafety_coliveness(p: Property) -> Tuple[Property, Property]:
    """Φ = max(Φ_*, Ψ′) with Ψ′(f) = Φ(f) where the co-safety closure differs, ⊥ elsewhere."""
    cosafety = cosafety_closure(p)
    d = p.domain
    bottom = d.bottom()

    def coliveness_value(lasso: Lasso) -> Value:
        value = eval_on_lasso(p, lasso)
        return value if not values_equal(eval_on_lasso(cosafety, lasso), value, d) else bottom

    closure_fn = None
    if p.is_machine:
        closure_fn = _closure_of_part(
            config_space(p),
            lambda x, upper, lower: x if not values_equal(lower, x, d) else bottom,
            upper=False,
        )
    backend = DerivedBackend(
        rule="coliveness_part",
        lasso_fn=coliveness_value,
        cosafety_closure_fn=closure_fn,
        sources=(p.describe(),),
    )
    return cosafety, derived_property(backend, d, p.alphabet, f"coliveness_part({p.name})")


def liveness_liveness(p: Property, a1: str, a2: str) -> Tuple[Property, Property]:
    """
    Φ = min(Ψ1, Ψ2) where Ψi is ⊤ on traces ending in ai^ω and Φ elsewhere.
    Every prefix extends to a trace ending in ai^ω, so both safety closures are ⊤.
    """
    if a1 == a2 or len(p.alphabet) < 2:
        raise UnaryAlphabet("liveness-liveness decomposition needs two distinct symbols")
    d = p.domain
    top = d.top()
    parts = []
    for label in (a1, a2):
        symbol = p.alphabet.index(label)

        def part_value(lasso: Lasso, symbol=symbol) -> Value:
            if normalize(lasso).cycle == (symbol,):
                return top
            return eval_on_lasso(p, lasso)

        backend = DerivedBackend(
            rule=f"liveness_except_{label}",
            lasso_fn=part_value,
            safety_closure_fn=lambda lasso: top,
            sources=(p.describe(),),
        )
        parts.append(derived_property(backend, d, p.alphabet, f"live_{label}({p.name})"))
    return parts[0], parts[1]


def decompose(p: Property, mode: str, symbols: Optional[Sequence[str]] = None) -> Tuple[Property, Property]:
    if mode == "safety-liveness":
        return safety_liveness(p)
    if mode == "cosafety-coliveness":
        return cosafety_coliveness(p)
    if mode == "live-live":
        if symbols is None:
            if len(p.alphabet) < 2:
                raise UnaryAlphabet("liveness-liveness decomposition needs two distinct symbols")
            symbols = (p.alphabet.label(0), p.alphabet.label(1))
        if len(symbols) != 2:
            raise BadParams("live-live mode needs exactly two symbols")
        return liveness_liveness(p, symbols[0], symbols[1])
    raise BadParams(f"unknown decomposition mode {mode!r}; expected one of {', '.join(DECOMPOSITION_MODES)}")


# ============= VERIFICATION =============

@dataclass
class Counterexample:
    lasso: Lasso
    expected: Value
    got: Value


@dataclass
class DecompositionReport:
    mode: str
    lassos_checked: int = 0
    counterexamples: List[Counterexample] = field(default_factory=list)
    part_verdicts: Dict[str, Dict[str, Verdict]] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        if self.counterexamples:
            return False
        return not any(v.is_no for verdicts in self.part_verdicts.values() for v in verdicts.values())


def structural_lassos(p: Property) -> List[Lasso]:
    """Simple-cycle lassos of the configuration graph plus one lasso per achievable value of each component."""
    space = config_space(p)
    result = []
    for component in space.components:
        for x in component.achievable:
            result.append(space.lasso_through(space.recurrent_nodes(component, x)))
    for i, cycle in enumerate(nx.simple_cycles(space.graph)):
        if i >= MAX_SIMPLE_CYCLES:
            break
        entry = min(cycle)
        start = cycle.index(entry)
        ordered = cycle[start:] + cycle[:start]
        symbols = []
        for u, v in zip(ordered, ordered[1:] + ordered[:1]):
            symbols.append(space.delta[u].index(v))
        stem = space.path(0, {entry})
        result.append(normalize(Lasso(p.alphabet, tuple(stem), tuple(symbols))))
    return result


_EXPECTED_VERDICTS = {
    "safety-liveness": ((CHECK_SAFE,), (CHECK_LIVE,)),
    "cosafety-coliveness": ((CHECK_COSAFE,), (CHECK_COLIVE,)),
    "live-live": ((CHECK_LIVE,), (CHECK_LIVE,)),
}


def verify_decomposition(
    p: Property,
    parts: Tuple[Property, Property],
    mode: str,
    samples: int = 100,
    seed: Optional[int] = None,
    extra: Sequence[Lasso] = (),
    budget: Optional[int] = None,
) -> DecompositionReport:
    """
    Check the pointwise identity (min for safety-liveness and live-live, max
    for cosafety-coliveness) on random lassos, the structural lassos of the
    property's configuration graph and any extra lassos; then classify both
    parts and record the verdicts the decomposition promises.
    """
    if mode not in _EXPECTED_VERDICTS:
        raise BadParams(f"unknown decomposition mode {mode!r}")
    d = p.domain
    budget = AnalysisConfig.get_budget() if budget is None else budget
    rng = make_rng(seed)
    lassos = [random_lasso(p.alphabet, rng, budget, budget) for _ in range(samples)]
    if p.is_machine:
        lassos.extend(structural_lassos(p))
    lassos.extend(extra)

    op = d.join if mode == "cosafety-coliveness" else d.meet
    report = DecompositionReport(mode)
    seen = set()
    for lasso in lassos:
        if lasso in seen:
            continue
        seen.add(lasso)
        expected = eval_on_lasso(p, lasso)
        got = op(eval_on_lasso(parts[0], lasso), eval_on_lasso(parts[1], lasso))
        if not values_equal(expected, got, d):
            report.counterexamples.append(Counterexample(lasso, expected, got))
    report.lassos_checked = len(seen)

    for part, checks in zip(parts, _EXPECTED_VERDICTS[mode]):
        classification = classify(part, budget, seed=seed)
        report.part_verdicts[part.name] = {
            check: classification.verdicts[check] for check in checks if check in classification.verdicts
        }
    logger.info(
        f"Verified {mode} decomposition of {p.name} on {report.lassos_checked} lassos: "
        f"{len(report.counterexamples)} counterexamples"
    )
    return report
