"""
Classification Module
Safety, co-safety, liveness, co-liveness, multi-liveness, sup-closedness,
verdict-safety/-liveness and approximate (co-)safety of a property.

Machine-backed properties are decided exactly on the configuration graph:
the value Φ(f) of any trace is achieved in the recurring component K its run
settles in, and along that run the safety closure Φ*(f) equals the top
value of K (top values never increase along a run and are constant on a
component), so (Φ, Φ*) ranges exactly over the pairs (x, top(K)) with x
achievable in K. Oracle-backed and derived properties are checked on a
bounded lasso sample and never receive a Yes from sampling alone.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, NamedTuple, Optional, Sequence, Tuple

from constants.constants import (
    CHECK_COLIVE,
    CHECK_COSAFE,
    CHECK_LIVE,
    CHECK_MULTILIVE,
    CHECK_SAFE,
    CHECK_SUP_CLOSED,
    CHECK_VERDICT_LIVE,
    CHECK_VERDICT_SAFE,
    EXIT_BOUNDED_ONLY,
    EXIT_OK,
    EXIT_VERDICT_NO,
    REPORT_CHECKS,
)
from helper.closure import Component, ConfigSpace, config_space
from helper.domains import Order, ValueDomain, Value, value_gap, values_equal
from helper.errors import BadParams, DomainNotNumeric, UnsupportedBackend
from helper.machines import ValueFunction
from helper.props import Property, eval_on_lasso
from helper.traces import FiniteTrace, Lasso
from helper.utils import AnalysisConfig, enumerate_finite_traces, lasso_sample, make_rng

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Verdict:
    status: str
    budget: Optional[int] = None

    @classmethod
    def bounded(cls, budget: int) -> "Verdict":
        return cls("NoViolationFoundUpTo", budget)

    @property
    def is_yes(self) -> bool:
        return self.status == "Yes"

    @property
    def is_no(self) -> bool:
        return self.status == "No"

    @property
    def is_bounded(self) -> bool:
        return self.status == "NoViolationFoundUpTo"

    def __str__(self) -> str:
        return f"{self.status}({self.budget})" if self.is_bounded else self.status


YES = Verdict("Yes")
NO = Verdict("No")


@dataclass(frozen=True)
class Witness:
    """Counterexample to one check: a lasso (or, for sup-closedness, a finite trace)."""

    lasso: Optional[Lasso] = None
    trace: Optional[FiniteTrace] = None
    value: Optional[Value] = None
    detail: str = ""

    def describe(self, domain: ValueDomain) -> str:
        where = f"lasso \"{self.lasso}\"" if self.lasso is not None else f"trace \"{self.trace}\""
        value = f" value={domain.format_value(self.value)}" if self.value is not None else ""
        detail = f" ({self.detail})" if self.detail else ""
        return f"{where}{value}{detail}"


@dataclass
class ClassificationReport:
    property_name: str
    domain: ValueDomain
    method: str
    budget: Optional[int] = None
    verdicts: Dict[str, Verdict] = field(default_factory=dict)
    witnesses: Dict[str, Witness] = field(default_factory=dict)
    skipped: Dict[str, str] = field(default_factory=dict)
    alpha_min: Optional[float] = None
    beta_min: Optional[float] = None

    def verdict(self, check: str) -> Optional[Verdict]:
        return self.verdicts.get(check)

    def lines(self) -> List[str]:
        """Report as text lines in a fixed field order."""
        out = [f"property: {self.property_name}", f"method: {self.method}"]
        if self.budget is not None:
            out.append(f"budget: {self.budget}")
        for check in REPORT_CHECKS:
            if check in self.verdicts:
                out.append(f"{check}: {self.verdicts[check]}")
                if check in self.witnesses:
                    out.append(f"  witness: {self.witnesses[check].describe(self.domain)}")
            elif check in self.skipped:
                out.append(f"{check}: skipped ({self.skipped[check]})")
        for label, bound in (("alpha_min", self.alpha_min), ("beta_min", self.beta_min)):
            if bound is not None:
                out.append(f"{label}: {_format_number(bound)}")
        return out

    def exit_code(self, expect: Optional[Sequence[str]] = None) -> int:
        """
        Without expectations: 0 when every verdict is exact, 2 otherwise.
        With expectations: 1 when an expected check is No, 2 when one is only
        bounded or skipped, 0 when all are Yes.
        """
        if expect:
            selected = [self.verdicts.get(check) for check in expect]
            if any(v is not None and v.is_no for v in selected):
                return EXIT_VERDICT_NO
            if any(v is None or v.is_bounded for v in selected):
                return EXIT_BOUNDED_ONLY
            return EXIT_OK
        if self.skipped or any(v.is_bounded for v in self.verdicts.values()):
            return EXIT_BOUNDED_ONLY
        return EXIT_OK


def _format_number(x: float) -> str:
    if x == float("inf"):
        return "inf"
    return format(x, ".12g")


class AlphaResult(NamedTuple):
    verdict: Verdict
    bound: Optional[float]
    witness: Optional[Witness]


def _greater(a: Value, b: Value, d: ValueDomain) -> bool:
    return d.raw_compare(a, b) is Order.GREATER


# ============= EXACT (MACHINE) =============

class _Pair(NamedTuple):
    component: Component
    value: Value

    @property
    def top(self) -> Value:
        return self.component.prediction[-1]

    @property
    def bottom(self) -> Value:
        return self.component.prediction[0]


def _pairs(space: ConfigSpace) -> List[_Pair]:
    return [_Pair(component, x) for component in space.components for x in component.achievable]


def _pair_witness(space: ConfigSpace, pair: _Pair, detail: str) -> Witness:
    lasso = space.lasso_through(space.recurrent_nodes(pair.component, pair.value))
    return Witness(lasso=lasso, value=pair.value, detail=detail)


def _exact_checks(p: Property, space: ConfigSpace) -> Tuple[Dict[str, Verdict], Dict[str, Witness]]:
    d = p.domain
    fmt = d.format_value
    bottom = d.bottom()
    initial_range = space.prediction(0)

    def verdict_live_gap(pair: _Pair) -> Optional[Value]:
        for v in initial_range:
            if _greater(v, pair.value, d) and not any(values_equal(v, u, d) for u in pair.component.prediction):
                return v
        return None

    rules: Dict[str, Callable[[_Pair], Optional[str]]] = {
        CHECK_SAFE: lambda pr: None if values_equal(pr.value, pr.top, d) else f"safety closure {fmt(pr.top)}",
        CHECK_COSAFE: lambda pr: None if values_equal(pr.value, pr.bottom, d) else f"co-safety closure {fmt(pr.bottom)}",
        CHECK_LIVE: lambda pr: (
            f"safety closure {fmt(pr.top)} does not exceed the value"
            if not d.stands_for_top(pr.value) and values_equal(pr.top, pr.value, d)
            else None
        ),
        CHECK_COLIVE: lambda pr: (
            f"co-safety closure {fmt(pr.bottom)} is not below the value"
            if not d.stands_for_bottom(pr.value) and values_equal(pr.bottom, pr.value, d)
            else None
        ),
        CHECK_MULTILIVE: lambda pr: f"safety closure is {fmt(bottom)}" if values_equal(pr.top, bottom, d) else None,
        CHECK_VERDICT_SAFE: lambda pr: (
            None if values_equal(pr.value, pr.top, d) else f"join of the limit prediction set is {fmt(pr.top)}"
        ),
    }

    verdicts: Dict[str, Verdict] = {}
    witnesses: Dict[str, Witness] = {}
    pairs = _pairs(space)
    for check, rule in rules.items():
        verdicts[check] = YES
        for pair in pairs:
            detail = rule(pair)
            if detail is not None:
                verdicts[check] = NO
                witnesses[check] = _pair_witness(space, pair, detail)
                break

    verdicts[CHECK_VERDICT_LIVE] = YES
    for pair in pairs:
        rejected = verdict_live_gap(pair)
        if rejected is not None:
            verdicts[CHECK_VERDICT_LIVE] = NO
            witnesses[CHECK_VERDICT_LIVE] = _pair_witness(space, pair, f"value {fmt(rejected)} becomes impossible")
            break

    # Finite prediction sets always contain their join.
    verdicts[CHECK_SUP_CLOSED] = YES
    return verdicts, witnesses


def _exact_gaps(p: Property, space: ConfigSpace, upper: bool) -> Tuple[float, Optional[_Pair]]:
    best, arg = 0.0, None
    for pair in _pairs(space):
        gap = value_gap(pair.top, pair.value, p.domain) if upper else value_gap(pair.value, pair.bottom, p.domain)
        if arg is None or gap > best:
            best, arg = gap, pair
    return best, arg


# ============= BOUNDED (ORACLE / DERIVED) =============

class _Evaluators(NamedTuple):
    value: Callable[[Lasso], Value]
    upper: Optional[Callable[[Lasso], Value]]
    lower: Optional[Callable[[Lasso], Value]]


def _evaluators(p: Property) -> _Evaluators:
    value = lambda l: eval_on_lasso(p, l)
    upper = lower = None
    if p.representable_as(ValueFunction.INF):
        upper = value
    if p.representable_as(ValueFunction.SUP):
        lower = value
    if p.is_oracle:
        oracle = p.oracle
        if not oracle.has_hook("lasso_value"):
            raise UnsupportedBackend(f"{p.name} has no analytic lasso rule; nothing can be checked")
        if upper is None and oracle.has_hook("safety_closure_lasso"):
            upper = oracle.safety_closure_lasso
        if lower is None and oracle.has_hook("cosafety_closure_lasso"):
            lower = oracle.cosafety_closure_lasso
    elif p.is_derived:
        upper = upper or p.backend.safety_closure_fn
        lower = lower or p.backend.cosafety_closure_fn
    return _Evaluators(value, upper, lower)


def _extreme(v: Value, d: ValueDomain) -> bool:
    return d.stands_for_top(v) or d.stands_for_bottom(v)


def _rank(lasso: Lasso, v: Value, d: ValueDomain):
    return (_extreme(v, d), len(lasso.cycle), lasso.cycle, len(lasso.stem), lasso.stem)


class _Collector:
    """Keeps the preferred violating lasso of one check."""

    def __init__(self, domain: ValueDomain):
        self.domain = domain
        self.best: Optional[Tuple] = None

    def offer(self, lasso: Lasso, value: Value, detail: str) -> None:
        key = _rank(lasso, value, self.domain)
        if self.best is None or key < self.best[0]:
            self.best = (key, Witness(lasso=lasso, value=value, detail=detail))

    @property
    def witness(self) -> Optional[Witness]:
        return self.best[1] if self.best else None


def _verdict_live_rejection(p: Property, lasso: Lasso, value: Value, candidates: Sequence[Value], budget: int) -> Optional[Tuple[Value, int]]:
    """First candidate above the lasso's value that some prefix rules out, with that prefix length."""
    d = p.domain
    oracle = p.oracle
    above = [v for v in candidates if _greater(v, value, d)]
    if not above:
        return None
    horizon = len(lasso.stem) + budget * len(lasso.cycle)
    stats = oracle.initial()
    for n in range(horizon + 1):
        if n > 0:
            stats = oracle.advance(stats, lasso.symbol_at(n - 1))
        predictions = oracle.prediction_set(stats)
        for v in above:
            if not predictions.contains(v):
                return v, n
    return None


def _sup_closed_bounded(p: Property, budget: int) -> Tuple[Verdict, Optional[Witness]]:
    oracle = p.oracle
    d = p.domain
    violations = []
    for trace in enumerate_finite_traces(p.alphabet, budget):
        predictions = oracle.prediction_set(oracle.stats_of(trace.symbols))
        join = predictions.supremum()
        if not predictions.contains(join):
            violations.append((trace, join))
            if len(trace) > 0:
                break
    if not violations:
        return Verdict.bounded(budget), None
    nonempty = [v for v in violations if len(v[0]) > 0]
    trace, join = nonempty[0] if nonempty else violations[0]
    return NO, Witness(trace=trace, value=join, detail=f"join {d.format_value(join)} is not a possible value")


def _bounded_checks(p: Property, budget: int, samples: int, cap: int, seed: Optional[int]) -> ClassificationReport:
    d = p.domain
    fmt = d.format_value
    report = ClassificationReport(p.name, d, "bounded", budget)
    ev = _evaluators(p)
    lassos = lasso_sample(p.alphabet, budget, cap, samples, make_rng(seed))
    bottom = d.bottom()

    structural = {}
    if p.representable_as(ValueFunction.INF):
        structural[CHECK_SAFE] = YES
        structural[CHECK_VERDICT_SAFE] = YES
    if p.representable_as(ValueFunction.SUP):
        structural[CHECK_COSAFE] = YES

    checks: Dict[str, Callable[[Lasso, Value], Optional[str]]] = {}
    if ev.upper is not None:
        checks[CHECK_SAFE] = lambda l, v: None if values_equal(v, ev.upper(l), d) else f"safety closure {fmt(ev.upper(l))}"
        checks[CHECK_LIVE] = lambda l, v: (
            "safety closure does not exceed the value"
            if not d.stands_for_top(v) and values_equal(ev.upper(l), v, d)
            else None
        )
        checks[CHECK_MULTILIVE] = lambda l, v: f"safety closure is {fmt(bottom)}" if values_equal(ev.upper(l), bottom, d) else None
    if ev.lower is not None:
        checks[CHECK_COSAFE] = lambda l, v: None if values_equal(v, ev.lower(l), d) else f"co-safety closure {fmt(ev.lower(l))}"
        checks[CHECK_COLIVE] = lambda l, v: (
            "co-safety closure is not below the value"
            if not d.stands_for_bottom(v) and values_equal(ev.lower(l), v, d)
            else None
        )
    if p.is_oracle and p.oracle.has_hook("prediction_limit"):
        def verdict_safe(l, v):
            join = p.oracle.prediction_limit(l).supremum()
            return None if values_equal(v, join, d) else f"join of the limit prediction set is {fmt(join)}"
        checks[CHECK_VERDICT_SAFE] = verdict_safe

    candidates: Sequence[Value] = ()
    if p.is_oracle and p.oracle.has_hook("prediction_set"):
        candidates = p.oracle.prediction_set(p.oracle.initial()).materialize(budget)

        def verdict_live(l, v):
            rejected = _verdict_live_rejection(p, l, v, candidates, budget)
            if rejected is None:
                return None
            return f"value {fmt(rejected[0])} rejected after prefix length {rejected[1]}"
        checks[CHECK_VERDICT_LIVE] = verdict_live

    for check in structural:
        checks.pop(check, None)
    collectors = {check: _Collector(d) for check in checks}
    for lasso in lassos:
        v = ev.value(lasso)
        for check, rule in checks.items():
            detail = rule(lasso, v)
            if detail is not None:
                collectors[check].offer(lasso, v, detail)

    for check in REPORT_CHECKS:
        if check in structural:
            report.verdicts[check] = structural[check]
        elif check in collectors:
            witness = collectors[check].witness
            report.verdicts[check] = NO if witness else Verdict.bounded(budget)
            if witness:
                report.witnesses[check] = witness

    if report.verdicts.get(CHECK_SAFE) == YES:
        report.verdicts[CHECK_VERDICT_SAFE] = YES
        report.witnesses.pop(CHECK_VERDICT_SAFE, None)
    if p.is_oracle and p.oracle.has_hook("prediction_set"):
        verdict, witness = _sup_closed_bounded(p, budget)
        report.verdicts[CHECK_SUP_CLOSED] = verdict
        if witness:
            report.witnesses[CHECK_SUP_CLOSED] = witness

    reasons = {
        CHECK_SAFE: "no safety closure rule",
        CHECK_LIVE: "no safety closure rule",
        CHECK_MULTILIVE: "no safety closure rule",
        CHECK_COSAFE: "no co-safety closure rule",
        CHECK_COLIVE: "no co-safety closure rule",
        CHECK_SUP_CLOSED: "no prediction-set rule",
        CHECK_VERDICT_SAFE: "no limit prediction-set rule",
        CHECK_VERDICT_LIVE: "no prediction-set rule",
    }
    for check in REPORT_CHECKS:
        if check not in report.verdicts:
            report.skipped[check] = reasons[check]

    if d.is_numeric:
        report.alpha_min = _hooked_bound(p, "alpha_min", report.verdicts.get(CHECK_SAFE))
        report.beta_min = _hooked_bound(p, "beta_min", report.verdicts.get(CHECK_COSAFE))
    logger.info(f"Bounded classification of {p.name} over {len(lassos)} lassos")
    return report


def _hooked_bound(p: Property, hook: str, verdict: Optional[Verdict]) -> Optional[float]:
    if verdict is not None and verdict.is_yes:
        return 0.0
    if p.is_oracle and p.oracle.has_hook(hook):
        return float(getattr(p.oracle, hook)())
    return None


# ============= PUBLIC OPERATIONS =============

def classify(
    p: Property,
    budget: Optional[int] = None,
    samples: Optional[int] = None,
    seed: Optional[int] = None,
) -> ClassificationReport:
    """
    Classify a property.

    Args:
        p: The property
        budget: Stem/cycle bound for bounded checks (default from AnalysisConfig)
        samples: Random lassos added to the exhaustive part of the sample
        seed: Sampling seed

    Returns:
        ClassificationReport; exact for machine-backed properties
    """
    budget = AnalysisConfig.get_budget() if budget is None else budget
    if p.is_machine:
        space = config_space(p)
        report = ClassificationReport(p.name, p.domain, "exact")
        verdicts, witnesses = _exact_checks(p, space)
        report.verdicts = {check: verdicts[check] for check in REPORT_CHECKS}
        report.witnesses = witnesses
        if p.domain.is_numeric:
            report.alpha_min = _exact_gaps(p, space, upper=True)[0]
            report.beta_min = _exact_gaps(p, space, upper=False)[0]
        logger.info(f"Exact classification of {p.name}: {len(space.components)} recurring components")
        return report
    samples = AnalysisConfig.get_samples() if samples is None else samples
    return _bounded_checks(p, budget, samples, AnalysisConfig.get_sample_cap(), seed)


def _approximate(p: Property, bound: float, upper: bool, budget: Optional[int], seed: Optional[int]) -> AlphaResult:
    d = p.domain
    if not d.is_numeric:
        raise DomainNotNumeric(f"{d.describe()} does not embed into the extended reals")
    what = "safety" if upper else "co-safety"
    if p.is_machine:
        space = config_space(p)
        best, _ = _exact_gaps(p, space, upper)
        for pair in _pairs(space):
            closure = pair.top if upper else pair.bottom
            gap = value_gap(closure, pair.value, d) if upper else value_gap(pair.value, closure, d)
            if gap > bound:
                witness = _pair_witness(space, pair, f"{what} closure {d.format_value(closure)}")
                return AlphaResult(NO, best, witness)
        return AlphaResult(YES, best, None)

    budget = AnalysisConfig.get_budget() if budget is None else budget
    ev = _evaluators(p)
    closure_fn = ev.upper if upper else ev.lower
    structural = p.representable_as(ValueFunction.INF if upper else ValueFunction.SUP)
    known = _hooked_bound(p, "alpha_min" if upper else "beta_min", YES if structural else None)
    if known is not None and known <= bound:
        return AlphaResult(YES, known, None)
    if closure_fn is None:
        raise UnsupportedBackend(f"{p.name} has no {what} closure rule")
    collector = _Collector(d)
    lassos = lasso_sample(p.alphabet, budget, AnalysisConfig.get_sample_cap(), AnalysisConfig.get_samples(), make_rng(seed))
    for lasso in lassos:
        v = ev.value(lasso)
        closure = closure_fn(lasso)
        gap = value_gap(closure, v, d) if upper else value_gap(v, closure, d)
        if gap > bound:
            collector.offer(lasso, v, f"{what} closure {d.format_value(closure)}")
    if collector.witness is not None:
        return AlphaResult(NO, known, collector.witness)
    return AlphaResult(Verdict.bounded(budget), known, None)


def check_alpha_safety(p: Property, alpha: float, budget: Optional[int] = None, seed: Optional[int] = None) -> AlphaResult:
    """Whether Φ*(f) − Φ(f) ≤ alpha for every trace; also returns the least such alpha when known."""
    return _approximate(p, alpha, True, budget, seed)


def check_beta_cosafety(p: Property, beta: float, budget: Optional[int] = None, seed: Optional[int] = None) -> AlphaResult:
    return _approximate(p, beta, False, budget, seed)


def _single(p: Property, check: str, budget: Optional[int]) -> Tuple[Verdict, Optional[Witness]]:
    report = classify(p, budget)
    if check in report.skipped:
        raise UnsupportedBackend(f"{check} cannot be checked for {p.name}: {report.skipped[check]}")
    return report.verdicts[check], report.witnesses.get(check)


def check_sup_closed(p: Property, budget: Optional[int] = None) -> Tuple[Verdict, Optional[Witness]]:
    if p.is_oracle and p.oracle.has_hook("prediction_set"):
        return _sup_closed_bounded(p, AnalysisConfig.get_budget() if budget is None else budget)
    return _single(p, CHECK_SUP_CLOSED, budget)


def check_verdict_safety(p: Property, budget: Optional[int] = None) -> Tuple[Verdict, Optional[Witness]]:
    return _single(p, CHECK_VERDICT_SAFE, budget)


def check_verdict_liveness(p: Property, budget: Optional[int] = None) -> Tuple[Verdict, Optional[Witness]]:
    return _single(p, CHECK_VERDICT_LIVE, budget)


def prefix_characterization(p: Property, lasso: Lasso, kind: str) -> bool:
    """
    Check a prefix characterization of Φ on one lasso, for every threshold
    among the machine's outputs:

    * safety: Φ(f) ≥ v iff every prefix s keeps top(s) ≥ v
    * cosafety: Φ(f) ≤ v iff every prefix s keeps bottom(s) ≤ v
    * liminf: Φ(f) ≥ v iff from some prefix on every output is ≥ v

    Prefixes are scanned up to the point where the configuration orbit of
    the lasso repeats.
    """
    if kind not in ("safety", "cosafety", "liminf"):
        raise BadParams(f"unknown characterization {kind!r}")
    space = config_space(p)
    d = p.domain
    key = d.order_key
    value = eval_on_lasso(p, lasso)
    transient, recurring = space.lasso_configs(lasso)
    visited = transient + recurring
    thresholds = sorted({space.output(v) for v in range(len(space.configs))} | {d.top(), d.bottom()}, key=key)

    for v in thresholds:
        if kind == "safety":
            lhs = key(value) >= key(v)
            rhs = all(key(space.top(c)) >= key(v) for c in visited)
        elif kind == "cosafety":
            lhs = key(value) <= key(v)
            rhs = all(key(space.bottom(c)) <= key(v) for c in visited)
        else:
            lhs = key(value) >= key(v)
            outputs = [space.output(c) for c in visited]
            tail = [space.output(c) for c in recurring]
            rhs = any(all(key(o) >= key(v) for o in outputs[i:] + tail) for i in range(len(outputs)))
        if lhs != rhs:
            logger.debug(f"{kind} characterization fails on {lasso} at threshold {d.format_value(v)}")
            return False
    return True
