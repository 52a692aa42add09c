import math

import pytest

from helper.builtins import AB, RESPONSE, builtin
from helper.closure import (
    config_of,
    config_space,
    cosafety_closure,
    prediction_set,
    safety_closure,
    top_value,
    bottom_value,
)
from helper.domains import ProductDomain, BooleanDomain, values_equal
from helper.errors import UnsupportedDomain
from helper.machines import FinitaryMachine, ValueFunction
from helper.props import eval_on_lasso, machine_property
from helper.traces import FiniteTrace, parse_trace
from helper.utils import enumerate_lassos, make_rng, random_lasso
from tests.conftest import ABC, corpus_machines

VALUE_FUNCTIONS = list(ValueFunction)
CORPUS = corpus_machines(24)
SMALL = corpus_machines(18, seed=23, max_states=3)
# stem and cycle bounds that reach every value of a machine with at most three states
LASSOS = {2: enumerate_lassos(AB, 5, 5), 3: enumerate_lassos(ABC, 4, 3)}


def corpus_properties():
    for i, machine in enumerate(CORPUS):
        for vf in VALUE_FUNCTIONS:
            yield pytest.param(machine_property(machine, vf, f"m{i}_{vf.value}"), id=f"m{i}-{vf.value}")


def small_properties():
    for i, machine in enumerate(SMALL):
        for vf in VALUE_FUNCTIONS:
            yield pytest.param(machine_property(machine, vf, f"s{i}_{vf.value}"), id=f"s{i}-{vf.value}")


def key(p, v):
    return p.domain.order_key(v)


class TestConfigSpace:
    """Achievable values from the configuration graph agree with lasso evaluation."""

    @pytest.mark.parametrize("p", list(corpus_properties()))
    def test_lasso_values_lie_in_prediction(self, p):
        predictions = prediction_set(p, FiniteTrace(p.alphabet))
        for lasso in enumerate_lassos(p.alphabet, 2, 3):
            v = eval_on_lasso(p, lasso)
            assert predictions.contains(v)
            assert key(p, bottom_value(p, FiniteTrace(p.alphabet))) <= key(p, v) <= key(p, top_value(p, FiniteTrace(p.alphabet)))

    @pytest.mark.parametrize("p", list(small_properties()))
    def test_initial_predictions_match_enumeration(self, p):
        root = FiniteTrace(p.alphabet)
        observed = {key(p, eval_on_lasso(p, lasso)) for lasso in LASSOS[len(p.alphabet)]}
        assert {key(p, v) for v in prediction_set(p, root).members} == observed
        assert key(p, top_value(p, root)) == max(observed)
        assert key(p, bottom_value(p, root)) == min(observed)

    @pytest.mark.parametrize("p", list(corpus_properties()))
    def test_every_achievable_value_has_a_lasso(self, p):
        space = config_space(p)
        for component in space.components:
            for x in component.achievable:
                lasso = space.lasso_through(space.recurrent_nodes(component, x))
                assert values_equal(eval_on_lasso(p, lasso), x, p.domain)

    def test_partial_orders_rejected(self):
        domain = ProductDomain(BooleanDomain(), BooleanDomain())
        machine = FinitaryMachine(AB, domain, [(0, 1)], [[0, 0]])
        with pytest.raises(UnsupportedDomain):
            config_space(machine_property(machine, ValueFunction.INF))

    def test_min_response_predictions(self, min_response):
        assert prediction_set(min_response, FiniteTrace(RESPONSE)).members == frozenset(range(9)) | {math.inf}
        after_grant = parse_trace("rq tk tk gr", RESPONSE)
        assert prediction_set(min_response, after_grant).members == frozenset({0, 1, 2})
        assert top_value(min_response, after_grant) == 2

    def test_capped_prediction_keeps_infinity(self):
        p = builtin("min_response", cap=4)
        predictions = prediction_set(p, FiniteTrace(RESPONSE))
        assert predictions.materialize(10) == [0, 1, 2, 3, 4, math.inf]
        assert [p.domain.format_value(v) for v in predictions.materialize(10)] == ["0", "1", "2", "3", "≥4", "inf"]

    def test_config_of(self, min_response):
        config = config_of(min_response, parse_trace("rq tk gr", RESPONSE))
        assert config.aggregate == 1
        assert top_value(min_response, config) == 1

    def test_space_is_cached(self, min_response):
        assert config_space(min_response) is config_space(min_response)


class TestClosures:
    @pytest.mark.parametrize("p", list(corpus_properties()))
    def test_bounds_and_idempotence(self, p):
        upper = safety_closure(p)
        lower = cosafety_closure(p)
        upper_twice = safety_closure(upper)
        lower_twice = cosafety_closure(lower)
        rng = make_rng(3)
        for _ in range(25):
            lasso = random_lasso(p.alphabet, rng, 3, 3)
            v = eval_on_lasso(p, lasso)
            hi = eval_on_lasso(upper, lasso)
            lo = eval_on_lasso(lower, lasso)
            assert key(p, lo) <= key(p, v) <= key(p, hi)
            assert values_equal(eval_on_lasso(upper_twice, lasso), hi, p.domain)
            assert values_equal(eval_on_lasso(lower_twice, lasso), lo, p.domain)

    @pytest.mark.parametrize("p", list(corpus_properties()))
    def test_closures_are_tightest(self, p):
        rng = make_rng(13)
        machine, d = p.machine, p.domain
        picks = [machine.outputs[int(rng.integers(0, machine.size))] for _ in machine.outputs]
        raised = FinitaryMachine(p.alphabet, d, [d.join(o, x) for o, x in zip(machine.outputs, picks)], machine.delta)
        lowered = FinitaryMachine(p.alphabet, d, [d.meet(o, x) for o, x in zip(machine.outputs, picks)], machine.delta)
        # a safe property above p and a co-safe one below it
        safe_above = safety_closure(machine_property(raised, p.value_function))
        cosafe_below = cosafety_closure(machine_property(lowered, p.value_function))
        upper, lower = safety_closure(p), cosafety_closure(p)
        for _ in range(25):
            lasso = random_lasso(p.alphabet, rng, 3, 3)
            v = eval_on_lasso(p, lasso)
            assert key(p, v) <= key(p, eval_on_lasso(upper, lasso)) <= key(p, eval_on_lasso(safe_above, lasso))
            assert key(p, eval_on_lasso(cosafe_below, lasso)) <= key(p, eval_on_lasso(lower, lasso)) <= key(p, v)

    def test_closure_of_a_fresh_builtin(self):
        p = builtin("min_response", cap=6)
        periodic = parse_trace("; rq tk gr", RESPONSE)
        upper = safety_closure(p)
        assert eval_on_lasso(upper, periodic) == 1
        assert eval_on_lasso(cosafety_closure(p), periodic) == 0
        assert safety_closure(p).machine is upper.machine

    def test_closure_value_functions(self, min_response):
        assert safety_closure(min_response).value_function is ValueFunction.INF
        assert cosafety_closure(min_response).value_function is ValueFunction.SUP

    def test_min_response_is_its_own_safety_closure(self, min_response):
        upper = safety_closure(min_response)
        rng = make_rng(5)
        for _ in range(40):
            lasso = random_lasso(RESPONSE, rng, 4, 4)
            assert eval_on_lasso(upper, lasso) == eval_on_lasso(min_response, lasso)

    def test_max_response_closures(self, max_response):
        periodic = parse_trace("; rq tk gr", RESPONSE)
        assert eval_on_lasso(safety_closure(max_response), periodic) == 8
        assert eval_on_lasso(cosafety_closure(max_response), periodic) == 1

    def test_oracle_closures(self, avg_response, discounted):
        periodic = parse_trace("; rq tk gr", RESPONSE)
        assert eval_on_lasso(safety_closure(avg_response), periodic) == math.inf
        assert eval_on_lasso(cosafety_closure(avg_response), periodic) == 0.0
        assert safety_closure(avg_response).representable_as(ValueFunction.INF)
        late = parse_trace("a a ; b", AB)
        assert eval_on_lasso(safety_closure(discounted), late) == eval_on_lasso(discounted, late) == 0.875

    def test_closure_names(self, gf_a):
        upper = safety_closure(gf_a)
        assert upper.name == "safety_closure(gf_a)"
        assert upper.describe() == {"closure": "safety", "of": gf_a.describe()}
