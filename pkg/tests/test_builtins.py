import math

import pytest

from helper.builtins import (
    AB,
    ABC,
    BUILTIN_NAMES,
    RESPONSE,
    SafetyDFA,
    analyze_response_lasso,
    builtin,
    fixture,
)
from helper.domains import BooleanDomain, FiniteOrderDomain
from helper.errors import BadParams, UnknownFixture
from helper.machines import ValueFunction
from helper.props import eval_finitary, eval_on_lasso
from helper.traces import parse_trace


class TestRegistry:
    @pytest.mark.parametrize(
        "name,params",
        [
            ("min_response", {"cap": 4}),
            ("max_response", {"cap": 4}),
            ("tail_min_response", {"cap": 4}),
            ("skip_min_response", {"skip": 1, "cap": 4}),
            ("avg_response", {}),
            ("bounded_avg_response", {"bound": 3}),
            ("gf_a", {}),
            ("fg_b", {}),
            ("discounted_safety", {"alphabet": ["a", "b"], "never": "b"}),
            ("constant", {"value": 1, "domain": {"kind": "boolean"}, "alphabet": ["a"]}),
        ],
    )
    def test_every_builtin_builds(self, name, params):
        assert name in BUILTIN_NAMES
        p = builtin(name, params)
        assert p.describe()["builtin"] == name

    def test_unknown_builtin(self):
        with pytest.raises(BadParams):
            builtin("median_response")

    def test_unknown_parameter(self):
        with pytest.raises(BadParams):
            builtin("min_response", {"cap": 4, "limit": 2})

    @pytest.mark.parametrize("cap", [0, -1, 2.5, True, "8"])
    def test_bad_cap(self, cap):
        with pytest.raises(BadParams):
            builtin("min_response", cap=cap)

    def test_unknown_fixture(self):
        with pytest.raises(UnknownFixture):
            fixture("safe_not_live")


class TestResponseStatistics:
    def test_periodic_grants(self):
        summary = analyze_response_lasso(parse_trace("rq tk ; rq tk tk gr", RESPONSE))
        assert summary.valid_per_cycle == 1
        assert summary.time_per_cycle == 2
        assert summary.average == 2.0
        assert summary.peak == 3

    def test_no_requests(self):
        summary = analyze_response_lasso(parse_trace("; tk oo", RESPONSE))
        assert summary.average == math.inf

    def test_finitely_many_requests(self):
        summary = analyze_response_lasso(parse_trace("rq tk tk gr ; oo", RESPONSE))
        assert summary.average == 2.0

    def test_bounded_average(self):
        p = builtin("bounded_avg_response", bound=2)
        assert eval_on_lasso(p, parse_trace("; rq tk gr", RESPONSE)) == 1.0
        assert eval_on_lasso(p, parse_trace("; rq tk tk tk gr", RESPONSE)) == 0.0
        assert eval_finitary(p, parse_trace("rq tk tk tk", RESPONSE)) == 0.0


class TestDiscountedSafety:
    def test_never_b(self, discounted):
        assert eval_on_lasso(discounted, parse_trace("; a", AB)) == 1.0
        assert eval_on_lasso(discounted, parse_trace("a ; b", AB)) == 0.75
        assert eval_finitary(discounted, parse_trace("b", AB)) == 0.5

    def test_dead_states_and_distance(self):
        dfa = SafetyDFA.never(AB, "b")
        assert dfa.dead == frozenset({1})
        assert dfa.distance[0] == 1

    def test_explicit_automaton(self):
        # "b" may never be followed by another "b"
        params = {
            "alphabet": ["a", "b"],
            "states": ["fresh", "after_b", "bad"],
            "initial": "fresh",
            "transitions": [
                {"from": "fresh", "symbol": "a", "to": "fresh"},
                {"from": "fresh", "symbol": "b", "to": "after_b"},
                {"from": "after_b", "symbol": "a", "to": "fresh"},
                {"from": "after_b", "symbol": "b", "to": "bad"},
                {"from": "bad", "symbol": "a", "to": "bad"},
                {"from": "bad", "symbol": "b", "to": "bad"},
            ],
            "rejecting": ["bad"],
        }
        p = builtin("discounted_safety", params)
        assert eval_on_lasso(p, parse_trace("; a b", AB)) == 1.0
        assert eval_on_lasso(p, parse_trace("a b ; b", AB)) == 1.0 - 2.0 ** -3

    def test_incomplete_automaton(self):
        params = {
            "alphabet": ["a", "b"],
            "states": ["s"],
            "initial": "s",
            "transitions": [{"from": "s", "symbol": "a", "to": "s"}],
            "rejecting": [],
        }
        with pytest.raises(BadParams):
            builtin("discounted_safety", params)


class TestFixtures:
    def test_first_b(self):
        p = fixture("vsafe_not_safe")
        assert eval_on_lasso(p, parse_trace("a a ; b", AB)) == 3
        assert eval_on_lasso(p, parse_trace("; a", AB)) == 0

    def test_second_b(self):
        p = fixture("live_not_verdictlive")
        assert eval_on_lasso(p, parse_trace("a b ; a", AB)) == 0.25
        assert eval_on_lasso(p, parse_trace("a ; b a", AB)) == 1.0
        assert eval_on_lasso(p, parse_trace("; a", AB)) == 0.0

    def test_multilive_levels(self):
        p = fixture("multilive_not_live")
        assert p.alphabet == ABC
        assert p.value_function is ValueFunction.LIMINF
        assert eval_on_lasso(p, parse_trace("; a", ABC)) == 0
        assert eval_on_lasso(p, parse_trace("b ; a", ABC)) == 2
        assert eval_on_lasso(p, parse_trace("b c ; a", ABC)) == 1


class TestConstant:
    def test_constant_value(self):
        p = builtin(
            "constant",
            {"value": "mid", "domain": {"kind": "finite_order", "levels": ["low", "mid", "high"]}, "alphabet": ["x", "y"]},
        )
        assert p.domain == FiniteOrderDomain(("low", "mid", "high"))
        assert p.name == "constant_mid"
        assert eval_on_lasso(p, parse_trace("x ; y", p.alphabet)) == 1

    def test_constant_bad_value(self):
        with pytest.raises(BadParams):
            builtin("constant", value=2, domain=BooleanDomain(), alphabet=["a"])
