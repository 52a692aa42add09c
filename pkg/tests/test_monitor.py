import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helper.builtins import AB, RESPONSE, builtin, fixture
from helper.decompose import decompose
from helper.errors import AlphabetMismatch, BadParams, DepthExceeded, DomainNotNumeric, UnsupportedBackend

from helper.monitor import (
    GhostMonitor,
    export_monitor,
    ghost_step,
    import_monitor,
    monitor_run,
    monitor_to_dict,
    s_delta,
    synthesize,
)
from helper.props import eval_finitary, eval_on_lasso
from helper.traces import FiniteTrace, Lasso, parse_trace
from helper.utils import random_finite_trace, random_lasso

DELTAS = [0.5, 0.25, 0.125]

ab_lassos = st.builds(
    lambda stem, cycle: Lasso(AB, tuple(stem), tuple(cycle)),
    st.lists(st.integers(min_value=0, max_value=1), max_size=6),
    st.lists(st.integers(min_value=0, max_value=1), min_size=1, max_size=4),
)


def stream(ghost, text):
    return [ghost.step(label) for label in text.split()]


class TestGhostMonitor:
    def test_ge_hypothesis_rejected(self, min_response):
        ghost = GhostMonitor(min_response, [("GE", 2)])
        reports = stream(ghost, "rq tk gr rq tk tk gr")
        assert ghost.hypotheses[0].status == "Rejected@3"
        assert reports[2].updates == [0]
        assert reports[2].pi == 1
        assert reports[2].upper == 1
        assert reports[2].lower == 0
        assert all(r.sup_realizable for r in reports)

    def test_le_hypothesis(self, max_response):
        ghost = GhostMonitor(max_response)
        ghost.add_hypothesis("le", 0)
        stream(ghost, "rq tk")
        assert ghost.hypotheses[0].status == "Rejected@2"

    def test_open_hypothesis(self, min_response):
        ghost = GhostMonitor(min_response, [("LE", 0)])
        stream(ghost, "rq tk tk gr")
        assert ghost.hypotheses[0].status == "Open"

    def test_rejected_before_first_step(self, discounted):
        ghost = GhostMonitor(discounted, [("GE", 0.75)])
        assert ghost.hypotheses[0].status == "Open"
        _, report = ghost_step(ghost, "b")
        assert report.upper == 0.5
        assert ghost.hypotheses[0].status == "Rejected@1"
        assert report.sup_realizable is None

    def test_unrealizable_supremum(self):
        ghost = GhostMonitor(fixture("vsafe_not_safe"))
        assert ghost.report().sup_realizable is False
        assert ghost.step("b").sup_realizable is True

    def test_bad_kind(self, min_response):
        with pytest.raises(BadParams):
            GhostMonitor(min_response, [("EQ", 1)])

    def test_derived_properties_rejected(self, max_response):
        _, liveness = decompose(max_response, "safety-liveness")
        with pytest.raises(UnsupportedBackend):
            GhostMonitor(liveness)

    def test_average_hypotheses_never_rejected(self, avg_response, rng):
        ghost = GhostMonitor(avg_response, [("GE", 1.0), ("LE", 1.0)])
        for a in rng.integers(0, len(RESPONSE), size=10_000):
            ghost.step(int(a))
        assert [h.status for h in ghost.hypotheses] == ["Open", "Open"]

    def test_upper_never_increases(self, min_response, rng):
        ghost = GhostMonitor(min_response)
        previous = ghost.upper
        for a in rng.integers(0, len(RESPONSE), size=60):
            report = ghost.step(int(a))
            assert report.upper <= previous
            assert report.lower <= report.pi
            previous = report.upper


    @pytest.mark.parametrize("name, threshold", [("min_response", 2), ("discounted", 0.75)])
    def test_rejection_is_final(self, name, threshold, request, rng):
        p = request.getfixturevalue(name)
        rejected = 0
        for _ in range(20):
            ghost = GhostMonitor(p, [("GE", threshold)])
            prefix = []
            for a in rng.integers(0, len(p.alphabet), size=12):
                prefix.append(int(a))
                ghost.step(int(a))
                if ghost.hypotheses[0].rejected_at is not None:
                    break
            if ghost.hypotheses[0].rejected_at is None:
                continue
            rejected += 1
            for _ in range(100):
                tail = random_lasso(p.alphabet, rng, 4, 4)
                assert eval_on_lasso(p, Lasso(p.alphabet, tuple(prefix) + tail.stem, tail.cycle)) < threshold
        assert rejected > 0

class TestSynthesis:
    def test_discounted_classes(self, discounted):
        monitor = synthesize(discounted, 0.25)
        assert len(monitor.classes) == 5
        assert [str(t) for t in monitor.s_delta()] == ["", "a"]
        assert [c.gamma for c in monitor.classes] == [1.0, 1.0, 0.5, 1.0, 0.75]
        assert [c.id for c in monitor.frozen_classes()] == [2, 3, 4]
        assert monitor.classify_trace(parse_trace("a a b a", AB)).id == 3

    def test_narrow_property_has_one_class(self, discounted):
        monitor = synthesize(discounted, 1.0)
        assert len(monitor.classes) == 1
        assert monitor.classes[0].gamma == 1.0
        assert monitor.classes[0].frozen

    def test_infinite_wide_set(self, max_response):
        with pytest.raises(DepthExceeded):
            synthesize(max_response, 1.0)

    def test_depth_limit(self, discounted):
        with pytest.raises(DepthExceeded):
            synthesize(discounted, 0.01, max_depth=3)

    def test_s_delta(self, discounted):
        assert [str(t) for t in s_delta(discounted, 0.25)] == ["", "a"]

    def test_bad_delta(self, discounted):
        with pytest.raises(BadParams):
            synthesize(discounted, 0.0)

    def test_non_numeric(self):
        with pytest.raises(DomainNotNumeric):
            synthesize(fixture("multilive_not_live"), 1.0)

    def test_finite_trace_run(self, discounted):
        monitor = synthesize(discounted, 0.25)
        assert monitor_run(monitor, parse_trace("a b a", AB)) == [1.0, 1.0, 0.75, 0.75]

    def test_lasso_run(self, discounted):
        monitor = synthesize(discounted, 0.25)
        lasso = parse_trace("a a b ; a", AB)
        assert monitor_run(monitor, lasso) == 1.0
        assert eval_on_lasso(discounted, lasso) == 0.875

    @given(ab_lassos, st.sampled_from([0.25, 0.1, 0.05]))
    @settings(max_examples=60, deadline=None)
    def test_error_within_delta(self, lasso, delta):
        p = builtin("discounted_safety", {"alphabet": ["a", "b"], "never": "b"})
        monitor = synthesize(p, delta)
        assert abs(monitor_run(monitor, lasso) - eval_on_lasso(p, lasso)) <= delta


    @pytest.mark.parametrize("delta", DELTAS)
    def test_finite_trace_error(self, discounted, delta, rng):
        monitor = synthesize(discounted, delta)
        for _ in range(1000):
            trace = random_finite_trace(AB, rng, 12)
            assert abs(eval_finitary(discounted, trace) - monitor.gamma(trace)) <= delta

    @pytest.mark.parametrize("delta", DELTAS)
    def test_classes_are_right_monotonic(self, discounted, delta, rng):
        monitor = synthesize(discounted, delta)
        assert len(monitor.classes) <= len(monitor.s_delta()) * len(AB) + 1
        for _ in range(1000):
            s1, s2, r = (random_finite_trace(AB, rng, 5) for _ in range(3))
            if monitor.class_of(s1) == monitor.class_of(s2):
                assert monitor.class_of(s1.extend(r.symbols)) == monitor.class_of(s2.extend(r.symbols))

    @pytest.mark.parametrize("delta", DELTAS)
    def test_every_lasso_has_a_settled_prefix(self, discounted, delta, rng):
        continuations = [random_finite_trace(AB, rng, 8) for _ in range(100)]
        for _ in range(50):
            lasso = random_lasso(AB, rng, 4, 4)
            word = lasso.stem + lasso.cycle * 8
            assert any(
                all(
                    abs(eval_finitary(discounted, FiniteTrace(AB, word[:k] + w.symbols)) - eval_finitary(discounted, FiniteTrace(AB, word[:k])))
                    < delta
                    for w in continuations
                )
                for k in range(len(word) + 1)
            )

    @pytest.mark.parametrize("k", range(1, 7))
    def test_s_delta_is_the_short_live_traces(self, discounted, k):
        members = [str(t) for t in s_delta(discounted, 2.0 ** -k)]
        assert members == [" ".join(["a"] * j) for j in range(k)]

class TestExport:
    def test_json_round_trip(self, discounted):
        monitor = synthesize(discounted, 0.25)
        raw = export_monitor(monitor, "json")
        assert list(json.loads(raw)) == ["version", "delta", "value_function", "alphabet", "initial", "classes", "transitions"]
        assert import_monitor(raw) == monitor

    def test_dot_has_one_node_per_class(self, discounted):
        monitor = synthesize(discounted, 0.25)
        dot = export_monitor(monitor, "dot").decode("utf-8")
        assert dot.startswith("digraph monitor {")
        assert sum(1 for line in dot.splitlines() if "shape=" in line) == 5
        assert dot.count("->") == 10

    def test_unknown_format(self, discounted):
        with pytest.raises(BadParams):
            export_monitor(synthesize(discounted, 0.25), "svg")

    def test_extra_keys_rejected(self, discounted):
        data = monitor_to_dict(synthesize(discounted, 0.25))
        data["comment"] = "hand edited"
        with pytest.raises(BadParams):
            import_monitor(data)

    def test_partial_transitions_rejected(self, discounted):
        data = monitor_to_dict(synthesize(discounted, 0.25))
        data["transitions"] = data["transitions"][:-1]
        with pytest.raises(BadParams):
            import_monitor(data)

    def test_run_checks_alphabet(self, discounted):
        monitor = synthesize(discounted, 0.25)
        with pytest.raises(AlphabetMismatch):
            monitor_run(monitor, FiniteTrace(RESPONSE, (0,)))
