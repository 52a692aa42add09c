import json
import os

import pytest

from helper.builtins import AB, RESPONSE, builtin
from helper.closure import safety_closure
from helper.errors import SpecFileError, UnknownSymbol
from helper.machines import ValueFunction
from helper.monitor import export_monitor, synthesize
from helper.props import eval_finitary, eval_on_lasso
from helper.spec_files import (
    dump_property,
    load_monitor,
    load_property,
    load_trace,
    parse_property,
    property_to_dict,
)
from helper.traces import FiniteTrace, parse_trace
from helper.utils import random_lasso


def write(tmp_path, name, content):
    path = tmp_path / name
    path.write_text(content if isinstance(content, str) else json.dumps(content), encoding="utf-8")
    return str(path)


class TestLoadProperty:
    @pytest.mark.parametrize(
        "name,expected",
        [
            ("min_resp.json", "min_response"),
            ("max_resp.json", "max_response"),
            ("avg_resp.json", "avg_response"),
            ("disc_never_b.json", "discounted_safety"),
        ],
    )
    def test_builtin_samples(self, samples_dir, name, expected):
        p = load_property(os.path.join(samples_dir, name))
        assert p.describe()["builtin"] == expected

    def test_machine_sample(self, samples_dir):
        p = load_property(os.path.join(samples_dir, "gf_a_machine.json"))
        assert p.is_machine
        assert p.value_function is ValueFunction.LIMSUP
        assert eval_on_lasso(p, parse_trace("b ; b a", AB)) == 1
        assert eval_on_lasso(p, parse_trace("a ; b", AB)) == 0

    def test_fixture_form(self):
        p = parse_property({"version": 1, "fixture": "vsafe_not_safe"})
        assert eval_on_lasso(p, parse_trace("a ; b", AB)) == 2

    def test_missing_params_default_to_empty(self):
        p = parse_property({"version": 1, "builtin": "gf_a"})
        assert p.alphabet == AB


class TestRejections:
    @pytest.mark.parametrize(
        "data",
        [
            {"version": 2, "builtin": "gf_a", "params": {}},
            {"builtin": "gf_a", "params": {}},
            {"version": 1, "builtin": "gf_a", "params": {}, "comment": "x"},
            {"version": 1, "fixture": "vsafe_not_safe", "params": {}},
            {"version": 1, "builtin": "min_response", "params": {"cap": 0}},
            {"version": 1, "fixture": "safe_not_live"},
            [1, 2, 3],
        ],
    )
    def test_bad_documents(self, data):
        with pytest.raises(SpecFileError):
            parse_property(data)

    def test_error_names_the_file(self, tmp_path):
        path = write(tmp_path, "broken.json", "{\"version\": 1,")
        with pytest.raises(SpecFileError) as e:
            load_property(path)
        assert "broken.json" in e.value.diagnostic()

    def test_missing_file(self, tmp_path):
        with pytest.raises(SpecFileError):
            load_property(str(tmp_path / "absent.json"))

    def test_incomplete_machine(self, samples_dir):
        with open(os.path.join(samples_dir, "gf_a_machine.json"), encoding="utf-8") as f:
            data = json.load(f)
        data["transitions"] = data["transitions"][:-1]
        with pytest.raises(SpecFileError):
            parse_property(data)

    def test_duplicate_transition(self, samples_dir):
        with open(os.path.join(samples_dir, "gf_a_machine.json"), encoding="utf-8") as f:
            data = json.load(f)
        data["transitions"].append({"from": "other", "symbol": "a", "to": "other"})
        with pytest.raises(SpecFileError):
            parse_property(data)

    def test_unknown_initial_state(self, samples_dir):
        with open(os.path.join(samples_dir, "gf_a_machine.json"), encoding="utf-8") as f:
            data = json.load(f)
        data["initial"] = "nowhere"
        with pytest.raises(SpecFileError):
            parse_property(data)


class TestDump:
    def test_machine_round_trip(self, samples_dir):
        original = load_property(os.path.join(samples_dir, "gf_a_machine.json"))
        copy = parse_property(json.loads(dump_property(original)))
        assert property_to_dict(copy) == property_to_dict(original)

    def test_builtin_by_reference(self, min_response):
        assert property_to_dict(min_response) == {"version": 1, "builtin": "min_response", "params": {"cap": 8}}

    def test_fixture_by_reference(self):
        data = property_to_dict(parse_property({"version": 1, "fixture": "multilive_not_live"}))
        assert data == {"version": 1, "fixture": "multilive_not_live"}

    def test_builtin_round_trip(self, max_response):
        copy = parse_property(json.loads(dump_property(max_response)))
        assert copy.describe() == max_response.describe()
        assert eval_on_lasso(copy, parse_trace("rq ; tk", RESPONSE)) == 8

    def test_closure_machine_is_written_out(self, min_response, rng):
        closed = safety_closure(min_response)
        data = property_to_dict(closed)
        assert data["value_function"] == "inf"
        reloaded = parse_property(data)
        for _ in range(30):
            lasso = random_lasso(RESPONSE, rng, 3, 3)
            assert eval_on_lasso(reloaded, lasso) == eval_on_lasso(closed, lasso)


class TestTracesAndMonitors:
    def test_trace_file_with_comment(self, samples_dir):
        trace = load_trace(os.path.join(samples_dir, "request_trace.txt"), RESPONSE)
        assert isinstance(trace, FiniteTrace)
        assert str(trace) == "rq tk gr rq tk tk gr"
        assert eval_finitary(builtin("min_response", cap=8), trace) == 2

    def test_lasso_file(self, tmp_path):
        trace = load_trace(write(tmp_path, "t.txt", "a b\n;\nb\n"), AB)
        assert str(trace) == "a b ; b"

    def test_unknown_symbol_position(self, tmp_path):
        with pytest.raises(UnknownSymbol) as e:
            load_trace(write(tmp_path, "t.txt", "a b\nc\n"), AB)
        assert e.value.position == 3

    def test_monitor_file(self, tmp_path, discounted):
        monitor = synthesize(discounted, 0.25)
        path = tmp_path / "monitor.json"
        path.write_bytes(export_monitor(monitor, "json"))
        assert load_monitor(str(path)) == monitor

    def test_bad_monitor_file(self, tmp_path):
        with pytest.raises(SpecFileError):
            load_monitor(write(tmp_path, "m.json", {"version": 1}))
