import io

import pytest
from hypothesis import given
from hypothesis import strategies as st

from helper.errors import BadParams, EmptyCycle, TraceParseError, UnknownSymbol
from helper.traces import Alphabet, FiniteTrace, Lasso, count, iter_symbols, normalize, parse_trace

AB = Alphabet(("a", "b"))

symbols = st.lists(st.integers(min_value=0, max_value=1), max_size=6)
cycles = st.lists(st.integers(min_value=0, max_value=1), min_size=1, max_size=6)


class TestAlphabet:
    def test_duplicates_rejected(self):
        with pytest.raises(BadParams):
            Alphabet(("a", "a"))

    def test_empty_rejected(self):
        with pytest.raises(BadParams):
            Alphabet(())

    @pytest.mark.parametrize("label", ["", "a b", ";", "x#"])
    def test_bad_labels(self, label):
        with pytest.raises(BadParams):
            Alphabet(("ok", label))

    def test_unknown_label(self):
        with pytest.raises(UnknownSymbol):
            AB.index("c")


class TestLasso:
    def test_empty_cycle(self):
        with pytest.raises(EmptyCycle):
            Lasso(AB, (0,), ())

    def test_unroll(self):
        lasso = Lasso.of(AB, ["a"], ["b", "a"])
        assert lasso.unroll(5).labels() == ["a", "b", "a", "b", "a"]

    def test_str(self):
        assert str(Lasso.of(AB, [], ["a"])) == "; a"
        assert str(Lasso.of(AB, ["b"], ["a", "b"])) == "b ; a b"


class TestNormalize:
    """Normal forms are canonical for the infinite word."""

    def test_primitive_root(self):
        assert normalize(Lasso.of(AB, [], ["a", "b", "a", "b"])) == Lasso.of(AB, [], ["a", "b"])

    def test_stem_absorbed(self):
        assert normalize(Lasso.of(AB, ["a", "b"], ["a", "b"])) == Lasso.of(AB, [], ["a", "b"])
        assert normalize(Lasso.of(AB, ["b", "a"], ["a"])) == Lasso.of(AB, ["b"], ["a"])

    @given(symbols, cycles)
    def test_idempotent(self, stem, cycle):
        once = normalize(Lasso(AB, tuple(stem), tuple(cycle)))
        assert normalize(once) == once

    @given(symbols, cycles)
    def test_same_infinite_word(self, stem, cycle):
        lasso = Lasso(AB, tuple(stem), tuple(cycle))
        n = len(stem) + 3 * len(cycle)
        assert normalize(lasso).unroll(n) == lasso.unroll(n)

    @given(symbols, cycles, st.integers(min_value=1, max_value=3))
    def test_unrolled_cycle_has_same_form(self, stem, cycle, times):
        lasso = Lasso(AB, tuple(stem), tuple(cycle))
        unrolled = Lasso(AB, tuple(stem) + tuple(cycle), tuple(cycle) * times)
        assert normalize(unrolled) == normalize(lasso)


class TestParseTrace:
    def test_finite(self):
        trace = parse_trace("a b  # comment\nb", AB)
        assert isinstance(trace, FiniteTrace)
        assert trace.labels() == ["a", "b", "b"]

    def test_lasso(self):
        assert parse_trace("a;b a", AB) == Lasso.of(AB, ["a"], ["b", "a"])
        assert parse_trace("; a", AB) == Lasso.of(AB, [], ["a"])

    def test_empty_is_empty_trace(self):
        assert parse_trace("", AB) == FiniteTrace(AB)

    def test_double_separator(self):
        with pytest.raises(TraceParseError):
            parse_trace("a ; b ; a", AB)

    def test_empty_cycle(self):
        with pytest.raises(EmptyCycle):
            parse_trace("a b ;", AB)

    def test_unknown_symbol_position(self):
        with pytest.raises(UnknownSymbol) as info:
            parse_trace("a b c", AB)
        assert info.value.position == 3

    def test_invalid_utf8(self):
        with pytest.raises(TraceParseError):
            parse_trace(b"\xff\xfe", AB)


class TestStreaming:
    def test_positions(self):
        stream = io.StringIO("a b\n# skip\nb\n")
        assert list(iter_symbols(stream, AB)) == [(1, 0), (2, 1), (3, 1)]

    def test_separator_rejected(self):
        with pytest.raises(TraceParseError):
            list(iter_symbols(io.StringIO("a ; b"), AB))


def test_count():
    assert count(FiniteTrace.of(AB, ["a", "b", "a"]), "a") == 2
