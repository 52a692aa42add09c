import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from helper.domains import (
    BooleanDomain,
    DualDomain,
    ExtendedNatDomain,
    ExtendedRealDomain,
    FiniteOrderDomain,
    Order,
    ProductDomain,
    UnitIntervalDomain,
    aggregate,
    compare,
    domain_from_descriptor,
    not_geq,
    sorted_values,
    value_gap,
    values_equal,
)
from helper.errors import BadParams, DomainMismatch, DomainNotNumeric, EmptySet, UnsupportedDomain

NAT = ExtendedNatDomain()
NAT8 = ExtendedNatDomain(8)
LEVELS = FiniteOrderDomain(("low", "mid", "high"))
PAIRS = ProductDomain(BooleanDomain(), ExtendedNatDomain(3))

nat_values = st.one_of(st.integers(min_value=0, max_value=50), st.just(math.inf))
capped_values = st.one_of(st.integers(min_value=0, max_value=8), st.just(math.inf))
level_values = st.integers(min_value=0, max_value=2)
pair_values = st.tuples(st.integers(min_value=0, max_value=1), st.integers(min_value=0, max_value=3))
real_values = st.one_of(
    st.floats(min_value=-1e6, max_value=1e6, allow_nan=False),
    st.just(math.inf),
    st.just(-math.inf),
)

CASES = [
    (NAT, nat_values),
    (NAT8, capped_values),
    (LEVELS, level_values),
    (PAIRS, pair_values),
    (ExtendedRealDomain(), real_values),
    (DualDomain(LEVELS), level_values),
]


class TestLatticeLaws:
    """Join and meet behave as a lattice on every shipped domain."""

    @pytest.mark.parametrize("domain,values", CASES)
    def test_commutative_and_idempotent(self, domain, values):
        @given(values, values)
        def check(a, b):
            assert values_equal(domain.join(a, b), domain.join(b, a), domain)
            assert values_equal(domain.meet(a, b), domain.meet(b, a), domain)
            assert values_equal(domain.join(a, a), a, domain)

        check()

    @pytest.mark.parametrize("domain,values", CASES)
    def test_absorption(self, domain, values):
        @given(values, values)
        def check(a, b):
            assert values_equal(domain.join(a, domain.meet(a, b)), a, domain)
            assert values_equal(domain.meet(a, domain.join(a, b)), a, domain)

        check()

    @pytest.mark.parametrize("domain,values", CASES)
    def test_join_is_upper_bound(self, domain, values):
        @given(values, values)
        def check(a, b):
            j = domain.join(a, b)
            assert compare(j, a, domain) in (Order.GREATER, Order.EQUAL)
            assert compare(j, b, domain) in (Order.GREATER, Order.EQUAL)

        check()

    @pytest.mark.parametrize("domain,values", CASES)
    def test_top_and_bottom_are_extremal(self, domain, values):
        @given(values)
        def check(a):
            assert values_equal(domain.join(a, domain.top()), domain.top(), domain)
            assert values_equal(domain.meet(a, domain.bottom()), domain.bottom(), domain)

        check()


class TestCompare:
    def test_incomparable_pairs(self):
        assert compare((1, 0), (0, 1), PAIRS) is Order.INCOMPARABLE
        assert not_geq((1, 0), (0, 1), PAIRS)
        assert not_geq((0, 1), (1, 0), PAIRS)

    def test_not_geq_on_chains(self):
        assert not_geq(1, 2, NAT)
        assert not not_geq(2, 2, NAT)
        assert not not_geq(math.inf, 2, NAT)

    def test_membership_is_checked(self):
        with pytest.raises(DomainMismatch):
            compare(-1, 2, NAT)
        with pytest.raises(DomainMismatch):
            compare(9, 2, NAT8)

    def test_dual_reverses(self):
        dual = DualDomain(LEVELS)
        assert compare(0, 2, dual) is Order.GREATER
        assert dual.top() == LEVELS.bottom()
        assert dual.dual() == LEVELS


class TestAggregate:
    def test_join_and_meet(self):
        assert aggregate([3, 1, 7], "join", NAT) == 7
        assert aggregate([3, 1, 7], "meet", NAT) == 1
        assert aggregate([(1, 0), (0, 2)], "join", PAIRS) == (1, 2)

    def test_empty_set(self):
        with pytest.raises(EmptySet):
            aggregate([], "join", NAT)

    def test_unknown_mode(self):
        with pytest.raises(BadParams):
            aggregate([1], "sum", NAT)


class TestCappedNaturals:
    """Finite values at or beyond the cap collapse into the saturation value."""

    def test_saturation(self):
        assert NAT8.normalize(12) == 8
        assert NAT8.format_value(8) == "≥8"
        assert NAT8.parse_value("≥8") == 8
        assert NAT8.to_number(8) == math.inf

    def test_infinity_stays_above_saturation(self):
        assert NAT8.top() == math.inf
        assert NAT8.normalize(math.inf) == math.inf
        assert NAT8.parse_value("inf") == math.inf
        assert NAT8.format_value(math.inf) == "inf"
        assert compare(8, math.inf, NAT8) is Order.LESS
        assert NAT8.join(8, math.inf) == math.inf
        assert not values_equal(8, math.inf, NAT8)

    def test_both_stand_for_top(self):
        assert NAT8.stands_for_top(8)
        assert NAT8.stands_for_top(math.inf)
        assert not NAT8.stands_for_top(7)
        assert DualDomain(NAT8).stands_for_bottom(8)
        assert value_gap(math.inf, 8, NAT8) == 0.0

    def test_uncapped_infinity(self):
        assert NAT.top() == math.inf
        assert NAT.format_value(math.inf) == "inf"


class TestNumericGaps:
    def test_value_gap(self):
        assert value_gap(5, 2, NAT) == 3.0
        assert value_gap(math.inf, math.inf, NAT) == 0.0
        assert value_gap(math.inf, 3, NAT) == math.inf

    def test_non_numeric(self):
        with pytest.raises(DomainNotNumeric):
            value_gap(2, 0, LEVELS)

    def test_order_key_requires_total_order(self):
        with pytest.raises(UnsupportedDomain):
            PAIRS.order_key((0, 0))

    def test_sorted_values_dedups(self):
        assert sorted_values([3, 1, 3, 0], NAT) == [0, 1, 3]


class TestDescriptors:
    @pytest.mark.parametrize(
        "domain",
        [NAT, NAT8, LEVELS, PAIRS, UnitIntervalDomain(), ExtendedRealDomain(low=0.0), DualDomain(NAT8), BooleanDomain()],
    )
    def test_descriptor_rebuilds_domain(self, domain):
        assert domain_from_descriptor(domain.to_descriptor()) == domain

    def test_unknown_fields_rejected(self):
        with pytest.raises(BadParams):
            domain_from_descriptor({"kind": "boolean", "extra": 1})

    def test_unknown_kind_rejected(self):
        with pytest.raises(BadParams):
            domain_from_descriptor({"kind": "complex"})
