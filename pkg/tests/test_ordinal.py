import pickle
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from transfix.errors import NotALimit, OrdinalParseError
from transfix.ordinal import (OMEGA, ONE, ZERO, Kind, Ordinal, add, classify, compare, descend,
                              fundamental_seq, nat_scale, parse_ordinal)

from helpers import finite_exponent_coeffs, limit_ordinals, model_add, model_compare, ordinals

w = OMEGA


def P(text):
    return parse_ordinal(text)


class TestCompare:
    def test_zero_equals_zero(self):
        assert compare(ZERO, ZERO) == 0

    def test_omega_exceeds_naturals(self):
        assert compare(w, Ordinal.from_int(3)) == 1

    def test_exponent_dominates(self):
        assert compare(P("w^w"), P("w*1000 + 999")) == 1

    def test_ints_mix_in(self):
        assert Ordinal.from_int(5) == 5
        assert 4 < Ordinal.from_int(5) < w
        assert hash(Ordinal.from_int(7)) == hash(7)


class TestAdd:
    def test_left_absorption(self):
        assert add(ONE, w) == w

    def test_successor_of_omega(self):
        assert add(w, ONE) == P("w + 1")

    def test_doubled_successor(self):
        assert add(P("w+1"), P("w+1")) == P("w*2 + 1")

    def test_operators(self):
        assert 1 + w == w
        assert w + 1 == P("w+1")
        assert w * 3 == P("w*3")


class TestNatScale:
    def test_omega_times_three(self):
        assert nat_scale(w, 3) == P("w*3")

    def test_zero(self):
        assert nat_scale(ZERO, 5) == ZERO

    def test_successor_times_two(self):
        assert nat_scale(P("w+1"), 2) == P("w*2+1")

    def test_zero_factor_gives_zero(self):
        # used by the successor-exponent rule at index 0
        assert nat_scale(w, 0) == ZERO

    def test_rejects_negative_factor(self):
        with pytest.raises(ValueError):
            nat_scale(w, -1)


class TestClassify:
    def test_zero(self):
        assert classify(ZERO).kind is Kind.ZERO

    def test_successor(self):
        c = classify(P("w+4"))
        assert c.kind is Kind.SUCCESSOR and c.pred == P("w+3")

    def test_limit(self):
        assert classify(P("w^2")).kind is Kind.LIMIT


class TestFundamentalSequence:
    def test_omega(self):
        assert fundamental_seq(w, 3) == 3

    def test_omega_squared(self):
        assert fundamental_seq(P("w^2"), 2) == P("w*2")

    def test_omega_to_omega(self):
        assert fundamental_seq(P("w^w"), 2) == P("w^2")

    def test_keeps_prefix(self):
        assert fundamental_seq(P("w^2 + w*3"), 4) == P("w^2 + w*2 + 4")

    @pytest.mark.parametrize("text", ["0", "5", "w+1"])
    def test_not_a_limit(self, text):
        with pytest.raises(NotALimit):
            fundamental_seq(P(text), 1)


class TestSyntax:
    @pytest.mark.parametrize("text", ["0", "7", "w", "w + 1", "w*3 + 2", "w^2*3 + w + 5", "w^w + w^2*3 + 5",
                                      "w^(w + 1)", "w^(w^w)", "w^(w^2*2 + 3)*4 + 1"])
    def test_round_trip(self, text):
        assert str(P(text)) == text
        assert P(str(P(text))) == P(text)

    def test_unicode_omega_and_spacing(self):
        assert P("ω^2*3+ω") == P("w^2*3 + w")

    def test_non_canonical_input_normalises(self):
        assert P("3 + w") == w
        assert P("w + w") == P("w*2")

    @pytest.mark.parametrize("text, column", [("w^", 3), ("w + + 1", 5), ("w^(w", 5), ("w 3", 3), ("x", 1)])
    def test_errors_point_at_column(self, text, column):
        with pytest.raises(OrdinalParseError) as info:
            P(text)
        assert info.value.column == column

    def test_pickle(self):
        a = P("w^(w+1)*2 + 3")
        assert pickle.loads(pickle.dumps(a)) == a


class TestAgainstIndependentModel:
    """Order and addition on ordinals below w^w, checked against coefficient vectors."""

    @given(ordinals(depth=1), ordinals(depth=1))
    def test_compare(self, a, b):
        assert compare(a, b) == model_compare(finite_exponent_coeffs(a), finite_exponent_coeffs(b))

    @given(ordinals(depth=1), ordinals(depth=1))
    def test_add(self, a, b):
        got = finite_exponent_coeffs(add(a, b))
        assert got == model_add(finite_exponent_coeffs(a), finite_exponent_coeffs(b))


class TestProperties:
    @given(ordinals(), ordinals())
    def test_trichotomy(self, a, b):
        assert [a < b, a == b, a > b].count(True) == 1
        assert compare(a, b) == -compare(b, a)

    @given(ordinals(), ordinals(), ordinals())
    def test_transitivity(self, a, b, c):
        if a <= b and b <= c:
            assert a <= c

    @given(ordinals(), ordinals(), ordinals())
    def test_add_associative(self, a, b, c):
        assert add(add(a, b), c) == add(a, add(b, c))

    @given(ordinals())
    def test_zero_is_neutral(self, a):
        assert add(a, ZERO) == a == add(ZERO, a)

    @given(ordinals(), ordinals(), ordinals())
    def test_add_right_monotone(self, a, b, c):
        if b < c:
            assert add(a, b) < add(a, c)

    @given(ordinals(), ordinals())
    def test_add_left_weakly_monotone(self, a, b):
        assert add(a, b) >= b

    @given(ordinals(), st.integers(min_value=1, max_value=5))
    def test_nat_scale_is_repeated_addition(self, a, n):
        total = ZERO
        for _ in range(n):
            total = add(total, a)
        assert nat_scale(a, n) == total

    @given(limit_ordinals(), st.integers(min_value=0, max_value=20))
    def test_fundamental_sequence_grows_below_limit(self, lam, n):
        assert fundamental_seq(lam, n) < fundamental_seq(lam, n + 1) < lam

    @given(limit_ordinals(), ordinals())
    def test_fundamental_sequence_is_cofinal(self, lam, below):
        # every smaller ordinal is eventually passed; for these sizes n=60 always suffices
        if below < lam:
            assert any(fundamental_seq(lam, n) >= below for n in range(60))

    @given(ordinals())
    def test_successor_round_trip(self, a):
        c = classify(add(a, ONE))
        assert c.kind is Kind.SUCCESSOR and c.pred == a

    @given(ordinals())
    def test_print_parse_round_trip(self, a):
        assert parse_ordinal(str(a)) == a
        assert str(parse_ordinal(str(a))) == str(a)

    @settings(max_examples=50)
    @given(ordinals(), st.integers(min_value=0, max_value=2**32 - 1))
    def test_descent_terminates(self, a, seed):
        rng = random.Random(seed)
        previous = a
        for steps, b in enumerate(descend(a, lambda lam: rng.randint(0, 2)), 1):
            assert b < previous
            previous = b
            assert steps < 10_000
        assert previous == ZERO
