import pytest
from hypothesis import given, settings, strategies as st

from domcheck import semantics
from domcheck.bdd.bitvec import (
    bv_add,
    bv_cmp,
    bv_const,
    bv_from_nodes,
    bv_mul,
    bv_shift_const,
    bv_sub,
)
from domcheck.bdd.store import FALSE, TRUE, BddStore
from domcheck.errors import ShiftOutOfRange, WidthMismatch, WidthOverflow

import kernel_checks as K


@pytest.fixture
def s():
    return BddStore()


class TestConstants:
    def test_five(self, s):
        assert bv_const(s, 4, 5).bits == (TRUE, FALSE, TRUE, FALSE)

    def test_minus_one(self, s):
        assert bv_const(s, 4, -1).bits == (TRUE,) * 4

    def test_overflow(self, s):
        with pytest.raises(WidthOverflow):
            bv_const(s, 4, 16)

    @pytest.mark.parametrize("w", [0, 33])
    def test_bad_width(self, s, w):
        with pytest.raises(WidthOverflow):
            bv_const(s, w, 0)


class TestArithmetic:
    def test_add_wraps(self, s):
        assert bv_add(bv_const(s, 4, 7), bv_const(s, 4, 9)).value() == 0

    def test_mul(self, s):
        assert semantics.wrap(bv_mul(bv_const(s, 4, 3), bv_const(s, 4, 5)).value(), 4) == -1

    def test_width_mismatch(self, s):
        with pytest.raises(WidthMismatch):
            bv_add(bv_const(s, 4, 1), bv_const(s, 5, 1))

    def test_stores_must_match(self, s):
        with pytest.raises((WidthMismatch, ValueError)):
            bv_sub(bv_const(s, 4, 1), bv_const(BddStore(), 4, 1))

    def test_shift_const(self, s):
        assert bv_shift_const(bv_const(s, 8, 3), "left", 1).value() == 6

    def test_shift_out_of_range(self, s):
        with pytest.raises(ShiftOutOfRange):
            bv_shift_const(bv_const(s, 8, 3), "left", 8)

    def test_eq_self_is_true(self, s):
        x = bv_from_nodes(s, [s.var(s.add_var()) for _ in range(6)])
        assert bv_cmp("EQ", x, x) == TRUE
        assert bv_cmp("SLT", x, x) == FALSE


class TestOracle:
    def test_exhaustive_up_to_width_5(self):
        assert K.check_exhaustive_circuits(5) == 0

    def test_symbolic_inputs(self):
        assert K.check_symbolic_circuits(3) == 0
        assert K.check_symbolic_circuits(4) == 0

    def test_random_width_32(self):
        assert K.check_random_wide(2000, seed=5) == 0


i32 = st.integers(-(2**31), 2**31 - 1)


@settings(max_examples=300)
@given(i32, i32)
def test_width_32_matches_wrapping(a, b):
    s = BddStore()
    assert K._check_pair(s, a, b, 32) == 0
