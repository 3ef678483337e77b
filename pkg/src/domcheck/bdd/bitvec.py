"""Bit-vector circuits over a :class:`BddStore`.

A :class:`BitVec` is a list of BDD nodes, least significant bit first.  All
arithmetic wraps at the vector width and reads vectors as two's complement.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

from domcheck.bdd.store import FALSE, TRUE, BddStore
from domcheck.errors import ShiftOutOfRange, WidthMismatch, WidthOverflow

MAX_WIDTH = 32


@dataclass(frozen=True)
class BitVec:
    store: BddStore = field(repr=False, compare=False)
    bits: tuple[int, ...]

    @property
    def width(self) -> int:
        return len(self.bits)

    @property
    def msb(self) -> int:
        return self.bits[-1]

    def is_const(self) -> bool:
        return all(b < 2 for b in self.bits)

    def value(self) -> Optional[int]:
        """The signed value if every bit is a terminal, else ``None``."""
        if not self.is_const():
            return None
        u = sum(1 << i for i, b in enumerate(self.bits) if b == TRUE)
        if self.bits[-1] == TRUE:
            u -= 1 << self.width
        return u


def _check_width(width: int) -> None:
    if not 1 <= width <= MAX_WIDTH:
        raise WidthOverflow(f"width {width} outside 1..{MAX_WIDTH}")


def _same(a: BitVec, b: BitVec) -> BddStore:
    if a.width != b.width:
        raise WidthMismatch(f"widths {a.width} and {b.width} differ")
    if a.store is not b.store:
        raise WidthMismatch("bit-vectors belong to different stores")
    return a.store


def bv_const(store: BddStore, width: int, value: int) -> BitVec:
    _check_width(width)
    if not -(1 << (width - 1)) <= value < (1 << width):
        raise WidthOverflow(f"{value} does not fit in {width} bits")
    u = value & ((1 << width) - 1)
    return BitVec(store, tuple(TRUE if (u >> i) & 1 else FALSE for i in range(width)))


def bv_var(store: BddStore, layout) -> BitVec:
    """The vector of projection functions of ``layout.bits`` (or a plain bit list)."""
    bits = getattr(layout, "bits", layout)
    _check_width(len(bits))
    return BitVec(store, tuple(store.var(b) for b in bits))


def bv_from_nodes(store: BddStore, nodes: Sequence[int]) -> BitVec:
    _check_width(len(nodes))
    return BitVec(store, tuple(nodes))


def bv_from_bool(store: BddStore, pred: int, width: int) -> BitVec:
    """0/1 valued vector from a predicate."""
    _check_width(width)
    return BitVec(store, (pred,) + (FALSE,) * (width - 1))


def bv_ite(cond: int, a: BitVec, b: BitVec) -> BitVec:
    s = _same(a, b)
    return BitVec(s, tuple(s.ite(cond, x, y) for x, y in zip(a.bits, b.bits)))


def bv_nonzero(a: BitVec) -> int:
    return a.store.disjoin(a.bits)


def bv_restrict(a: BitVec, care: int) -> BitVec:
    s = a.store
    return BitVec(s, tuple(s.restrict(b, care) for b in a.bits))


# -- arithmetic -----------------------------------------------------------


def _add_with_carry(s: BddStore, xs: Sequence[int], ys: Sequence[int], carry: int) -> list[int]:
    out = []
    for x, y in zip(xs, ys):
        if x < 2 and y < 2 and carry < 2:
            # terminals are 0/1, so plain bit operations apply
            t = x ^ y
            out.append(t ^ carry)
            carry = (x & y) | (carry & t)
            continue
        t = s.xor(x, y)
        out.append(s.xor(t, carry))
        # majority(x, y, carry)
        carry = s.or_(s.and_(x, y), s.and_(carry, t))
    return out


def bv_add(a: BitVec, b: BitVec) -> BitVec:
    s = _same(a, b)
    return BitVec(s, tuple(_add_with_carry(s, a.bits, b.bits, FALSE)))


def bv_not(a: BitVec) -> BitVec:
    s = a.store
    return BitVec(s, tuple(s.not_(x) for x in a.bits))


def bv_sub(a: BitVec, b: BitVec) -> BitVec:
    s = _same(a, b)
    return BitVec(s, tuple(_add_with_carry(s, a.bits, [s.not_(y) for y in b.bits], TRUE)))


def bv_neg(a: BitVec) -> BitVec:
    return bv_sub(bv_const(a.store, a.width, 0), a)


def bv_mul(a: BitVec, b: BitVec) -> BitVec:
    """Shift-add multiplier keeping the low ``width`` bits."""
    s = _same(a, b)
    w = a.width
    acc = [FALSE] * w
    for i, bi in enumerate(b.bits):
        if bi == FALSE:
            continue
        partial = [FALSE] * i + [s.and_(bi, x) for x in a.bits[: w - i]]
        acc[i:] = _add_with_carry(s, acc[i:], partial[i:], FALSE)
    return BitVec(s, tuple(acc))


def _ult(s: BddStore, xs: Sequence[int], ys: Sequence[int]) -> int:
    """Unsigned ``x < y``, scanning from the least significant bit."""
    lt = FALSE
    for x, y in zip(xs, ys):
        # at this bit: y set and x clear decides less; equal bits defer to lower bits
        if x < 2 and y < 2:
            if x != y:
                lt = y
            continue
        lt = s.ite(s.xor(x, y), y, lt)
    return lt


def bv_udivrem(a: BitVec, b: BitVec) -> tuple[BitVec, BitVec]:
    """Restoring unsigned division; the result for a zero divisor is unspecified."""
    s = _same(a, b)
    w = a.width
    rem = [FALSE] * w
    quot = [FALSE] * w
    for i in reversed(range(w)):
        # rem = (rem << 1) | a[i], tracking the bit shifted out
        overflow = rem[-1]
        rem = [a.bits[i]] + rem[:-1]
        ge = s.or_(overflow, s.not_(_ult(s, rem, b.bits)))
        quot[i] = ge
        if ge == FALSE:
            continue
        diff = _add_with_carry(s, rem, [s.not_(y) for y in b.bits], TRUE)
        rem = diff if ge == TRUE else [s.ite(ge, d, r) for d, r in zip(diff, rem)]
    return BitVec(s, tuple(quot)), BitVec(s, tuple(rem))


def _abs(a: BitVec) -> BitVec:
    return bv_ite(a.msb, bv_neg(a), a)


def bv_sdiv(a: BitVec, b: BitVec) -> BitVec:
    """Signed division truncating toward zero (undefined for a zero divisor)."""
    s = _same(a, b)
    q, _ = bv_udivrem(_abs(a), _abs(b))
    return bv_ite(s.xor(a.msb, b.msb), bv_neg(q), q)


def bv_srem(a: BitVec, b: BitVec) -> BitVec:
    """Signed remainder with the sign of the dividend (undefined for a zero divisor)."""
    _same(a, b)
    _, r = bv_udivrem(_abs(a), _abs(b))
    return bv_ite(a.msb, bv_neg(r), r)


# -- comparison -----------------------------------------------------------

CMP_OPS = ("EQ", "NE", "SLT", "SLE", "SGT", "SGE")


def bv_cmp(op: str, a: BitVec, b: BitVec) -> int:
    s = _same(a, b)
    op = op.upper()
    if op in ("EQ", "NE"):
        eq = s.conjoin(s.equiv(x, y) for x, y in zip(a.bits, b.bits))
        return eq if op == "EQ" else s.not_(eq)
    # signed order = unsigned order with the sign bits flipped
    xs = list(a.bits[:-1]) + [s.not_(a.msb)]
    ys = list(b.bits[:-1]) + [s.not_(b.msb)]
    if op == "SLT":
        return _ult(s, xs, ys)
    if op == "SGT":
        return _ult(s, ys, xs)
    if op == "SLE":
        return s.not_(_ult(s, ys, xs))
    if op == "SGE":
        return s.not_(_ult(s, xs, ys))
    raise ValueError(f"unknown comparison {op!r}")


# -- bit operations and shifts ---------------------------------------------


def bv_bitwise(op: str, a: BitVec, b: BitVec) -> BitVec:
    s = _same(a, b)
    fn = {"AND": s.and_, "OR": s.or_, "XOR": s.xor}[op.upper()]
    return BitVec(s, tuple(fn(x, y) for x, y in zip(a.bits, b.bits)))


def bv_shift_const(a: BitVec, direction: str, k: int) -> BitVec:
    """Shift by a constant; ``right`` is arithmetic (sign filling)."""
    if not 0 <= k < a.width:
        raise ShiftOutOfRange(f"shift by {k} at width {a.width}")
    bits = a.bits
    if direction == "left":
        out = (FALSE,) * k + bits[: a.width - k]
    elif direction == "right":
        out = bits[k:] + (a.msb,) * k
    else:
        raise ValueError(f"unknown shift direction {direction!r}")
    return BitVec(a.store, out)


def bv_shift(a: BitVec, amount: BitVec, direction: str) -> BitVec:
    """Shift by a variable amount read as unsigned; over-shifts saturate."""
    s = _same(a, amount)
    w = a.width
    fill = FALSE if direction == "left" else a.msb
    result = a
    # barrel shifter over the amount bits that can stay below the width
    stage = 0
    while (1 << stage) < w:
        k = 1 << stage
        shifted = bv_shift_const(result, direction, k)
        result = bv_ite(amount.bits[stage], shifted, result)
        stage += 1
    # any higher amount bit, or low bits worth at least the width, shift everything out
    too_big = s.disjoin(amount.bits[stage:])
    low = list(amount.bits[:stage]) + [FALSE]
    limit = [TRUE if (w >> i) & 1 else FALSE for i in range(stage + 1)]
    too_big = s.or_(too_big, s.not_(_ult(s, low, limit)))
    return bv_ite(too_big, BitVec(s, (fill,) * w), result)
