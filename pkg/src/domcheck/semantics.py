"""Concrete two's-complement integer semantics at a configurable width.

Every operator wraps at ``width`` bits.  Division truncates toward zero as in
C.  Shift amounts are read as unsigned ``width``-bit numbers; an amount of
``width`` or more shifts every bit out (``<<`` yields 0, ``>>`` yields the
sign fill).  Division or remainder by zero is not defined here; callers decide.
"""

from __future__ import annotations

INT_WIDTH = 32


def wrap(value: int, width: int = INT_WIDTH) -> int:
    """Reduce ``value`` to the signed range of ``width`` bits."""
    mask = (1 << width) - 1
    value &= mask
    if value >> (width - 1):
        value -= 1 << width
    return value


def to_unsigned(value: int, width: int = INT_WIDTH) -> int:
    return value & ((1 << width) - 1)


def div(a: int, b: int, width: int = INT_WIDTH) -> int:
    q = abs(a) // abs(b)
    if (a < 0) != (b < 0):
        q = -q
    return wrap(q, width)


def rem(a: int, b: int, width: int = INT_WIDTH) -> int:
    r = abs(a) % abs(b)
    if a < 0:
        r = -r
    return wrap(r, width)


def shl(a: int, amount: int, width: int = INT_WIDTH) -> int:
    k = to_unsigned(amount, width)
    if k >= width:
        return 0
    return wrap(a << k, width)


def shr(a: int, amount: int, width: int = INT_WIDTH) -> int:
    k = to_unsigned(amount, width)
    if k >= width:
        return -1 if a < 0 else 0
    return wrap(a >> k, width)


def binary(op: str, a: int, b: int, width: int = INT_WIDTH) -> int:
    """Apply a non-short-circuit binary operator to wrapped operands.

    Raises ZeroDivisionError for ``/`` and ``%`` with ``b == 0``.
    """
    if op == "+":
        return wrap(a + b, width)
    if op == "-":
        return wrap(a - b, width)
    if op == "*":
        return wrap(a * b, width)
    if op == "/":
        if b == 0:
            raise ZeroDivisionError
        return div(a, b, width)
    if op == "%":
        if b == 0:
            raise ZeroDivisionError
        return rem(a, b, width)
    if op == "<<":
        return shl(a, b, width)
    if op == ">>":
        return shr(a, b, width)
    if op == "&":
        return wrap(a & b, width)
    if op == "|":
        return wrap(a | b, width)
    if op == "^":
        return wrap(a ^ b, width)
    if op == "==":
        return int(a == b)
    if op == "!=":
        return int(a != b)
    if op == "<":
        return int(a < b)
    if op == ">":
        return int(a > b)
    if op == "<=":
        return int(a <= b)
    if op == ">=":
        return int(a >= b)
    if op == "&&":
        return int(bool(a) and bool(b))
    if op == "||":
        return int(bool(a) or bool(b))
    raise ValueError(f"unknown binary operator {op!r}")


def unary(op: str, a: int, width: int = INT_WIDTH) -> int:
    if op == "-":
        return wrap(-a, width)
    if op == "~":
        return wrap(~a, width)
    if op == "!":
        return int(a == 0)
    raise ValueError(f"unknown unary operator {op!r}")
