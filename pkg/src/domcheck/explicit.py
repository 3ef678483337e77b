"""Explicit-value domain: partial maps from variables to concrete integers.

A variable missing from the map may hold any value.  ``None`` stands for the
infeasible (bottom) state wherever a transfer can fail.

States are stored as tuples indexed by a process-wide variable numbering, with
:data:`UNKNOWN` in the slots of unbound variables and no trailing unknowns, so
equal maps have equal tuples.  Edge transfers can be compiled once into
closures over these tuples; :func:`transfer` is the uncompiled entry point.
"""

from __future__ import annotations

import threading
from typing import AbstractSet, Callable, Iterator, Mapping, Optional

from domcheck import semantics
from domcheck.frontend import ast as A
from domcheck.frontend.cfa import Assign, Assume, CfaEdge, Decl, EdgeOp, Skip


class _Unknown:
    """The result of evaluating an expression the state cannot decide."""

    _instance: Optional["_Unknown"] = None

    def __new__(cls) -> "_Unknown":
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "UNKNOWN"

    def __reduce__(self):
        return (_Unknown, ())


UNKNOWN = _Unknown()

_names: list[str] = []
_index: dict[str, int] = {}
_lock = threading.Lock()


def slot(name: str) -> int:
    """The tuple position of ``name``, allocating one on first use."""
    i = _index.get(name)
    if i is None:
        with _lock:
            i = _index.get(name)
            if i is None:
                i = len(_names)
                _names.append(name)
                _index[name] = i
    return i


def _strip(values: list) -> tuple:
    while values and values[-1] is UNKNOWN:
        values.pop()
    return tuple(values)


def _popcount(n: int) -> int:
    return bin(n).count("1")


class ExplicitState(Mapping[str, int]):
    """An immutable valuation."""

    __slots__ = ("key", "mask")

    def __init__(self, values: Mapping[str, int] | None = None):
        slots: list = []
        mask = 0
        for name, value in (values or {}).items():
            i = slot(name)
            if i >= len(slots):
                slots.extend([UNKNOWN] * (i + 1 - len(slots)))
            slots[i] = int(value)
            mask |= 1 << i
        self.key: tuple = _strip(slots)
        # bit i set iff the variable in slot i is bound
        self.mask: int = mask

    @classmethod
    def from_key(cls, key: tuple, mask: Optional[int] = None) -> "ExplicitState":
        state = cls.__new__(cls)
        state.key = key
        if mask is None:
            mask = 0
            for i, v in enumerate(key):
                if v is not UNKNOWN:
                    mask |= 1 << i
        state.mask = mask
        return state

    @property
    def bound(self) -> frozenset[str]:
        """The set of variables with a known value."""
        return frozenset(_names[i] for i, v in enumerate(self.key) if v is not UNKNOWN)

    def get(self, name: str, default=None):
        i = _index.get(name)
        if i is None or i >= len(self.key):
            return default
        v = self.key[i]
        return default if v is UNKNOWN else v

    def __getitem__(self, name: str) -> int:
        v = self.get(name, UNKNOWN)
        if v is UNKNOWN:
            raise KeyError(name)
        return v

    def __contains__(self, name: object) -> bool:
        return isinstance(name, str) and self.get(name, UNKNOWN) is not UNKNOWN

    def __iter__(self) -> Iterator[str]:
        return (_names[i] for i, v in enumerate(self.key) if v is not UNKNOWN)

    def __len__(self) -> int:
        return _popcount(self.mask)

    def __hash__(self) -> int:
        return hash(self.key)

    def __eq__(self, other: object) -> bool:
        if isinstance(other, ExplicitState):
            return self.key == other.key
        if isinstance(other, Mapping):
            return dict(self.items()) == dict(other.items())
        return NotImplemented

    def set(self, name: str, value: int) -> "ExplicitState":
        return _set_slot(self, slot(name), value)

    def forget(self, name: str) -> "ExplicitState":
        i = _index.get(name)
        if i is None:
            return self
        return _forget_slot(self, i)

    def project(self, names: AbstractSet[str]) -> "ExplicitState":
        return ExplicitState({k: self[k] for k in names if k in self})

    def without_mask(self, removed: int) -> tuple:
        """The key of this state with the slots in ``removed`` unbound."""
        values = list(self.key)
        while removed:
            low = removed & -removed
            values[low.bit_length() - 1] = UNKNOWN
            removed ^= low
        return _strip(values)

    def __repr__(self) -> str:
        return render(self)


def _set_slot(state: ExplicitState, i: int, value: int) -> ExplicitState:
    key = state.key
    if i < len(key):
        old = key[i]
        if old is not UNKNOWN and old == value:
            return state
        new = key[:i] + (value,) + key[i + 1 :]
    else:
        new = key + (UNKNOWN,) * (i - len(key)) + (value,)
    return ExplicitState.from_key(new, state.mask | (1 << i))


def _forget_slot(state: ExplicitState, i: int) -> ExplicitState:
    key = state.key
    if i >= len(key) or key[i] is UNKNOWN:
        return state
    if i == len(key) - 1:
        return ExplicitState.from_key(_strip(list(key[:i])), state.mask & ~(1 << i))
    return ExplicitState.from_key(key[:i] + (UNKNOWN,) + key[i + 1 :], state.mask & ~(1 << i))


EMPTY = ExplicitState()

# -- evaluation ---------------------------------------------------------------

Evaluator = Callable[[tuple], object]


def compile_expr(e: A.Expr, width: int = semantics.INT_WIDTH) -> Evaluator:
    """A function from a state key to the value of ``e`` or :data:`UNKNOWN`."""
    if isinstance(e, A.Const):
        c = semantics.wrap(e.value, width)
        return lambda key: c
    if isinstance(e, A.Var):
        i = slot(e.name)
        return lambda key: key[i] if i < len(key) else UNKNOWN
    if isinstance(e, A.Nondet):
        return lambda key: UNKNOWN
    if isinstance(e, A.Unary):
        inner = compile_expr(e.operand, width)
        uop = e.op

        def unary(key):
            v = inner(key)
            return UNKNOWN if v is UNKNOWN else semantics.unary(uop, v, width)

        return unary
    assert isinstance(e, A.Binary)
    lhs = compile_expr(e.lhs, width)
    rhs = compile_expr(e.rhs, width)
    op = e.op
    if op == "&&":

        def conj(key):
            a = lhs(key)
            if a is not UNKNOWN and a == 0:
                return 0
            b = rhs(key)
            if b is not UNKNOWN and b == 0:
                return 0
            if a is UNKNOWN or b is UNKNOWN:
                return UNKNOWN
            return 1

        return conj
    if op == "||":

        def disj(key):
            a = lhs(key)
            if a is not UNKNOWN and a != 0:
                return 1
            b = rhs(key)
            if b is not UNKNOWN and b != 0:
                return 1
            if a is UNKNOWN or b is UNKNOWN:
                return UNKNOWN
            return 0

        return disj
    if op in ("/", "%"):

        def division(key):
            b = rhs(key)
            if b is UNKNOWN or b == 0:
                return UNKNOWN
            a = lhs(key)
            return UNKNOWN if a is UNKNOWN else semantics.binary(op, a, b, width)

        return division
    if op == "==":

        def eq(key):
            a = lhs(key)
            b = rhs(key)
            if a is UNKNOWN or b is UNKNOWN:
                return UNKNOWN
            return 1 if a == b else 0

        return eq
    if op == "!=":

        def ne(key):
            a = lhs(key)
            b = rhs(key)
            if a is UNKNOWN or b is UNKNOWN:
                return UNKNOWN
            return 1 if a != b else 0

        return ne

    def other(key):
        a = lhs(key)
        if a is UNKNOWN:
            return UNKNOWN
        b = rhs(key)
        if b is UNKNOWN:
            return UNKNOWN
        return semantics.binary(op, a, b, width)

    return other


def evaluate(state: Mapping[str, int], e: A.Expr, width: int = semantics.INT_WIDTH):
    """Wrapping evaluation; :data:`UNKNOWN` when the state does not determine ``e``."""
    if not isinstance(state, ExplicitState):
        state = ExplicitState(state)
    return compile_expr(e, width)(state.key)


# -- transfer -----------------------------------------------------------------


def _learners(e: A.Expr, polarity: bool, precision: AbstractSet[str], width: int) -> list[tuple[int, Evaluator]]:
    """Bindings ``slot := value`` implied by assuming ``e`` with ``polarity``."""
    if isinstance(e, A.Unary) and e.op == "!":
        return _learners(e.operand, not polarity, precision, width)
    if isinstance(e, A.Binary):
        if (e.op == "&&" and polarity) or (e.op == "||" and not polarity):
            return _learners(e.lhs, polarity, precision, width) + _learners(e.rhs, polarity, precision, width)
        if e.op in A.EQUALITY_OPS and (e.op == "==") == polarity:
            out = []
            for var, other in ((e.lhs, e.rhs), (e.rhs, e.lhs)):
                if isinstance(var, A.Var) and var.name in precision:
                    out.append((slot(var.name), compile_expr(other, width)))
            return out
        return []
    if isinstance(e, A.Var) and not polarity and e.name in precision:
        return [(slot(e.name), lambda key: 0)]
    return []


Transfer = Callable[[ExplicitState], Optional[ExplicitState]]


def compile_transfer(op: EdgeOp | CfaEdge, precision: AbstractSet[str], width: int = semantics.INT_WIDTH) -> Transfer:
    """The transfer function of one edge, specialized to ``precision``."""
    if isinstance(op, CfaEdge):
        op = op.op
    if isinstance(op, Skip):
        return lambda state: state
    if isinstance(op, (Assign, Decl)):
        expr = op.expr if isinstance(op, Assign) else op.init
        if op.var not in precision:
            return lambda state: state
        i = slot(op.var)
        if expr is None or A.contains_nondet(expr):
            return lambda state: _forget_slot(state, i)
        value_of = compile_expr(expr, width)

        def assign(state: ExplicitState) -> ExplicitState:
            value = value_of(state.key)
            if value is UNKNOWN:
                return _forget_slot(state, i)
            return _set_slot(state, i, value)

        return assign
    if isinstance(op, Assume):
        cond = compile_expr(op.expr, width)
        polarity = op.polarity
        learners = _learners(op.expr, polarity, precision, width)

        def assume(state: ExplicitState) -> Optional[ExplicitState]:
            value = cond(state.key)
            if value is not UNKNOWN:
                return state if (value != 0) == polarity else None
            refined = state
            for i, value_of in learners:
                key = refined.key
                if i < len(key) and key[i] is not UNKNOWN:
                    continue
                v = value_of(key)
                if v is not UNKNOWN:
                    refined = _set_slot(refined, i, v)
            if refined is not state:
                # a learned binding may expose a contradiction elsewhere in the condition
                again = cond(refined.key)
                if again is not UNKNOWN and (again != 0) != polarity:
                    return None
            return refined

        return assume
    raise TypeError(f"unknown edge operation {op!r}")


def transfer(
    state: Mapping[str, int],
    op: EdgeOp | CfaEdge,
    precision: AbstractSet[str],
    width: int = semantics.INT_WIDTH,
) -> Optional[ExplicitState]:
    """Successor of ``state`` along one edge, or ``None`` if infeasible."""
    if not isinstance(state, ExplicitState):
        state = ExplicitState(state)
    return compile_transfer(op, precision, width)(state)


def subsumes(s1: Optional[Mapping[str, int]], s2: Optional[Mapping[str, int]]) -> bool:
    """True iff ``s1`` is covered by ``s2``: every fact of ``s2`` also holds in ``s1``."""
    if s1 is None:
        return True
    if s2 is None:
        return False
    if len(s2) > len(s1):
        return False
    for k, v in s2.items():
        if k not in s1 or s1[k] != v:
            return False
    return True


def render(state: Optional[Mapping[str, int]]) -> str:
    if state is None:
        return "⊥"
    return "{" + ", ".join(f"{k}={v}" for k, v in state.items()) + "}"
