"""BDD domain: one predicate over the bit encodings of the BDD-tracked variables.

Encodings by domain type:

* ``Bool1``         one bit holding the truth value (``v != 0``)
* ``IntEqCompact``  ``ceil(log2(max(n, 2)))`` code bits indexing the sorted value
                    set plus one extra bit meaning "some value outside the set"
* ``Full32``        the two's-complement bits of the value (``width`` of them)

Each plain bit has a primed shadow bit placed directly below it in the order.
An assignment constrains the primed bits, quantifies the old plain bits and
renames primed to plain.  Bits standing for unknown values are drawn from a
pool of temporary bits at the bottom of the order and quantified at the end of
every transfer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Optional

from domcheck import semantics
from domcheck.bdd.bitvec import (
    BitVec,
    bv_add,
    bv_bitwise,
    bv_cmp,
    bv_const,
    bv_from_bool,
    bv_ite,
    bv_mul,
    bv_neg,
    bv_nonzero,
    bv_not,
    bv_restrict,
    bv_sdiv,
    bv_shift,
    bv_shift_const,
    bv_srem,
    bv_sub,
)
from domcheck.bdd.store import FALSE, TRUE, BddStore
from domcheck.domtype import DomainType, DomainTyping
from domcheck.errors import MixedDomainExpression
from domcheck.frontend import ast as A
from domcheck.frontend.cfa import Assign, Assume, CfaEdge, Decl, EdgeOp, Skip

BOOL1 = "Bool1"
INTEQ_COMPACT = "IntEqCompact"
FULL32 = "Full32"

_CMP = {"==": "EQ", "!=": "NE", "<": "SLT", "<=": "SLE", ">": "SGT", ">=": "SGE"}


def code_bits_for(n: int) -> int:
    return math.ceil(math.log2(max(n, 2)))


@dataclass(frozen=True)
class BitLayout:
    variable: str
    kind: str
    bits: tuple[int, ...]
    primed: tuple[int, ...]
    values: tuple[int, ...] = ()

    @property
    def code_of(self) -> dict[int, int]:
        return {v: i for i, v in enumerate(self.values)}

    @property
    def code_bits(self) -> tuple[int, ...]:
        return self.bits[:-1] if self.kind == INTEQ_COMPACT else self.bits

    @property
    def extra_bit(self) -> Optional[int]:
        return self.bits[-1] if self.kind == INTEQ_COMPACT else None

    @property
    def primed_code_bits(self) -> tuple[int, ...]:
        return self.primed[:-1] if self.kind == INTEQ_COMPACT else self.primed

    @property
    def primed_extra_bit(self) -> Optional[int]:
        return self.primed[-1] if self.kind == INTEQ_COMPACT else None


def _bit_count(kind: str, n_values: int, width: int) -> int:
    if kind == BOOL1:
        return 1
    if kind == INTEQ_COMPACT:
        return code_bits_for(n_values) + 1
    return width


def _kind_of(t: DomainType) -> str:
    if t == DomainType.BOOL:
        return BOOL1
    if t == DomainType.INTEQ:
        return INTEQ_COMPACT
    return FULL32


def _read_custom_order(path: str) -> list[str]:
    names = []
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            names.extend(line.replace(",", " ").split())
    return names


def make_layouts(
    typing: DomainTyping,
    bdd_tracked: Iterable[str],
    width: int = semantics.INT_WIDTH,
    order: str = "declared",
) -> dict[str, BitLayout]:
    """Bit layouts for the tracked variables.

    ``order`` is ``declared`` (each variable's bits contiguous, variables in
    declaration order), ``interleaved`` (bit ``i`` of every wide variable
    next to each other) or ``custom:PATH`` (a file listing variable names).
    Bit indices start at 0; each plain bit ``2k`` has its primed shadow at ``2k+1``.
    """
    tracked = set(bdd_tracked)
    variables = [v for v in typing.variables if v in tracked]
    if order.startswith("custom:"):
        wanted = [v for v in _read_custom_order(order[len("custom:"):]) if v in tracked]
        seen = set(wanted)
        variables = list(dict.fromkeys(wanted)) + [v for v in variables if v not in seen]
    elif order not in ("declared", "interleaved"):
        raise ValueError(f"unknown bit order {order!r}")

    kinds = {v: _kind_of(typing.type_of[v]) for v in variables}
    values = {v: tuple(sorted(typing.value_set.get(v, {0}))) for v in variables if kinds[v] == INTEQ_COMPACT}
    counts = {v: _bit_count(kinds[v], len(values.get(v, ())), width) for v in variables}

    slots: list[tuple[str, int]] = []
    if order == "interleaved":
        narrow = [v for v in variables if kinds[v] != FULL32]
        wide = [v for v in variables if kinds[v] == FULL32]
        for v in narrow:
            slots.extend((v, i) for i in range(counts[v]))
        for i in range(width):
            slots.extend((v, i) for v in wide)
    else:
        for v in variables:
            slots.extend((v, i) for i in range(counts[v]))

    position: dict[tuple[str, int], int] = {slot: k for k, slot in enumerate(slots)}
    layouts = {}
    for v in variables:
        plain = tuple(2 * position[(v, i)] for i in range(counts[v]))
        layouts[v] = BitLayout(v, kinds[v], plain, tuple(b + 1 for b in plain), values.get(v, ()))
    return layouts


def total_bits(layouts: Mapping[str, BitLayout]) -> int:
    return sum(len(l.bits) for l in layouts.values())


@dataclass
class BddDomain:
    """Transfer, join and entailment over one private node store."""

    layouts: dict[str, BitLayout]
    width: int = semantics.INT_WIDTH
    store: BddStore = field(default_factory=BddStore)
    # raise instead of havocking when an expression reads an untracked variable
    strict: bool = False

    def __post_init__(self) -> None:
        n = 2 * total_bits(self.layouts)
        names = [""] * n
        for l in self.layouts.values():
            for i, (b, p) in enumerate(zip(l.bits, l.primed)):
                names[b] = f"{l.variable}.{i}"
                names[p] = f"{l.variable}'.{i}"
        for name in names:
            self.store.add_var(name)
        self._pool: list[int] = []
        self._pool_next = 0
        self._valid: dict[str, int] = {}
        self._plain_bits = frozenset(b for l in self.layouts.values() for b in l.bits)

    # -- basics -------------------------------------------------------------

    def top(self) -> int:
        s = TRUE
        for v in self.layouts:
            s = self.store.and_(s, self.valid(v))
        return s

    def tracks(self, var: str) -> bool:
        return var in self.layouts

    def valid(self, var: str) -> int:
        """Well-formedness of a variable's code (only IntEq codes are constrained)."""
        r = self._valid.get(var)
        if r is None:
            l = self.layouts[var]
            r = TRUE
            if l.kind == INTEQ_COMPACT:
                r = self._valid_compact(l.code_bits, l.extra_bit, len(l.values))
            self._valid[var] = r
        return r

    def _valid_compact(self, code: tuple[int, ...], extra: int, n: int) -> int:
        s = self.store
        in_range = _ult_const(s, [s.var(b) for b in code], n)
        zero = s.conjoin(s.nvar(b) for b in code)
        return s.or_(s.and_(s.nvar(extra), in_range), s.and_(s.var(extra), zero))

    def join(self, s1: int, s2: int) -> int:
        return self.store.or_(s1, s2)

    def entails(self, s1: int, s2: int) -> bool:
        return self.store.and_(s1, self.store.not_(s2)) == FALSE

    def support_variables(self, state: int) -> set[str]:
        owner = {b: l.variable for l in self.layouts.values() for b in l.bits + l.primed}
        return {owner.get(b, "<temp>") for b in self.store.support(state)}

    # -- temporaries ----------------------------------------------------------

    def _fresh_bit(self) -> int:
        if self._pool_next == len(self._pool):
            self._pool.append(self.store.add_var(f"tmp{len(self._pool)}"))
        b = self._pool[self._pool_next]
        self._pool_next += 1
        return self.store.var(b)

    def _fresh_vec(self) -> BitVec:
        return BitVec(self.store, tuple(self._fresh_bit() for _ in range(self.width)))

    def _temps_used(self) -> list[int]:
        return self._pool[: self._pool_next]

    # -- encoding -------------------------------------------------------------

    def _foreign(self, name: str, env: Optional[Mapping[str, int]]):
        if env is None:
            if self.strict:
                raise MixedDomainExpression(f"{name} is not tracked by the BDD domain")
            return None
        return env.get(name)

    def _const(self, value: int) -> BitVec:
        return bv_const(self.store, self.width, semantics.wrap(value, self.width))

    def _code_is(self, code: tuple[int, ...], k: int) -> int:
        s = self.store
        return s.conjoin(s.literal(b, bool((k >> i) & 1)) for i, b in enumerate(code))

    def eq_const(self, var: str, value: int) -> int:
        """Predicate for ``var == value`` on a tracked variable (fresh bit if undecidable)."""
        s = self.store
        l = self.layouts[var]
        if l.kind == BOOL1:
            if value == 0:
                return s.nvar(l.bits[0])
            return s.and_(s.var(l.bits[0]), self._fresh_bit())
        if l.kind == INTEQ_COMPACT:
            codes = l.code_of
            if value in codes:
                return s.and_(self._code_is(l.code_bits, codes[value]), s.nvar(l.extra_bit))
            return s.and_(s.var(l.extra_bit), self._fresh_bit())
        return bv_cmp("EQ", self._var_vec(l, TRUE), self._const(value))

    def _var_vec(self, l: BitLayout, care: int) -> BitVec:
        s = self.store
        if l.kind == FULL32:
            return bv_restrict(BitVec(s, tuple(s.var(b) for b in l.bits)), care)
        if l.kind == BOOL1:
            return bv_from_bool(s, s.var(l.bits[0]), self.width)
        # IntEq: multiplex the decoded constants; the extra case is unknown
        acc = self._const(l.values[-1])
        for k, value in enumerate(l.values[:-1]):
            acc = bv_ite(self._code_is(l.code_bits, k), self._const(value), acc)
        acc = bv_ite(s.var(l.extra_bit), self._fresh_vec(), acc)
        return bv_restrict(acc, care)

    def encode_num(self, e: A.Expr, care: int = TRUE, env: Optional[Mapping[str, int]] = None) -> BitVec:
        s = self.store
        if isinstance(e, A.Const):
            return self._const(e.value)
        if isinstance(e, A.Var):
            l = self.layouts.get(e.name)
            if l is None:
                value = self._foreign(e.name, env)
                return self._fresh_vec() if value is None else self._const(value)
            return self._var_vec(l, care)
        if isinstance(e, A.Nondet):
            return self._fresh_vec()
        if isinstance(e, A.Unary):
            if e.op == "!":
                return bv_from_bool(s, self.encode_bool(e, care, env), self.width)
            x = self.encode_num(e.operand, care, env)
            return bv_neg(x) if e.op == "-" else bv_not(x)
        assert isinstance(e, A.Binary)
        if e.op in A.BOOLEAN_OPS or e.op in A.COMPARISON_OPS:
            return bv_from_bool(s, self.encode_bool(e, care, env), self.width)
        x = self.encode_num(e.lhs, care, env)
        y = self.encode_num(e.rhs, care, env)
        if e.op == "+":
            return bv_add(x, y)
        if e.op == "-":
            return bv_sub(x, y)
        if e.op in ("&", "|", "^"):
            return bv_bitwise({"&": "AND", "|": "OR", "^": "XOR"}[e.op], x, y)
        if e.op == "*":
            return bv_restrict(bv_mul(x, y), care)
        if e.op in ("/", "%"):
            q = bv_sdiv(x, y) if e.op == "/" else bv_srem(x, y)
            zero = bv_cmp("EQ", y, self._const(0))
            if zero != FALSE:
                # a zero divisor leaves the result unconstrained
                q = bv_ite(zero, self._fresh_vec(), q)
            return bv_restrict(q, care)
        if e.op in ("<<", ">>"):
            direction = "left" if e.op == "<<" else "right"
            k = y.value()
            if k is not None and 0 <= k < self.width:
                return bv_shift_const(x, direction, k)
            return bv_restrict(bv_shift(x, y, direction), care)
        raise ValueError(f"unknown operator {e.op!r}")

    def encode_bool(self, e: A.Expr, care: int = TRUE, env: Optional[Mapping[str, int]] = None) -> int:
        """Predicate for ``e != 0``."""
        s = self.store
        if isinstance(e, A.Const):
            return TRUE if e.value != 0 else FALSE
        if isinstance(e, A.Nondet):
            return self._fresh_bit()
        if isinstance(e, A.Var):
            l = self.layouts.get(e.name)
            if l is None:
                value = self._foreign(e.name, env)
                return self._fresh_bit() if value is None else (TRUE if value != 0 else FALSE)
            if l.kind == BOOL1:
                return s.var(l.bits[0])
            if l.kind == INTEQ_COMPACT:
                return s.not_(self.eq_const(e.name, 0))
            return bv_nonzero(self._var_vec(l, care))
        if isinstance(e, A.Unary):
            if e.op == "!":
                return s.not_(self.encode_bool(e.operand, care, env))
            return bv_nonzero(self.encode_num(e, care, env))
        assert isinstance(e, A.Binary)
        if e.op == "&&":
            return s.and_(self.encode_bool(e.lhs, care, env), self.encode_bool(e.rhs, care, env))
        if e.op == "||":
            return s.or_(self.encode_bool(e.lhs, care, env), self.encode_bool(e.rhs, care, env))
        if e.op in A.EQUALITY_OPS:
            eq = self._encode_eq(e.lhs, e.rhs, care, env)
            return eq if e.op == "==" else s.not_(eq)
        if e.op in A.RELATIONAL_OPS:
            x = self.encode_num(e.lhs, care, env)
            y = self.encode_num(e.rhs, care, env)
            return bv_cmp(_CMP[e.op], x, y)
        return bv_nonzero(self.encode_num(e, care, env))

    def _encode_eq(self, lhs: A.Expr, rhs: A.Expr, care: int, env) -> int:
        s = self.store
        if isinstance(rhs, A.Var) and rhs.name in self.layouts and not (
            isinstance(lhs, A.Var) and lhs.name in self.layouts
        ):
            lhs, rhs = rhs, lhs
        if isinstance(lhs, A.Var) and lhs.name in self.layouts:
            l = self.layouts[lhs.name]
            if l.kind != FULL32:
                const = self._as_const(rhs, env)
                if const is not None:
                    return self.eq_const(lhs.name, const)
                if isinstance(rhs, A.Var) and rhs.name in self.layouts:
                    r = self.layouts[rhs.name]
                    if l.kind == r.kind == BOOL1:
                        return s.equiv(s.var(l.bits[0]), s.var(r.bits[0]))
                    if l.kind == r.kind == INTEQ_COMPACT and l.values == r.values:
                        return self._compact_eq(l.code_bits, l.extra_bit, r.code_bits, r.extra_bit)
        return bv_cmp("EQ", self.encode_num(lhs, care, env), self.encode_num(rhs, care, env))

    def _compact_eq(self, cu, eu, cv, ev) -> int:
        s = self.store
        same = s.conjoin(s.equiv(s.var(a), s.var(b)) for a, b in zip(cu, cv))
        known = s.and_(s.and_(s.nvar(eu), s.nvar(ev)), same)
        unknown = s.and_(s.and_(s.var(eu), s.var(ev)), self._fresh_bit())
        return s.or_(known, unknown)

    def _as_const(self, e: A.Expr, env) -> Optional[int]:
        if isinstance(e, A.Const):
            return semantics.wrap(e.value, self.width)
        if isinstance(e, A.Var) and e.name not in self.layouts:
            return self._foreign(e.name, env)
        return None

    # -- transfer -------------------------------------------------------------

    def _assign_relation(self, l: BitLayout, e: A.Expr, care: int, env) -> int:
        """Constraint tying the primed bits of ``l`` to the value of ``e``."""
        s = self.store
        if l.kind == BOOL1:
            return s.equiv(s.var(l.primed[0]), self.encode_bool(e, care, env))
        if l.kind == FULL32:
            target = BitVec(s, tuple(s.var(b) for b in l.primed))
            return bv_cmp("EQ", target, self.encode_num(e, care, env))
        codes = l.code_of

        def becomes(value: int) -> int:
            if value in codes:
                return s.and_(self._code_is(l.primed_code_bits, codes[value]), s.nvar(l.primed_extra_bit))
            return s.and_(self._code_is(l.primed_code_bits, 0), s.var(l.primed_extra_bit))

        const = self._as_const(e, env)
        if const is not None:
            return becomes(const)
        if isinstance(e, A.Var) and e.name in self.layouts:
            r = self.layouts[e.name]
            if r.kind == INTEQ_COMPACT and r.values == l.values:
                pairs = zip(l.primed, r.bits)
                return s.conjoin(s.equiv(s.var(a), s.var(b)) for a, b in pairs)
        if A.is_boolean_valued(e):
            p = self.encode_bool(e, care, env)
            return s.ite(p, becomes(1), becomes(0))
        vec = self.encode_num(e, care, env)
        rel = FALSE
        outside = TRUE
        for value in l.values:
            hit = bv_cmp("EQ", vec, self._const(value))
            rel = s.or_(rel, s.and_(hit, becomes(value)))
            outside = s.and_(outside, s.not_(hit))
        return s.or_(rel, s.and_(outside, becomes(_outside_marker(l))))

    def havoc(self, state: int, var: str) -> int:
        l = self.layouts[var]
        return self.store.and_(self.store.exists(state, l.bits), self.valid(var))

    def transfer(self, state: int, op: EdgeOp | CfaEdge, env: Optional[Mapping[str, int]] = None) -> int:
        """Successor predicate; ``env`` supplies known values of untracked variables."""
        if isinstance(op, CfaEdge):
            op = op.op
        if state == FALSE or isinstance(op, Skip):
            return state
        s = self.store
        self._pool_next = 0
        if isinstance(op, (Assign, Decl)):
            expr = op.expr if isinstance(op, Assign) else op.init
            l = self.layouts.get(op.var)
            if l is None:
                return state
            if expr is None or isinstance(expr, A.Nondet):
                return self.havoc(state, op.var)
            rel = self._assign_relation(l, expr, state, env)
            cube = list(l.bits) + self._temps_used()
            moved = s.and_exists(state, rel, cube)
            return s.rename(moved, dict(zip(l.primed, l.bits)))
        if isinstance(op, Assume):
            p = self.encode_bool(op.expr, state, env)
            if not op.polarity:
                p = s.not_(p)
            temps = self._temps_used()
            return s.and_exists(state, p, temps) if temps else s.and_(state, p)
        raise TypeError(f"unknown edge operation {op!r}")

    # -- inspection -------------------------------------------------------------

    def decode(self, assignment: Mapping[int, bool]) -> dict[str, Optional[int]]:
        """Concrete values of tracked variables in one total bit assignment.

        IntEq variables outside their value set decode to ``None``; Bool
        variables decode to their truth value.
        """
        out: dict[str, Optional[int]] = {}
        for v, l in self.layouts.items():
            bits = [assignment.get(b, False) for b in l.bits]
            if l.kind == BOOL1:
                out[v] = int(bits[0])
            elif l.kind == INTEQ_COMPACT:
                if bits[-1]:
                    out[v] = None
                else:
                    k = sum(1 << i for i, b in enumerate(bits[:-1]) if b)
                    out[v] = l.values[k] if k < len(l.values) else None
            else:
                u = sum(1 << i for i, b in enumerate(bits) if b)
                out[v] = semantics.wrap(u, self.width)
        return out

    def models(self, state: int) -> list[dict[str, Optional[int]]]:
        """Every valuation of the tracked variables allowed by ``state`` (small layouts only)."""
        bits = sorted(self._plain_bits)
        return [self.decode(a) for a in self.store.iter_sat(state, bits)]

    def stats(self) -> dict[str, object]:
        return {
            "bits_per_variable": {v: len(l.bits) for v, l in self.layouts.items()},
            "total_bits": total_bits(self.layouts),
            "node_count": self.store.node_count,
        }


def _outside_marker(l: BitLayout) -> int:
    """A value guaranteed not to be in the layout's value set."""
    v = max(l.values) + 1
    while v in l.values:
        v += 1
    return v


def _ult_const(s: BddStore, xs: list[int], n: int) -> int:
    """Unsigned ``x < n`` for a bit list ``xs`` (LSB first)."""
    if n >= (1 << len(xs)):
        return TRUE
    lt = FALSE
    for i, x in enumerate(xs):
        if (n >> i) & 1:
            lt = s.or_(s.not_(x), lt)
        else:
            lt = s.and_(s.not_(x), lt)
    return lt
