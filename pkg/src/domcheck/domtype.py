"""Domain-type pre-analysis.

Every variable gets the most restrictive of four usage classes:

* ``Bool``      used only in ``&&``, ``||``, ``!``, compared with zero, or
                compared/assigned with other ``Bool`` variables and 0/1
* ``IntEq``     additionally compared for equality with, or assigned, other constants
* ``IntEqAdd``  additionally ``+``, ``-``, bit operations and relational comparisons
* ``Int``       anything that touches ``*``, ``/``, ``%``, ``<<`` or ``>>``

Variables linked by an assignment ``x = y`` or an equality ``x == y`` always
share one type, and ``IntEq`` variables linked this way share one value set,
so that their compact codes agree.  A class of linked variables that is both
compared variable-to-variable and possibly holds an arbitrary value (a nondet
assignment or an uninitialized declaration) is raised to at least ``IntEq``: a
one-bit encoding would identify, e.g., the distinct true values 1 and 2.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Iterable, Mapping, Optional

from domcheck.frontend import ast as A
from domcheck.frontend.cfa import Assign, Assume, Cfa, CfaEdge, Decl, EdgeOp


class DomainType(IntEnum):
    BOOL = 0
    INTEQ = 1
    INTEQADD = 2
    INT = 3

    @property
    def label(self) -> str:
        return _LABELS[self]

    @classmethod
    def parse(cls, name: str) -> "DomainType":
        for t, label in _LABELS.items():
            if label.lower() == name.lower():
                return t
        raise ValueError(f"unknown domain type {name!r}")

    def __str__(self) -> str:
        return self.label


_LABELS = {
    DomainType.BOOL: "Bool",
    DomainType.INTEQ: "IntEq",
    DomainType.INTEQADD: "IntEqAdd",
    DomainType.INT: "Int",
}


def join(a: DomainType, b: DomainType) -> DomainType:
    return max(a, b)


def _op_level(op: str) -> DomainType:
    if op in A.HARD_OPS:
        return DomainType.INT
    return DomainType.INTEQADD


@dataclass
class EdgeConstraints:
    """What a single edge demands of the variables it mentions."""

    minimum: dict[str, DomainType] = field(default_factory=dict)
    links: list[tuple[str, str]] = field(default_factory=list)
    constants: dict[str, set[int]] = field(default_factory=lambda: defaultdict(set))
    havoced: set[str] = field(default_factory=set)
    var_compared: set[str] = field(default_factory=set)

    def need(self, var: str, t: DomainType) -> None:
        self.minimum[var] = max(self.minimum.get(var, DomainType.BOOL), t)

    def observe(self, var: str, value: int) -> None:
        self.constants[var].add(value)

    # -- expression walkers ---------------------------------------------------

    def condition(self, e: A.Expr) -> None:
        """``e`` is read for its truth value."""
        if isinstance(e, A.Var):
            self.need(e.name, DomainType.BOOL)
            self.observe(e.name, 0)
        elif isinstance(e, (A.Const, A.Nondet)):
            pass
        elif isinstance(e, A.Unary) and e.op == "!":
            self.condition(e.operand)
        elif isinstance(e, A.Binary) and e.op in A.BOOLEAN_OPS:
            self.condition(e.lhs)
            self.condition(e.rhs)
        elif isinstance(e, A.Binary) and e.op in A.EQUALITY_OPS:
            self.equality(e.lhs, e.rhs)
        elif isinstance(e, A.Binary) and e.op in A.RELATIONAL_OPS:
            self.atom([e.lhs, e.rhs], DomainType.INTEQADD)
        else:
            self.atom([e], DomainType.INTEQADD)

    def equality(self, lhs: A.Expr, rhs: A.Expr) -> None:
        if isinstance(rhs, A.Var) and not isinstance(lhs, A.Var):
            lhs, rhs = rhs, lhs
        if isinstance(lhs, A.Var) and isinstance(rhs, A.Var):
            self.need(lhs.name, DomainType.BOOL)
            self.need(rhs.name, DomainType.BOOL)
            self.links.append((lhs.name, rhs.name))
            self.var_compared.update((lhs.name, rhs.name))
        elif isinstance(lhs, A.Var) and isinstance(rhs, A.Const):
            self.need(lhs.name, DomainType.BOOL if rhs.value == 0 else DomainType.INTEQ)
            self.observe(lhs.name, rhs.value)
        elif isinstance(lhs, A.Const) and isinstance(rhs, A.Const):
            pass
        elif isinstance(lhs, A.Var) and A.is_boolean_valued(rhs):
            self.condition(rhs)
            self.need(lhs.name, DomainType.INTEQ)
            self.observe(lhs.name, 0)
            self.observe(lhs.name, 1)
        else:
            self.atom([lhs, rhs], DomainType.INTEQADD)

    def atom(self, terms: Iterable[A.Expr], floor: DomainType) -> None:
        """All variables of one arithmetic term share the term's hardest operator."""
        names: list[str] = []
        level = floor
        stack = list(terms)
        while stack:
            e = stack.pop()
            if isinstance(e, A.Var):
                names.append(e.name)
            elif A.is_boolean_valued(e):
                self.condition(e)  # opaque 0/1 operand
            elif isinstance(e, A.Unary):
                level = max(level, DomainType.INTEQADD)
                stack.append(e.operand)
            elif isinstance(e, A.Binary):
                level = max(level, _op_level(e.op))
                stack.extend((e.lhs, e.rhs))
        for n in names:
            self.need(n, level)

    def assignment(self, var: str, e: Optional[A.Expr]) -> None:
        self.need(var, DomainType.BOOL)
        if e is None or isinstance(e, A.Nondet):
            self.havoced.add(var)
        elif isinstance(e, A.Const):
            self.need(var, DomainType.BOOL if e.value in (0, 1) else DomainType.INTEQ)
            self.observe(var, e.value)
        elif isinstance(e, A.Var):
            self.need(e.name, DomainType.BOOL)
            self.links.append((var, e.name))
        elif A.is_boolean_valued(e):
            self.condition(e)
            self.observe(var, 0)
            self.observe(var, 1)
        else:
            self.atom([A.Var(var), e], DomainType.INTEQADD)


def expression_constraints(op: EdgeOp | CfaEdge) -> EdgeConstraints:
    """Per-edge usage constraints (minimum types, links, constants)."""
    if isinstance(op, CfaEdge):
        op = op.op
    c = EdgeConstraints()
    if isinstance(op, Decl):
        c.assignment(op.var, op.init)
    elif isinstance(op, Assign):
        c.assignment(op.var, op.expr)
    elif isinstance(op, Assume):
        c.condition(op.expr)
    return c


@dataclass(frozen=True)
class DomainTyping:
    variables: tuple[str, ...]
    type_of: Mapping[str, DomainType]
    value_set: Mapping[str, frozenset[int]]
    partners: Mapping[str, frozenset[str]]
    witness: Mapping[str, Optional[CfaEdge]]

    def of(self, var: str) -> DomainType:
        return self.type_of[var]

    def histogram(self) -> tuple[int, int, int, int]:
        return histogram(self)


class _UnionFind:
    def __init__(self, items: Iterable[str]):
        self.parent = {x: x for x in items}

    def find(self, x: str) -> str:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: str, b: str) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            # smaller name wins so the representative is order independent
            if rb < ra:
                ra, rb = rb, ra
            self.parent[rb] = ra


def infer(cfa: Cfa) -> DomainTyping:
    """Infer the least domain typing of all CFA variables.

    The result does not depend on the order in which edges are visited: types
    only grow by ``max`` and links only merge classes.
    """
    variables = tuple(cfa.variables)
    uf = _UnionFind(variables)
    own: dict[str, DomainType] = {v: DomainType.BOOL for v in variables}
    raised_by: dict[tuple[str, DomainType], CfaEdge] = {}
    constants: dict[str, set[int]] = defaultdict(set)
    havoced: set[str] = set()
    compared: dict[str, CfaEdge] = {}
    for edge in cfa.edges:
        c = expression_constraints(edge.op)
        for v, t in c.minimum.items():
            own[v] = max(own[v], t)
            for level in DomainType:
                if level <= t:
                    raised_by.setdefault((v, level), edge)
        for a, b in c.links:
            uf.union(a, b)
        for v, vals in c.constants.items():
            constants[v] |= vals
        havoced |= c.havoced
        for v in c.var_compared:
            compared.setdefault(v, edge)

    classes: dict[str, list[str]] = defaultdict(list)
    for v in variables:
        classes[uf.find(v)].append(v)

    type_of: dict[str, DomainType] = {}
    value_set: dict[str, frozenset[int]] = {}
    partners: dict[str, frozenset[str]] = {}
    witness: dict[str, Optional[CfaEdge]] = {}
    edge_index = {id(e): i for i, e in enumerate(cfa.edges)}
    for members in classes.values():
        t = max(own[m] for m in members)
        guard_edge = None
        if any(m in havoced for m in members) and any(m in compared for m in members):
            guard_edge = min((compared[m] for m in members if m in compared), key=lambda e: edge_index[id(e)])
            if t < DomainType.INTEQ:
                t = DomainType.INTEQ
        forcing = [raised_by[(m, t)] for m in members if (m, t) in raised_by]
        if forcing:
            w = min(forcing, key=lambda e: edge_index[id(e)])
        else:
            w = guard_edge
        values = frozenset().union(*(constants[m] for m in members)) or frozenset({0})
        group = frozenset(members)
        for m in members:
            type_of[m] = t
            witness[m] = w if t > DomainType.BOOL else None
            partners[m] = group - {m}
            if t == DomainType.INTEQ:
                value_set[m] = values
    return DomainTyping(variables, type_of, value_set, partners, witness)


def histogram(typing: DomainTyping) -> tuple[int, int, int, int]:
    """Counts of the exclusive classes Bool, IntEq\\Bool, IntEqAdd\\IntEq, Int\\IntEqAdd."""
    counts = [0, 0, 0, 0]
    for v in typing.variables:
        counts[typing.type_of[v]] += 1
    return tuple(counts)  # type: ignore[return-value]
