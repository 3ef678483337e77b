import dataclasses
import random

import pytest
from hypothesis import given, settings, strategies as st

from domcheck.domtype import DomainType, expression_constraints, histogram, infer, join
from domcheck.frontend import Assign, Assume, build_cfa
from domcheck.frontend import ast as A
from domcheck.frontend.cfa import CfaEdge, edge_expressions

from conftest import full_corpus

B, EQ, ADD, INT = DomainType.BOOL, DomainType.INTEQ, DomainType.INTEQADD, DomainType.INT


def types_of(src: str) -> dict[str, DomainType]:
    t = infer(build_cfa(src))
    return dict(t.type_of)


class TestLattice:
    def test_order(self):
        assert B < EQ < ADD < INT

    @given(st.sampled_from(list(DomainType)), st.sampled_from(list(DomainType)))
    def test_join_is_max(self, a, b):
        assert join(a, b) == max(a, b) == join(b, a)

    def test_labels_round_trip(self):
        for t in DomainType:
            assert DomainType.parse(t.label) is t


class TestEdgeConstraints:
    def test_or_with_relational(self):
        c = expression_constraints(Assume(A.Binary("||", A.Var("enabled"), A.Binary(">", A.Var("a"), A.Const(5)))))
        assert c.minimum == {"enabled": B, "a": ADD}

    def test_multiplication_taints_target(self):
        c = expression_constraints(Assign("y", A.Binary("*", A.Var("x"), A.Var("z"))))
        assert c.minimum == {"x": INT, "y": INT, "z": INT}

    def test_compare_with_zero_is_bool(self):
        c = expression_constraints(Assume(A.Binary("==", A.Var("a"), A.Const(0))))
        assert c.minimum == {"a": B}

    def test_compare_with_other_constant_is_inteq(self):
        c = expression_constraints(Assume(A.Binary("!=", A.Var("a"), A.Const(7))))
        assert c.minimum == {"a": EQ}
        assert c.constants["a"] == {7}

    def test_nondet_imposes_nothing(self):
        c = expression_constraints(Assign("x", A.Nondet()))
        assert c.minimum == {"x": B}
        assert c.havoced == {"x"}

    def test_bitwise_is_inteqadd(self):
        c = expression_constraints(Assign("x", A.Binary("&", A.Var("y"), A.Const(3))))
        assert c.minimum == {"x": ADD, "y": ADD}

    @pytest.mark.parametrize("op", ["/", "%", "<<", ">>"])
    def test_hard_ops(self, op):
        c = expression_constraints(Assign("x", A.Binary(op, A.Var("y"), A.Const(3))))
        assert c.minimum["y"] == INT


class TestWorkedExamples:
    def test_square_guard(self, square_guard_source):
        t = infer(build_cfa(square_guard_source))
        assert dict(t.type_of) == {"enabled": B, "a": ADD, "b": INT}
        assert t.histogram() == (1, 0, 1, 1)
        assert t.witness["a"].line == 7
        assert t.witness["b"].line == 11

    def test_shared_constants(self, shared_constants_source):
        t = infer(build_cfa(shared_constants_source))
        assert dict(t.type_of) == {"a": B, "b": EQ, "c": EQ}
        assert t.value_set["b"] == t.value_set["c"] == frozenset({989, 1042})
        assert histogram(t) == (1, 2, 0, 0)

    def test_unused_variable_is_bool(self):
        assert types_of("int main() { int x; return 0; }") == {"x": B}

    def test_empty_histogram(self):
        assert histogram(infer(build_cfa("int main() { return 0; }"))) == (0, 0, 0, 0)


class TestRules:
    def test_bool_partner_of_inteq_rises(self):
        t = types_of("int main() { int x; int y; x = 5; y = x; return 0; }")
        assert t == {"x": EQ, "y": EQ}

    def test_linked_inteq_share_values(self):
        t = infer(build_cfa("int main() { int x = 3; int y = 4; if (x == y) { x = 9; } return 0; }"))
        assert t.type_of["x"] == t.type_of["y"] == EQ
        assert t.value_set["x"] == t.value_set["y"] == frozenset({3, 4, 9})

    def test_relational_between_variables(self):
        t = types_of("int main() { int x = 3; int y = 4; if (x < y) { x = 1; } return 0; }")
        assert t == {"x": ADD, "y": ADD}

    def test_havoc_and_variable_comparison_is_at_least_inteq(self):
        # a nondet flag compared with another variable may hold values other than 0/1
        t = types_of("int main() { int x = __VERIFIER_nondet_int(); int y = 0; if (x == y) { y = 1; } return 0; }")
        assert t["x"] >= EQ and t["y"] >= EQ

    def test_flag_from_comparison_result(self):
        t = infer(build_cfa("int main() { int a = 3; int f; f = a == 3; if (f) { a = 4; } return 0; }"))
        assert t.type_of["f"] == B


# -- independent oracle: scan every expression for the operators around each variable --


def _scan(e: A.Expr, found: dict[str, DomainType], ctx: DomainType) -> None:
    if isinstance(e, A.Var):
        found[e.name] = max(found.get(e.name, B), ctx)
    elif isinstance(e, A.Binary):
        if e.op in ("*", "/", "%", "<<", ">>"):
            inner = INT
        elif e.op in ("+", "-", "&", "|", "^", "<", ">", "<=", ">="):
            inner = ADD
        else:
            inner = B
        # arithmetic taints the whole arithmetic subtree
        sub = max(ctx, inner) if inner > B else B
        _scan(e.lhs, found, sub)
        _scan(e.rhs, found, sub)
    elif isinstance(e, A.Unary):
        _scan(e.operand, found, ctx)


def naive_types(cfa) -> dict[str, DomainType]:
    found = {v: B for v in cfa.variables}
    for edge in cfa.edges:
        exprs = edge_expressions(edge.op)
        target = getattr(edge.op, "var", None)
        for e in exprs:
            local: dict[str, DomainType] = {}
            _scan(e, local, B)
            for v, t in local.items():
                found[v] = max(found[v], t)
            if target is not None and local:
                found[target] = max(found[target], max(local.values()))
    return found


def test_square_guard_matches_naive_scan(square_guard_source):
    cfa = build_cfa(square_guard_source)
    assert dict(infer(cfa).type_of) == naive_types(cfa)


# -- properties --------------------------------------------------------------------------

STMTS = [
    "x = 1;",
    "x = y;",
    "y = 7;",
    "if (x == 3) { z = 1; }",
    "if (y) { x = 0; }",
    "z = x + 1;",
    "if (z < y) { y = 0; }",
    "y = z * 2;",
    "x = __VERIFIER_nondet_int();",
    "if (x != z) { z = 2; }",
    "z = !y;",
    "x = y & 4;",
]


def program(stmts: list[str]) -> str:
    return "int main() {\n  int x = 0;\n  int y = 0;\n  int z = 0;\n  " + "\n  ".join(stmts) + "\n  return 0;\n}\n"


stmt_lists = st.lists(st.sampled_from(STMTS), max_size=8)


@settings(max_examples=300)
@given(stmt_lists, st.sampled_from(STMTS))
def test_monotone_under_added_statements(stmts, extra):
    before = types_of(program(stmts))
    after = types_of(program(stmts + [extra]))
    for v, t in before.items():
        assert after[v] >= t


@settings(max_examples=200)
@given(stmt_lists, st.randoms(use_true_random=False))
def test_edge_order_independent(stmts, rnd):
    cfa = build_cfa(program(stmts))
    edges = list(cfa.edges)
    rnd.shuffle(edges)
    shuffled = dataclasses.replace(cfa, edges=tuple(edges))
    a, b = infer(cfa), infer(shuffled)
    assert dict(a.type_of) == dict(b.type_of)
    assert dict(a.value_set) == dict(b.value_set)


@settings(max_examples=200)
@given(stmt_lists)
def test_histogram_partitions_and_witnesses(stmts):
    cfa = build_cfa(program(stmts))
    t = infer(cfa)
    assert sum(t.histogram()) == len(cfa.variables)
    for v in cfa.variables:
        if t.type_of[v] > B:
            assert t.witness[v] in cfa.edges
        if t.type_of[v] == EQ:
            assert t.value_set[v]
        else:
            assert v not in t.value_set or t.type_of[v] == EQ


@pytest.mark.parametrize("prog", full_corpus(), ids=lambda p: p.name)
def test_constants_of_inteq_variables_are_in_value_set(prog):
    cfa = build_cfa(prog.source)
    t = infer(cfa)
    for edge in cfa.edges:
        op = edge.op
        var = getattr(op, "var", None)
        rhs = getattr(op, "expr", None) if isinstance(op, Assign) else getattr(op, "init", None)
        if var is not None and t.type_of[var] == EQ and isinstance(rhs, A.Const):
            assert rhs.value in t.value_set[var]
        if isinstance(op, Assume):
            e = op.expr
            if isinstance(e, A.Binary) and e.op in ("==", "!=") and isinstance(e.lhs, A.Var) and isinstance(e.rhs, A.Const):
                if t.type_of[e.lhs.name] == EQ:
                    assert e.rhs.value in t.value_set[e.lhs.name]
