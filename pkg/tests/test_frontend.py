import pytest
from hypothesis import given, strategies as st

from domcheck.errors import (
    MiniCSyntaxError,
    RecursiveCallError,
    UndeclaredVariable,
    UndefinedFunction,
    UnsupportedConstruct,
)
from domcheck.frontend import Assign, Assume, Decl, Skip, build_cfa, parse
from domcheck.frontend import ast as A

from conftest import precise_corpus


def wrap_main(body: str, globals_: str = "") -> str:
    return f"{globals_}\nint main() {{\n{body}\n  return 0;\n}}\n"


class TestParse:
    def test_minimal_program(self):
        prog = parse("int main() { int x; x = 3; return 0; }")
        body = prog.functions["main"].body.body
        assert isinstance(body[0], A.VarDecl) and body[0].init is None
        assert isinstance(body[1], A.Assign) and body[1].value == A.Const(3)

    def test_square_guard_condition_shape(self, square_guard_source):
        prog = parse(square_guard_source)
        cond = prog.functions["main"].body.body[1].cond
        assert cond == A.Binary("||", A.Var("enabled"), A.Binary(">", A.Var("a"), A.Const(5)))

    @pytest.mark.parametrize(
        "body",
        [
            "int *p; int x = *p;",
            "int a[3];",
            "float f;",
            "struct s x;",
        ],
    )
    def test_out_of_language(self, body):
        with pytest.raises(UnsupportedConstruct):
            parse(wrap_main(body))

    def test_syntax_error_has_position(self):
        with pytest.raises(MiniCSyntaxError) as info:
            parse("int main() {\n  x = ;\n}")
        assert info.value.line == 2

    def test_nondet_only_as_whole_rhs(self):
        with pytest.raises(UnsupportedConstruct):
            parse(wrap_main("int x = __VERIFIER_nondet_int() + 1;"))

    def test_unary_minus_becomes_subtraction(self):
        cfa = build_cfa(wrap_main("int x; int y = -x;"))
        decl = [e.op for e in cfa.edges if isinstance(e.op, Decl) and e.op.var == "y"][0]
        assert decl.init == A.Binary("-", A.Const(0), A.Var("x"))


class TestLower:
    def test_assert_lowers_to_error_branch(self, square_guard_source):
        cfa = build_cfa(square_guard_source)
        (err,) = cfa.error_locations
        into_error = [e for e in cfa.edges if e.target == err]
        assert len(into_error) == 1
        op = into_error[0].op
        assert isinstance(op, Assume) and not op.polarity
        assert op.expr == A.Binary(">", A.Binary("*", A.Var("b"), A.Var("b")), A.Const(200))

    def test_while_loop_shape(self):
        cfa = build_cfa(wrap_main("int x = 0;\nwhile (x < 3) x = x + 1;"))
        heads = [e.source for e in cfa.edges if isinstance(e.op, Assume) and e.op.polarity]
        (head,) = heads
        outs = cfa.out_edges(head)
        assert sorted(e.op.polarity for e in outs) == [False, True]
        body = [e for e in cfa.edges if isinstance(e.op, Assign)]
        assert str(body[0].op) == "x = x + 1"
        # the body flows back to the head
        back = {e.target for e in cfa.edges if e.source == body[0].target}
        assert back == {head}

    def test_self_recursion_rejected(self):
        with pytest.raises(RecursiveCallError):
            build_cfa("void f() { f(); }\nint main() { f(); return 0; }")

    def test_mutual_recursion_rejected(self):
        src = "void g();\nvoid f() { g(); }\nvoid g() { f(); }\nint main() { f(); return 0; }"
        with pytest.raises((RecursiveCallError, MiniCSyntaxError)):
            build_cfa(src)

    def test_undefined_function(self):
        with pytest.raises(UndefinedFunction):
            build_cfa(wrap_main("int x = nope(1);"))

    def test_undeclared_variable(self):
        with pytest.raises(UndeclaredVariable):
            build_cfa(wrap_main("y = 1;"))

    def test_inlined_locals_are_renamed_per_call(self):
        src = "int f(int v) { int t = v + 1; return t; }\n" + wrap_main("int a = f(1);\nint b = f(a);")
        cfa = build_cfa(src)
        assert len(cfa.variables) == len(set(cfa.variables))
        assert sum(1 for v in cfa.variables if v.startswith("t@f")) == 2

    def test_entry_has_no_incoming_edges(self, square_guard_source):
        cfa = build_cfa(square_guard_source)
        assert cfa.in_edges(cfa.entry) == []

    def test_verifier_error_is_error_location(self):
        cfa = build_cfa(wrap_main("int x = 1;\nif (x == 2) { __VERIFIER_error(); }"))
        assert len(cfa.error_locations) == 1


class TestCorpusStructure:
    @pytest.mark.parametrize("prog", precise_corpus(), ids=lambda p: p.name)
    def test_structural_invariants(self, prog):
        cfa = build_cfa(prog.source)
        # every location is reachable from the entry
        seen = {cfa.entry}
        stack = [cfa.entry]
        while stack:
            for e in cfa.out_edges(stack.pop()):
                if e.target not in seen:
                    seen.add(e.target)
                    stack.append(e.target)
        assert seen == set(cfa.locations)
        # conditionals give a true/false pair from one source; assume() gives a lone true edge
        for loc in cfa.locations:
            assumes = [e.op for e in cfa.out_edges(loc) if isinstance(e.op, Assume)]
            assert sorted(op.polarity for op in assumes) in ([], [True], [False, True])
        # determinism
        assert build_cfa(prog.source) == cfa


# -- generated straight-line programs --------------------------------------------

names = st.sampled_from(["x", "y", "z"])
leaf = st.one_of(st.integers(-50, 50).map(A.Const), names.map(A.Var))
exprs = st.recursive(
    leaf,
    lambda inner: st.tuples(st.sampled_from(["+", "-", "*", "&", "|", "^", "==", "<", "&&"]), inner, inner).map(
        lambda t: A.Binary(*t)
    ),
    max_leaves=6,
)


@given(st.lists(st.tuples(names, exprs), min_size=1, max_size=6), exprs)
def test_generated_programs_lower_consistently(assignments, cond):
    body = "  int x = 0;\n  int y = 1;\n  int z = 2;\n"
    body += "".join(f"  {v} = {e};\n" for v, e in assignments)
    body += f"  if ({cond}) {{ x = 1; }}\n  assert(x != 5);"
    src = wrap_main(body)
    cfa = build_cfa(src)
    assert cfa == build_cfa(src)
    n_assign = sum(isinstance(e.op, (Assign, Decl)) for e in cfa.edges)
    assert n_assign == 3 + len(assignments) + 1
    # one assume pair for the if, one for the assert
    assert cfa.assume_pairs() == 2
    assert all(isinstance(e.op, (Assign, Decl, Assume, Skip)) for e in cfa.edges)
