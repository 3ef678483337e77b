import math

import pytest
from hypothesis import given, settings, strategies as st

from domcheck.bdd.store import FALSE, TRUE, BddStore
from domcheck.bdddomain import BOOL1, FULL32, INTEQ_COMPACT, BddDomain, code_bits_for, make_layouts, total_bits
from domcheck.domtype import DomainType, DomainTyping, infer
from domcheck.engine import CompositeAnalysis, CompositeState, Options, build_assignment, verify
from domcheck.explicit import EMPTY
from domcheck.frontend import Assign, Assume, build_cfa
from domcheck.frontend import ast as A
from domcheck.interp import _successors

V, C = A.Var, A.Const


def typing_of(types: dict, values: dict | None = None) -> DomainTyping:
    values = values or {}
    return DomainTyping(
        tuple(types),
        dict(types),
        {v: frozenset(s) for v, s in values.items()},
        {v: frozenset() for v in types},
        {v: None for v in types},
    )


def domain(types: dict, values: dict | None = None, width: int = 32) -> BddDomain:
    t = typing_of(types, values)
    return BddDomain(make_layouts(t, t.variables, width=width), width=width, store=BddStore())


class TestLayouts:
    def test_bool_one_bit(self):
        l = make_layouts(typing_of({"f": DomainType.BOOL}), ["f"])
        assert l["f"].kind == BOOL1 and len(l["f"].bits) == 1

    @pytest.mark.parametrize("n", range(1, 20))
    def test_inteq_bits(self, n):
        values = set(range(100, 100 + n))
        l = make_layouts(typing_of({"v": DomainType.INTEQ}, {"v": values}), ["v"])["v"]
        assert len(l.bits) == math.ceil(math.log2(max(n, 2))) + 1
        assert code_bits_for(n) + 1 == len(l.bits)
        assert l.values == tuple(sorted(values))

    def test_two_constants_two_bits(self):
        l = make_layouts(typing_of({"b": DomainType.INTEQ}, {"b": {989, 1042}}), ["b"])["b"]
        assert l.kind == INTEQ_COMPACT and len(l.bits) == 2
        assert l.code_of == {989: 0, 1042: 1}

    def test_three_ints_96_bits(self):
        t = typing_of({"x": DomainType.INT, "y": DomainType.INT, "z": DomainType.INTEQADD})
        layouts = make_layouts(t, t.variables)
        assert all(l.kind == FULL32 for l in layouts.values())
        assert total_bits(layouts) == 96

    def test_disjoint_blocks_and_primes(self):
        t = typing_of({"f": DomainType.BOOL, "b": DomainType.INTEQ, "x": DomainType.INT}, {"b": {1, 2, 3}})
        for order in ("declared", "interleaved"):
            layouts = make_layouts(t, t.variables, order=order)
            plain = [b for l in layouts.values() for b in l.bits]
            primed = [b for l in layouts.values() for b in l.primed]
            assert len(set(plain + primed)) == len(plain) + len(primed)
            assert all(p == b + 1 for l in layouts.values() for b, p in zip(l.bits, l.primed))

    def test_custom_order(self, tmp_path):
        order = tmp_path / "order.txt"
        order.write_text("z\nx\n")
        t = typing_of({"x": DomainType.INT, "y": DomainType.INT, "z": DomainType.INT})
        layouts = make_layouts(t, t.variables, order=f"custom:{order}")
        assert layouts["z"].bits[0] < layouts["x"].bits[0] < layouts["y"].bits[0]

    def test_fig_layout_totals(self, square_guard_source, shared_constants_source):
        t1 = infer(build_cfa(square_guard_source))
        assert total_bits(make_layouts(t1, t1.variables)) == 1 + 32 + 32
        t5 = infer(build_cfa(shared_constants_source))
        assert total_bits(make_layouts(t5, t5.variables)) == 1 + 2 + 2


class TestEncoding:
    def test_bool_condition_is_its_bit(self):
        d = domain({"enabled": DomainType.BOOL})
        bit = d.layouts["enabled"].bits[0]
        assert d.encode_bool(V("enabled")) == d.store.var(bit)

    def test_inteq_equality(self):
        d = domain({"b": DomainType.INTEQ}, {"b": {989, 1042}})
        l = d.layouts["b"]
        p = d.encode_bool(A.Binary("==", V("b"), C(1042)))
        s = d.store
        assert p == s.and_(s.var(l.code_bits[0]), s.nvar(l.extra_bit))
        # both codes and the extra case against concrete semantics
        assert sorted(m["b"] or 0 for m in d.models(d.top())) == [0, 989, 1042]
        inside = [m["b"] for m in d.models(s.and_(d.top(), p))]
        assert inside == [1042]

    def test_constant_outside_value_set(self):
        d = domain({"b": DomainType.INTEQ}, {"b": {989, 1042}})
        p = d.transfer(d.top(), Assume(A.Binary("==", V("b"), C(7)), True))
        # only the "other value" code survives
        assert [m["b"] for m in d.models(p)] == [None]

    @pytest.mark.parametrize("n", [1, 2, 3, 5, 8])
    def test_compact_matches_full(self, n):
        values = sorted({(k * 37) % 101 - 50 for k in range(n)})
        compact = domain({"v": DomainType.INTEQ}, {"v": set(values)})
        full = domain({"v": DomainType.INT}, width=8)
        for c in values:
            pc = compact.store.and_(compact.top(), compact.eq_const("v", c))
            pf = full.eq_const("v", c)
            assert [m["v"] for m in compact.models(pc)] == [c]
            assert [m["v"] for m in full.models(pf)] == [c]

    def test_increment(self):
        d = domain({"x": DomainType.INT})
        s5 = d.eq_const("x", 5)
        s6 = d.transfer(s5, Assign("x", A.Binary("+", V("x"), C(1))))
        assert s6 == d.eq_const("x", 6)

    def test_contradicting_assumes(self):
        d = domain({"x": DomainType.INT}, width=8)
        e = A.Binary("<", V("x"), C(3))
        s = d.transfer(d.transfer(d.top(), Assume(e, True)), Assume(e, False))
        assert s == FALSE

    def test_join_and_entails(self):
        d = domain({"x": DomainType.BOOL})
        x = d.store.var(d.layouts["x"].bits[0])
        assert d.join(x, d.store.not_(x)) == TRUE
        assert d.entails(FALSE, x)
        one, two = (domain({"x": DomainType.INT}, width=8) for _ in range(2))
        a, b = one.eq_const("x", 1), one.eq_const("x", 2)
        j = one.join(a, b)
        assert one.entails(a, j) and one.entails(b, j)

    def test_untracked_read_havocs_or_uses_env(self):
        d = domain({"x": DomainType.INT}, width=8)
        op = Assign("x", A.Binary("+", V("y"), C(1)))
        assert d.transfer(d.top(), op, env={"y": 4}) == d.eq_const("x", 5)
        assert d.transfer(d.eq_const("x", 0), op) == d.top()


# -- exactness against the concrete interpreter at reduced width ----------------------------

WIDTH = 6


def concrete_reach(cfa, width):
    index = {v: i for i, v in enumerate(cfa.variables)}
    start = (cfa.entry, (None,) * len(cfa.variables))
    seen = {start}
    stack = [start]
    while stack:
        loc, vals = stack.pop()
        for edge, nvals in _successors(cfa, index, loc, vals, [], width, None):
            nxt = (edge.target, nvals)
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    by_loc = {}
    for loc, vals in seen:
        by_loc.setdefault(loc, set()).add(vals)
    return by_loc


def check_exact(src: str) -> int:
    """Reached predicates equal the concrete reachable valuations; returns locations compared."""
    cfa = build_cfa(src)
    typing = infer(cfa)
    assignment = build_assignment(typing, "bdd-int", width=WIDTH)
    analysis = CompositeAnalysis(cfa, assignment, width=WIDTH)
    reached = {s.location: s.bdd for s in _fixpoint(cfa, analysis)}
    concrete = concrete_reach(cfa, WIDTH)
    assert set(reached) == set(concrete)
    compared = 0
    for loc, vals in concrete.items():
        if any(None in v for v in vals):
            continue  # before a declaration the BDD side allows every value
        got = {tuple(m[x] for x in cfa.variables) for m in analysis.domain.models(reached[loc])}
        assert got == vals, f"location {loc}"
        compared += 1
    return compared


def _fixpoint(cfa, analysis):
    """Plain worklist fixpoint with one BDD per location."""
    reached = {cfa.entry: analysis.domain.top()}
    work = [cfa.entry]
    while work:
        loc = work.pop()
        for edge in cfa.out_edges(loc):
            out = analysis.successor(EMPTY, reached[loc], edge)
            if out is None:
                continue
            old = reached.get(edge.target, FALSE)
            new = analysis.domain.join(old, out[1])
            if new != old:
                reached[edge.target] = new
                work.append(edge.target)
    return [CompositeState(loc, EMPTY, b) for loc, b in reached.items()]


PROGRAMS = [
    "int main() { int x = 0; int y = 1; while (x < 20) { x = x + 3; y = y * 3; } return 0; }",
    "int main() { int x = 5; int y = 0; if (x > 3) { y = x << 2; } else { y = x >> 1; } x = y & 12; return 0; }",
    "int main() { int i = 0; int s = 0; while (i != 7) { s = s ^ i; i = i + 1; } s = -s; return 0; }",
    "int main() { int a = 9; int b = a / 2; int c = a % 4; int d = 0 - a; return 0; }",
    "int main() { int f = 0; int k = 0; while (k < 4) { if (f == 0) { f = 1; } else { f = 0; } k = k + 1; } return 0; }",
]


@pytest.mark.parametrize("src", PROGRAMS)
def test_reached_sets_equal_concrete(src):
    assert check_exact(src) >= 1


ops = st.sampled_from(["+", "-", "*", "&", "|", "^"])
stmt = st.one_of(
    st.tuples(st.sampled_from("xyz"), ops, st.sampled_from("xyz"), st.integers(-5, 9)).map(
        lambda t: f"{t[0]} = {t[2]} {t[1]} {t[3]};"
    ),
    st.tuples(st.sampled_from("xyz"), st.sampled_from(["<", "==", "!="]), st.integers(-5, 9), st.sampled_from("xyz")).map(
        lambda t: f"if ({t[0]} {t[1]} {t[2]}) {{ {t[3]} = {t[3]} + 1; }}"
    ),
)


@settings(max_examples=40)
@given(st.lists(stmt, min_size=1, max_size=5), st.integers(1, 4))
def test_generated_programs_exact(stmts, bound):
    body = " ".join(stmts)
    src = f"int main() {{ int x = 1; int y = 2; int z = 3; int i = 0; while (i < {bound}) {{ {body} i = i + 1; }} return 0; }}"
    assert check_exact(src) >= 4


def test_engine_keeps_one_state_per_location():
    cfa = build_cfa(PROGRAMS[0])
    v = verify(cfa, infer(cfa), "bdd-int", options=Options(width=WIDTH, keep_reached=True, confirm=False))
    assert v.outcome.value == "TRUE"
    assert all(len(s.explicit) == 0 for s in v.reached)
    assert len({s.location for s in v.reached}) == len(v.reached)


def test_no_primed_bits_after_transfer():
    cfa = build_cfa(PROGRAMS[0])
    t = infer(cfa)
    assignment = build_assignment(t, "bdd-int", width=WIDTH)
    analysis = CompositeAnalysis(cfa, assignment, width=WIDTH)
    plain = {b for l in assignment.layouts.values() for b in l.bits}
    for s in _fixpoint(cfa, analysis):
        assert analysis.store.support(s.bdd) <= plain
