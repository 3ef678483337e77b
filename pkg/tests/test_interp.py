from domcheck.frontend import build_cfa
from domcheck.interp import (
    OracleVerdict,
    candidate_values,
    eval_concrete,
    find_concrete_error,
    oracle_interpret,
)
from domcheck.frontend import ast as A

NE3 = "int main() { int x = __VERIFIER_nondet_int(); assert(x != 3); return 0; }"


class TestOracle:
    def test_error_value_in_range(self):
        assert oracle_interpret(build_cfa(NE3), range(0, 6)).verdict is OracleVerdict.UNSAFE

    def test_error_value_outside_range(self):
        assert oracle_interpret(build_cfa(NE3), range(0, 3)).verdict is OracleVerdict.SAFE

    def test_growing_loop_is_inconclusive(self):
        cfa = build_cfa("int main() { int x = 0; while (1) { x = x + 1; } return 0; }")
        assert oracle_interpret(cfa, [0], step_limit=200).verdict is OracleVerdict.INCONCLUSIVE

    def test_repeating_loop_finishes(self):
        cfa = build_cfa("int main() { int x = 0; while (1) { x = 1 - x; } return 0; }")
        assert oracle_interpret(cfa, [0], step_limit=200).verdict is OracleVerdict.SAFE

    def test_state_limit(self):
        cfa = build_cfa("int main() { int x = 0; while (1) { x = x + 1; } return 0; }")
        assert oracle_interpret(cfa, [0], state_limit=50).verdict is OracleVerdict.INCONCLUSIVE

    def test_path_reaches_error(self):
        cfa = build_cfa(NE3)
        r = oracle_interpret(cfa, range(0, 6))
        assert r.path[-1].target in cfa.error_locations
        assert r.final_values == (3,)

    def test_division_by_zero_is_zero(self):
        e = A.Binary("/", A.Var("x"), A.Const(0))
        assert eval_concrete({"x": 7}, e) == 0


class TestCandidates:
    def test_constants_and_neighbours(self):
        vals = candidate_values(build_cfa(NE3))
        assert {0, 1, -1, 2, 3, 4} <= set(vals)

    def test_find_error(self):
        path = find_concrete_error(build_cfa(NE3))
        assert path is not None

    def test_no_error(self):
        cfa = build_cfa("int main() { int x = __VERIFIER_nondet_int(); if (x == 2) { x = 3; } assert(x != 2); return 0; }")
        assert find_concrete_error(cfa) is None
