import csv

import pytest
from hypothesis import given, strategies as st

from domcheck.bench import (
    QUANTILE_HEADER,
    RESULTS_HEADER,
    BenchConfig,
    RunRecord,
    bench,
    quantile,
    write_results,
)
from domcheck.engine import Config

SAFE = "int main() { int x = 0; assert(x == 0); return 0; }\n"
UNSAFE = "int main() { int x = __VERIFIER_nondet_int(); assert(x != 3); return 0; }\n"
SLOW = "int main() { int x = 0; while (x < 100000000) { x = x + 1; } return 0; }\n"


def rec(t, cpu, outcome="TRUE", expected="TRUE", config="bdd-bool"):
    return RunRecord(t, config, outcome, expected, cpu)


def read(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


class TestRecords:
    def test_correctness(self):
        assert rec("a", 1.0).correct
        assert not rec("a", 1.0, outcome="FALSE").correct
        assert not rec("a", 1.0, expected=None).correct

    def test_validation(self):
        with pytest.raises(ValueError):
            rec("a", -1.0)
        with pytest.raises(ValueError):
            rec("a", 1.0, outcome="MAYBE")


class TestQuantile:
    def test_example(self):
        rs = [rec("a", 1.0), rec("b", 5.0), rec("c", 2.0)]
        assert quantile(rs, "bdd-bool") == [(1, 1.0), (2, 2.0), (3, 5.0)]

    def test_incorrect_excluded(self):
        rs = [rec("a", 1.0), rec("b", 0.5, outcome="FALSE"), rec("c", 0.1, outcome="UNKNOWN")]
        assert quantile(rs, "bdd-bool") == [(1, 1.0)]

    @given(st.lists(st.tuples(st.floats(0, 100), st.booleans()), max_size=30))
    def test_sorted_and_ranked(self, items):
        rs = [rec(f"t{i}", t, "TRUE" if ok else "FALSE") for i, (t, ok) in enumerate(items)]
        q = quantile(rs, "bdd-bool")
        assert [r for r, _ in q] == list(range(1, len(q) + 1))
        assert [t for _, t in q] == sorted(t for t, ok in items if ok)


class TestFiles:
    def test_write(self, tmp_path):
        rs = [rec("a", 1.0), rec("b", 2.0, config="explicit-int"), rec("c", 3.0, outcome="UNKNOWN")]
        write_results(rs, tmp_path, [Config.BDD_BOOL, Config.EXPLICIT_INT])
        rows = read(tmp_path / "results.csv")
        assert tuple(rows[0]) == RESULTS_HEADER and len(rows) == 4
        assert rows[3][4] == "false"
        q = read(tmp_path / "quantile_bdd-bool.csv")
        assert tuple(q[0]) == QUANTILE_HEADER and q[1:] == [["1", "1.000000"]]
        assert b"\r" not in (tmp_path / "results.csv").read_bytes()


@pytest.fixture
def suite(tmp_path):
    d = tmp_path / "suite"
    d.mkdir()
    for name, src, exp in [("safe", SAFE, "TRUE"), ("unsafe", UNSAFE, "FALSE"), ("slow", SLOW, "TRUE")]:
        (d / f"{name}.mc").write_text(src)
        (d / f"{name}.expect").write_text(exp + "\n")
    return d


class TestBench:
    @pytest.mark.parametrize("isolate,jobs", [(False, 1), (False, 2), (True, 2)])
    def test_suite(self, suite, tmp_path, isolate, jobs):
        cfg = BenchConfig(configs=(Config.EXPLICIT_INT, Config.BDD_BOOL), timeout=0.5, jobs=jobs, isolate=isolate)
        out = tmp_path / "out"
        records = bench(suite, out, cfg)
        assert len(records) == 6 and len(read(out / "results.csv")) == 7
        slow = [r for r in records if r.task == "slow.mc"]
        assert all(r.outcome == "UNKNOWN" and r.cpu_seconds <= 0.5 + 1.0 for r in slow)
        q = read(out / "quantile_explicit-int.csv")
        assert len(q) == 3  # header + safe + unsafe

    def test_broken_task_is_unknown(self, tmp_path):
        d = tmp_path / "s"
        d.mkdir()
        (d / "bad.mc").write_text("int main() {")
        (r,) = bench(d, tmp_path / "o", BenchConfig(configs=(Config.BDD_BOOL,)))
        assert r.outcome == "UNKNOWN" and r.error
