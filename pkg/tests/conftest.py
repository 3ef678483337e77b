import re
from dataclasses import dataclass
from pathlib import Path

import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None)
settings.load_profile("default")

CORPUS = Path(__file__).parent / "corpus"


@dataclass(frozen=True)
class CorpusProgram:
    path: Path
    source: str
    expect: str
    oracle_range: range

    @property
    def name(self) -> str:
        return self.path.stem


def load_program(path: Path) -> CorpusProgram:
    src = path.read_text()
    expect = re.search(r"//\s*expect:\s*(TRUE|FALSE)", src).group(1)
    lo, hi = re.search(r"//\s*oracle-range:\s*(-?\d+)\.\.(-?\d+)", src).group(1, 2)
    return CorpusProgram(path, src, expect, range(int(lo), int(hi) + 1))


def precise_corpus() -> list[CorpusProgram]:
    """Programs on which every configuration is expected to match the oracle."""
    return [load_program(p) for p in sorted(CORPUS.glob("*.mc"))]


def full_corpus() -> list[CorpusProgram]:
    """Also includes programs where some configurations lose precision."""
    return precise_corpus() + [load_program(p) for p in sorted((CORPUS / "imprecise").glob("*.mc"))]


@pytest.fixture
def square_guard_source() -> str:
    return (CORPUS / "square_guard.mc").read_text()


@pytest.fixture
def shared_constants_source() -> str:
    return (CORPUS / "shared_constants.mc").read_text()


# -- acceptance report ------------------------------------------------------------

_criteria: dict[int, tuple[str, list[bool]]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion checked by this test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        n, title = marker.args
        _criteria.setdefault(n, (title, []))[1].append(report.outcome == "passed")


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_criteria):
        title, results = _criteria[n]
        status = "PASS" if all(results) else "FAIL"
        terminalreporter.write_line(f"criterion {n}: {status}  {title}  ({sum(results)}/{len(results)} checks)")
