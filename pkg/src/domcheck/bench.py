"""Benchmark harness: run every task of a suite under every configuration.

A suite is a directory of ``.mc`` files.  A sidecar ``<task>.expect`` holding
``TRUE`` or ``FALSE`` gives the expected verdict.  Each (task, configuration)
pair becomes one :class:`RunRecord`; failures of any kind are recorded as
UNKNOWN rows instead of aborting the suite.

Runs execute in a thread pool (CPU time is measured per thread) or, with
``isolate=True``, each in its own Python subprocess.
"""

from __future__ import annotations

import csv
import json
import os
import subprocess
import sys
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

from domcheck.engine import Config, Limits, Options, Outcome, verify_source

RESULTS_HEADER = ("task", "config", "outcome", "expected", "correct", "cpu_seconds", "reached_states", "bdd_peak_nodes")
QUANTILE_HEADER = ("rank", "cpu_seconds")
# allowed overshoot of a run past its CPU budget
TIMEOUT_SLACK = 1.0


@dataclass
class RunRecord:
    task: str
    config: str
    outcome: str
    expected: Optional[str] = None
    cpu_seconds: float = 0.0
    reached_states: int = 0
    bdd_peak_nodes: int = 0
    limits_hit: Optional[str] = None
    error: str = ""

    def __post_init__(self):
        if self.outcome not in ("TRUE", "FALSE", "UNKNOWN"):
            raise ValueError(f"bad outcome {self.outcome!r}")
        if self.cpu_seconds < 0:
            raise ValueError("negative cpu time")

    @property
    def correct(self) -> bool:
        return self.expected is not None and self.outcome == self.expected

    def row(self) -> list[str]:
        return [
            self.task,
            self.config,
            self.outcome,
            self.expected or "",
            "true" if self.correct else "false",
            f"{self.cpu_seconds:.6f}",
            str(self.reached_states),
            str(self.bdd_peak_nodes),
        ]


@dataclass
class BenchConfig:
    configs: tuple[Config, ...] = tuple(Config)
    timeout: float = 900.0
    jobs: int = 1
    isolate: bool = False
    max_states: int = 1_000_000
    max_bdd_nodes: int = 50_000_000
    waitlist: str = "rpo"
    width: int = 32


def discover(suite: Path) -> list[Path]:
    tasks = sorted(p for p in Path(suite).iterdir() if p.suffix == ".mc" and p.is_file())
    return tasks


def expected_of(task: Path) -> Optional[str]:
    sidecar = task.with_suffix(".expect")
    if not sidecar.exists():
        return None
    text = sidecar.read_text(encoding="utf-8").strip().upper()
    return text if text in ("TRUE", "FALSE") else None


def _run_inprocess(task: Path, config: Config, cfg: BenchConfig) -> RunRecord:
    expected = expected_of(task)
    started = time.thread_time()
    try:
        source = task.read_text(encoding="utf-8")
        v = verify_source(
            source,
            config,
            Limits(cpu_seconds=cfg.timeout, max_states=cfg.max_states, max_bdd_nodes=cfg.max_bdd_nodes),
            Options(waitlist=cfg.waitlist, width=cfg.width),
        )
    except Exception as exc:  # a broken task must not take the suite down
        return RunRecord(
            task.name, config.value, "UNKNOWN", expected, time.thread_time() - started, error=f"{type(exc).__name__}: {exc}"
        )
    return RunRecord(
        task.name, config.value, v.outcome.value, expected, v.cpu_seconds, v.reached_states, v.bdd_peak_nodes, v.limit_hit
    )


def _run_isolated(task: Path, config: Config, cfg: BenchConfig) -> RunRecord:
    expected = expected_of(task)
    cmd = [
        sys.executable, "-m", "domcheck", "verify", str(task),
        "--config", config.value,
        "--timeout", str(cfg.timeout),
        "--max-states", str(cfg.max_states),
        "--waitlist", cfg.waitlist,
        "--bv-width", str(cfg.width),
        "--json", "-",
        "--quiet",
    ]  # fmt: skip
    try:
        proc = subprocess.run(cmd, capture_output=True, text=True, timeout=cfg.timeout + 30)
    except subprocess.TimeoutExpired:
        return RunRecord(task.name, config.value, "UNKNOWN", expected, cfg.timeout, limits_hit="cpu", error="killed")
    try:
        data = json.loads(proc.stdout)
    except json.JSONDecodeError:
        return RunRecord(task.name, config.value, "UNKNOWN", expected, error=proc.stderr.strip()[-500:])
    return RunRecord(
        task.name,
        config.value,
        data["outcome"],
        expected,
        data["cpu_seconds"],
        data["reached_states"],
        data["bdd_peak_nodes"],
        data.get("limit_hit"),
    )


def run_suite(tasks: Sequence[Path], cfg: BenchConfig) -> list[RunRecord]:
    """One record per (task, config), in task-major order."""
    work = [(t, c) for t in tasks for c in cfg.configs]
    runner = _run_isolated if cfg.isolate else _run_inprocess
    if cfg.jobs <= 1:
        return [runner(t, c, cfg) for t, c in work]
    with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
        return list(pool.map(lambda tc: runner(tc[0], tc[1], cfg), work))


def quantile(records: Iterable[RunRecord], config: str) -> list[tuple[int, float]]:
    """Row x holds the CPU time of the x-fastest correct run."""
    times = sorted(r.cpu_seconds for r in records if r.config == config and r.correct)
    return [(i + 1, t) for i, t in enumerate(times)]


_write_lock = threading.Lock()


def write_results(records: Sequence[RunRecord], out_dir: Path, configs: Iterable[Config]) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    with _write_lock:
        path = out_dir / "results.csv"
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(RESULTS_HEADER)
            for r in records:
                w.writerow(r.row())
        written.append(path)
        for c in configs:
            path = out_dir / f"quantile_{c.value}.csv"
            with open(path, "w", encoding="utf-8", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(QUANTILE_HEADER)
                for rank, t in quantile(records, c.value):
                    w.writerow([rank, f"{t:.6f}"])
            written.append(path)
    return written


def bench(suite: Path, out_dir: Path, cfg: BenchConfig) -> list[RunRecord]:
    tasks = discover(suite)
    records = run_suite(tasks, cfg)
    write_results(records, out_dir, cfg.configs)
    return records


def summarize(records: Sequence[RunRecord]) -> str:
    lines = []
    for config in dict.fromkeys(r.config for r in records):
        rs = [r for r in records if r.config == config]
        solved = sum(r.correct for r in rs)
        total_cpu = sum(r.cpu_seconds for r in rs)
        lines.append(f"{config:14s} correct {solved}/{len(rs)}  cpu {total_cpu:.2f}s")
    return "\n".join(lines)


def record_dict(r: RunRecord) -> dict:
    d = asdict(r)
    d["correct"] = r.correct
    return d


def default_jobs() -> int:
    return max(1, (os.cpu_count() or 1))
