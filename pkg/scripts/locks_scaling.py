"""Reached states and CPU time on the locks family for a range of N.

    python3 scripts/locks_scaling.py --configs explicit-int,bdd-bool --min 6 --max 12 --out locks.csv
"""

import argparse
import csv
import sys

from domcheck.engine import Config, Limits, verify_source
from domcheck.locks import STYLES, generate_locks

HEADER = ("n", "config", "outcome", "reached_states", "cpu_seconds", "bdd_peak_nodes", "limit_hit")


def measure(n: int, config: Config, style: str = "bool", limits: Limits | None = None) -> dict:
    v = verify_source(generate_locks(n, style), config, limits or Limits())
    return {
        "n": n,
        "config": config.value,
        "outcome": v.outcome.value,
        "reached_states": v.reached_states,
        "cpu_seconds": round(v.cpu_seconds, 3),
        "bdd_peak_nodes": v.bdd_peak_nodes,
        "limit_hit": v.limit_hit or "",
    }


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--configs", default="explicit-int,bdd-bool")
    p.add_argument("--min", type=int, default=6)
    p.add_argument("--max", type=int, default=12)
    p.add_argument("--style", choices=STYLES, default="bool")
    p.add_argument("--timeout", type=float, default=900.0)
    p.add_argument("--max-states", type=int, default=1_000_000)
    p.add_argument("--out", default="-")
    args = p.parse_args(argv)
    configs = [Config.parse(c) for c in args.configs.split(",")]
    limits = Limits(cpu_seconds=args.timeout, max_states=args.max_states)
    fh = sys.stdout if args.out == "-" else open(args.out, "w", newline="", encoding="utf-8")
    w = csv.DictWriter(fh, HEADER, lineterminator="\n")
    w.writeheader()
    for config in configs:
        for n in range(args.min, args.max + 1):
            w.writerow(measure(n, config, args.style, limits))
            fh.flush()
    if fh is not sys.stdout:
        fh.close()
    return 0


if __name__ == "__main__":
    sys.exit(main())
