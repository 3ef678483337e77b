"""Domain-type histogram over a directory of MiniC programs.

    python3 scripts/type_census.py tests/corpus --out census.csv
"""

import argparse
import csv
import sys
from pathlib import Path

from domcheck.domtype import DomainType, infer
from domcheck.errors import FrontendError
from domcheck.frontend import build_cfa

LABELS = [t.label for t in DomainType]


def census(paths):
    for path in paths:
        try:
            typing = infer(build_cfa(path.read_text(encoding="utf-8")))
        except FrontendError as exc:
            print(f"{path}: skipped ({exc})", file=sys.stderr)
            continue
        yield [path.name, *typing.histogram()]


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("directory")
    p.add_argument("--out", default="-")
    args = p.parse_args(argv)
    paths = sorted(Path(args.directory).rglob("*.mc"))
    fh = sys.stdout if args.out == "-" else open(args.out, "w", newline="", encoding="utf-8")
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["program", *LABELS])
    totals = [0] * len(LABELS)
    for row in census(paths):
        w.writerow(row)
        totals = [a + b for a, b in zip(totals, row[1:])]
    w.writerow(["TOTAL", *totals])
    if fh is not sys.stdout:
        fh.close()
    return 0


if __name__ == "__main__":
    sys.exit(main())
