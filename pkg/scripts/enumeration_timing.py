#!/usr/bin/env python3
"""cgalg search counts and wall time on chain queries, against 2^m - 1 and Bell(m)."""
from __future__ import annotations

import argparse
import csv
import sys
import time

from dbreform.costs import SizeOracle
from dbreform.instance import DatabaseInstance
from dbreform.reformulator import cgalg
from dbreform.workloads import chain_query


def bell(n: int) -> int:
    row = [1]
    for _ in range(n):
        nxt = [row[-1]]
        for v in row:
            nxt.append(nxt[-1] + v)
        row = nxt
    return row[0]


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--max-m", type=int, default=12)
    ap.add_argument("--storage-limit", type=int, default=None, help="bytes; unlimited by default")
    args = ap.parse_args()
    out = csv.writer(sys.stdout)
    out.writerow(["m", "candidate_views", "expected_views", "partitions", "bell", "seconds"])
    for m in range(1, args.max_m + 1):
        schema, q = chain_query(m)
        d = DatabaseInstance({r: {("1", "2"), ("2", "3")} for r in schema.names()}, {r: 2 for r in schema.names()})
        start = time.perf_counter()
        stats = cgalg(q, SizeOracle(d), args.storage_limit).stats
        elapsed = time.perf_counter() - start
        out.writerow([m, stats.candidate_views, 2**m - 1, stats.partitions_examined, bell(m), f"{elapsed:.3f}"])
        sys.stdout.flush()


if __name__ == "__main__":
    main()
