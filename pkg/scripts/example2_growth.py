#!/usr/bin/env python3
"""Terminal chase size versus unchase size on the Example-2 family, as CSV on stdout."""
from __future__ import annotations

import argparse
import csv
import sys
import time

from dbreform import chase, unchase
from dbreform.workloads import example2


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--max-m", type=int, default=6)
    args = ap.parse_args()
    out = csv.writer(sys.stdout)
    out.writerow(["m", "tgds", "chase_atoms", "chase_seconds", "unchase_atoms", "unchase_seconds"])
    for m in range(2, args.max_m + 1):
        _, q, deps = example2(m)
        start = time.perf_counter()
        chased = chase(q, deps).query
        mid = time.perf_counter()
        u = unchase(chased, deps).query
        end = time.perf_counter()
        out.writerow([m, len(deps.tgds), len(chased.body), f"{mid - start:.4f}", len(u.body), f"{end - mid:.4f}"])


if __name__ == "__main__":
    main()
