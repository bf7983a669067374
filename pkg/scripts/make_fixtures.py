#!/usr/bin/env python3
"""Write the Example-1 and cyclic-id fixtures (program text + CSV data)."""
from __future__ import annotations

import argparse
from pathlib import Path

from dbreform import evaluate, generate_satisfying_instance, parse_program, save_instance
from dbreform.costs import SizeOracle
from dbreform.reformulator import make_view

EXAMPLE1 = """\
# Two relations, one key on S, one query whose chase binds Y to a.
schema S(A,B), T(C,D).
query q(X,Y) :- s(X,Y), s(X,a), t(Y,a).
fd s(X,Y), s(X,Z) -> Y = Z.
"""

CYCLIC_ID = """\
# A cyclic inclusion dependency: the chase never terminates, unchase accepts it.
schema P(A,B).
query q(X) :- p(X,Y), p(Y,Z).
tgd p(X,Y) -> p(Y,Z).
"""


def example1_instance(seed: int, size: int = 130):
    program = parse_program(EXAMPLE1)
    return generate_satisfying_instance(
        program.schema, program.dependencies, size, seed, domain_size=4 * size, constants=["a"], constant_rate=0.15
    )


def whole_body_view_bytes(instance) -> int:
    """Bytes of the view over the whole fd-chased Example-1 body."""
    program = parse_program("schema S(A,B), T(C,D).\nquery q(X,a) :- s(X,a), t(a,a).\n")
    q = program.queries[0]
    return SizeOracle(instance).size(make_view(q, 0b11, "v").definition)


def write(root: Path, seed: int) -> None:
    ex1 = root / "example1"
    (ex1 / "data").mkdir(parents=True, exist_ok=True)
    (ex1 / "program.dl").write_text(EXAMPLE1, encoding="utf-8")
    inst = example1_instance(seed)
    save_instance(inst, ex1 / "data")
    (ex1 / "storage_limit.txt").write_text(f"{whole_body_view_bytes(inst)}\n", encoding="utf-8")

    cyc = root / "cyclic_id"
    (cyc / "data").mkdir(parents=True, exist_ok=True)
    (cyc / "program.dl").write_text(CYCLIC_ID, encoding="utf-8")
    (cyc / "data" / "p.csv").write_text("1,2\n2,3\n3,1\n4,1\n", encoding="utf-8")
    (cyc / "storage_limit.txt").write_text("1000\n", encoding="utf-8")
    print(f"example1: {sum(len(inst[n]) for n in inst.names())} tuples, "
          f"{len(evaluate(parse_program(EXAMPLE1).queries[0], inst))} answers")


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--out", type=Path, default=Path(__file__).resolve().parents[1] / "fixtures")
    p.add_argument("--seed", type=int, default=7)
    args = p.parse_args()
    write(args.out, args.seed)


if __name__ == "__main__":
    main()
