"""Named workload families and seeded random generators for experiments and tests."""
from __future__ import annotations

import random
from dataclasses import dataclass

from .dependencies import DependencySet, FunctionalDependency, TupleGeneratingDependency
from .errors import UnsupportedDependencySet
from .terms import Atom, ConjunctiveQuery, Schema, Term, const, var
from .unchase import check_supported

VARIABLES = ("X", "Y", "Z", "W", "U", "V")
CONSTANTS = ("a", "b")


def example1() -> tuple[Schema, ConjunctiveQuery, DependencySet]:
    X, Y, Z = var("X"), var("Y"), var("Z")
    a = const("a")
    schema = Schema({"s": ("A", "B"), "t": ("C", "D")})
    q = ConjunctiveQuery(Atom("q", (X, Y)), (Atom("s", (X, Y)), Atom("s", (X, a)), Atom("t", (Y, a))))
    fd = FunctionalDependency((Atom("s", (X, Y)), Atom("s", (X, Z))), Y, Z, "sigma")
    return schema, q, DependencySet((fd,))


def example2(m: int) -> tuple[Schema, ConjunctiveQuery, DependencySet]:
    """q(X,Y) :- p1(X,Y) under p_i(X,Y) -> p_j(Z,X) and p_i(X,Y) -> p_j(Y,Z) for all i < j <= m."""
    X, Y, Z = var("X"), var("Y"), var("Z")
    schema = Schema({f"p{i}": ("A", "B") for i in range(1, m + 1)})
    tgds = []
    for i in range(1, m + 1):
        for j in range(i + 1, m + 1):
            lhs = (Atom(f"p{i}", (X, Y)),)
            tgds.append(TupleGeneratingDependency(lhs, Atom(f"p{j}", (Z, X)), f"s1_{i}_{j}"))
            tgds.append(TupleGeneratingDependency(lhs, Atom(f"p{j}", (Y, Z)), f"s2_{i}_{j}"))
    q = ConjunctiveQuery(Atom("q", (X, Y)), (Atom("p1", (X, Y)),))
    return schema, q, DependencySet((), tuple(tgds))


def chain_query(m: int) -> tuple[Schema, ConjunctiveQuery]:
    """q(X0,Xm) :- r1(X0,X1), ..., rm(X(m-1),Xm): self-join-free with m atoms."""
    xs = [var(f"X{i}") for i in range(m + 1)]
    body = tuple(Atom(f"r{i + 1}", (xs[i], xs[i + 1])) for i in range(m))
    schema = Schema({f"r{i + 1}": ("A", "B") for i in range(m)})
    return schema, ConjunctiveQuery(Atom("q", (xs[0], xs[m])), body)


@dataclass(frozen=True)
class RandomShape:
    max_atoms: int = 4
    predicates: int = 3
    max_arity: int = 3
    max_vars: int = 4
    max_consts: int = 2
    const_rate: float = 0.15


def random_schema(rng: random.Random, shape: RandomShape) -> Schema:
    return Schema({f"r{i}": tuple(f"A{k}" for k in range(rng.randint(1, shape.max_arity)))
                   for i in range(shape.predicates)})


def _random_term(rng: random.Random, vars_: list[Term], consts: list[Term], rate: float) -> Term:
    if consts and rng.random() < rate:
        return rng.choice(consts)
    return rng.choice(vars_)


def random_query(rng: random.Random, schema: Schema, shape: RandomShape = RandomShape()) -> ConjunctiveQuery:
    """A safe random query over ``schema`` within the bounds of ``shape``."""
    vars_ = [var(v) for v in VARIABLES[: rng.randint(1, shape.max_vars)]]
    consts = [const(c) for c in CONSTANTS[: rng.randint(0, shape.max_consts)]]
    names = schema.names()
    body = []
    for _ in range(rng.randint(1, shape.max_atoms)):
        rel = rng.choice(names)
        body.append(Atom(rel, tuple(_random_term(rng, vars_, consts, shape.const_rate) for _ in range(schema.arity(rel)))))
    body_vars = list(dict.fromkeys(t for a in body for t in a.variables()))
    k = rng.randint(0, min(2, len(body_vars)))
    head = tuple(rng.sample(body_vars, k))
    return ConjunctiveQuery(Atom("q", head), tuple(body))


def random_key_fd(rng: random.Random, schema: Schema, candidates: list[str] | None = None) -> FunctionalDependency | None:
    """A key dependency on a relation of arity >= 2: some positions determine one other."""
    names = [n for n in (candidates or schema.names()) if schema.arity(n) >= 2]
    if not names:
        return None
    rel = rng.choice(names)
    n = schema.arity(rel)
    dep = rng.randrange(n)
    others = [i for i in range(n) if i != dep]
    key = set(rng.sample(others, rng.randint(1, len(others))))
    a_args, b_args = [], []
    for i in range(n):
        if i in key:
            a_args.append(var(f"K{i}"))
            b_args.append(var(f"K{i}"))
        else:
            a_args.append(var(f"A{i}"))
            b_args.append(var(f"B{i}"))
    return FunctionalDependency((Atom(rel, tuple(a_args)), Atom(rel, tuple(b_args))), var(f"A{dep}"), var(f"B{dep}"))


def random_acyclic_id(rng: random.Random, schema: Schema) -> TupleGeneratingDependency | None:
    """An id from a lower-numbered relation to a strictly higher-numbered one."""
    names = sorted(schema.names())
    if len(names) < 2:
        return None
    i = rng.randrange(len(names) - 1)
    j = rng.randrange(i + 1, len(names))
    src, dst = names[i], names[j]
    lhs = tuple(var(f"X{k}") for k in range(schema.arity(src)))
    rhs, fresh = [], 0
    for _ in range(schema.arity(dst)):
        if rng.random() < 0.6:
            rhs.append(rng.choice(lhs))
        else:
            fresh += 1
            rhs.append(var(f"E{fresh}"))
    return TupleGeneratingDependency((Atom(src, lhs),), Atom(dst, tuple(rhs)))


def random_dependencies(rng: random.Random, schema: Schema, max_fds: int = 2, max_ids: int = 3) -> DependencySet:
    """Up to ``max_fds`` key dependencies and up to ``max_ids`` acyclic ids."""
    fds = [d for d in (random_key_fd(rng, schema) for _ in range(rng.randint(0, max_fds))) if d is not None]
    ids = [d for d in (random_acyclic_id(rng, schema) for _ in range(rng.randint(0, max_ids))) if d is not None]
    return DependencySet.of(list(dict.fromkeys(fds)) + list(dict.fromkeys(ids)))


def random_supported_dependencies(rng: random.Random, schema: Schema, attempts: int = 50) -> DependencySet:
    """A random fd + acyclic-id set accepted by the unchase engine."""
    for _ in range(attempts):
        deps = random_dependencies(rng, schema)
        try:
            check_supported(deps)
        except UnsupportedDependencySet:
            continue
        return deps
    return DependencySet()
