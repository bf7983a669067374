"""Dependency satisfaction on instances and seeded generation of satisfying instances."""
from __future__ import annotations

import random
from typing import Iterator, Sequence

from .dependencies import ConsistencyConstraint, Dependency, DependencySet, FunctionalDependency
from .errors import GenerationFailed
from .chase import chase_instance
from .instance import DatabaseInstance, Null, assignments
from .terms import Schema


def violations(instance: DatabaseInstance, deps: DependencySet) -> Iterator[tuple[Dependency, dict]]:
    """Yield (dependency, premise assignment) for every violated dependency instance."""
    for d in deps:
        for g in assignments(d.lhs, instance):
            if isinstance(d, ConsistencyConstraint):
                yield d, g
            elif isinstance(d, FunctionalDependency):
                if g[d.left] != g[d.right]:
                    yield d, g
            else:
                frontier = {v: g[v] for v in d.frontier}
                if next(assignments([d.rhs], instance, frontier), None) is None:
                    yield d, g


def satisfies(instance: DatabaseInstance, deps: DependencySet) -> bool:
    return next(violations(instance, deps), None) is None


def _matched_tuples(d: Dependency, g: dict) -> list[tuple[str, tuple]]:
    return [(a.predicate, tuple(g[t] if t.is_var else t.name for t in a.args)) for a in d.lhs]


def _drop_violations(rels: dict[str, set[tuple]], arities: dict[str, int], deps: DependencySet, rng: random.Random) -> None:
    """Delete tuples until no fd or cc is violated (deletion never creates such violations)."""
    checks = DependencySet(deps.fds, (), deps.ccs)
    while (found := next(violations(DatabaseInstance(rels, arities), checks), None)) is not None:
        d, g = found
        rel, tup = rng.choice(_matched_tuples(d, g))
        rels[rel].discard(tup)


def _ground(instance: DatabaseInstance, taken: set[str]) -> DatabaseInstance:
    """Replace labeled nulls by fresh constants n1, n2, ... in label order."""
    nulls = sorted({v for _, ts in instance.items() for t in ts for v in t if isinstance(v, Null)}, key=lambda n: n.label)
    names, k = {}, 0
    for n in nulls:
        k += 1
        while f"n{k}" in taken:
            k += 1
        names[n] = f"n{k}"
    rels = {name: {tuple(names.get(v, v) for v in t) for t in ts} for name, ts in instance.items()}
    return DatabaseInstance(rels, instance.arities)


def generate_satisfying_instance(
    schema: Schema,
    deps: DependencySet,
    size_hint: int,
    seed: int,
    *,
    domain_size: int | None = None,
    constants: Sequence[str] = (),
    constant_rate: float = 0.2,
    max_repairs: int = 20_000,
) -> DatabaseInstance:
    """A random instance with about ``size_hint`` tuples per relation that satisfies ``deps``.

    Values are drawn from ``"0".."domain_size-1"``; with probability
    ``constant_rate`` a value is drawn from ``constants`` instead, so query
    constants actually occur in the data.  Tuples violating fds or ccs are
    deleted, then the tgds are chased in with fresh values; a chase that
    fails (constant clash, cc hit) costs one more random base tuple and is
    retried.  Cyclic tgds fall back to a local repair loop that mixes fresh
    values with existing column values.  Deterministic for a given seed.
    """
    rng = random.Random(seed)
    n_dom = domain_size if domain_size is not None else max(2, 2 * size_hint)
    domain = [str(i) for i in range(n_dom)]
    constants = list(constants)

    def pick() -> str:
        if constants and rng.random() < constant_rate:
            return rng.choice(constants)
        return rng.choice(domain)

    arities = {name: schema.arity(name) for name in schema.names()}
    rels: dict[str, set[tuple]] = {
        name: {tuple(pick() for _ in range(n)) for _ in range(size_hint)} for name, n in arities.items()
    }
    if deps.tgds and not deps.tgds_acyclic:
        return _repair_loop(rels, arities, deps, rng, seed, max_repairs)
    taken = set(domain) | set(constants)
    for _ in range(max_repairs):
        _drop_violations(rels, arities, deps, rng)
        base = DatabaseInstance(rels, arities)
        out = chase_instance(base, deps, step_limit=max_repairs * 10)
        if not out.unsatisfiable:
            grounded = _ground(out.instance, taken)
            if satisfies(grounded, deps):
                return grounded
        nonempty = sorted(name for name, ts in rels.items() if ts)
        if not nonempty:
            break
        victim = rng.choice(nonempty)
        rels[victim].discard(rng.choice(sorted(rels[victim])))
    raise GenerationFailed(f"no satisfying instance (seed {seed})")


def _repair_loop(rels, arities, deps, rng, seed, max_repairs) -> DatabaseInstance:
    """Local repairs for cyclic tgds, where chasing in fresh values need not stop."""
    fresh = 0
    for _ in range(max_repairs):
        current = DatabaseInstance(rels, arities)
        found = next(violations(current, deps), None)
        if found is None:
            return current
        d, g = found
        if isinstance(d, ConsistencyConstraint):
            rel, tup = rng.choice(_matched_tuples(d, g))
            rels[rel].discard(tup)
        elif isinstance(d, FunctionalDependency):
            target = g[d.left]
            holders = [(a, tup) for a, (rel, tup) in zip(d.lhs, _matched_tuples(d, g)) if d.right in a.args]
            a, tup = rng.choice(holders)
            rels[a.predicate].discard(tup)
            rels[a.predicate].add(tuple(target if t == d.right else v for t, v in zip(a.args, tup)))
        else:
            vals = {v: g[v] for v in d.frontier}
            column_pool = {i: [t[i] for t in rels[d.rhs.predicate]] for i in range(d.rhs.arity)}
            for y in d.existential_vars:
                pos = d.rhs.args.index(y)
                if column_pool[pos] and rng.random() < 0.5:
                    vals[y] = rng.choice(sorted(column_pool[pos]))
                else:
                    fresh += 1
                    vals[y] = f"n{fresh}"
            rels[d.rhs.predicate].add(tuple(vals[t] if t.is_var else t.name for t in d.rhs.args))
    raise GenerationFailed(f"no satisfying instance after {max_repairs} repairs (seed {seed})")
