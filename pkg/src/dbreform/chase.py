"""Chase of conjunctive queries (and, as a test oracle, of instances)."""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Iterator, Sequence

from .containment import find_homomorphism, homomorphisms
from .dependencies import (
    ConsistencyConstraint,
    Dependency,
    DependencySet,
    FunctionalDependency,
    TupleGeneratingDependency,
)
from .errors import StepLimitExceeded
from .instance import DatabaseInstance, Null, assignments
from .terms import Atom, ConjunctiveQuery, Term, fresh_variable

DEFAULT_STEP_CEILING = 100_000


class _Unsatisfiable:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "UNSATISFIABLE"

    def __bool__(self) -> bool:
        return False


UNSATISFIABLE = _Unsatisfiable()


@dataclass(frozen=True)
class ChaseStep:
    dependency: str
    assignment: tuple[tuple[str, str], ...]
    effect: str  # "add" | "rename" | "remove" | "unsatisfiable"
    atom: Atom | None = None
    renamed: tuple[Term, Term] | None = None

    def to_record(self) -> dict:
        rec: dict = {"dependency": self.dependency, "effect": self.effect, "assignment": dict(self.assignment)}
        if self.atom is not None:
            rec["atom"] = str(self.atom)
        if self.renamed is not None:
            rec["renamed"] = {"from": str(self.renamed[0]), "to": str(self.renamed[1])}
        return rec


@dataclass(frozen=True)
class ChaseResult:
    query: ConjunctiveQuery | None
    steps: tuple[ChaseStep, ...] = ()
    terminated: bool = True
    separation_held: bool = True

    @property
    def unsatisfiable(self) -> bool:
        return self.query is None

    def trace(self) -> list[dict]:
        return [s.to_record() for s in self.steps]


def default_step_limit(deps: DependencySet, ceiling: int = DEFAULT_STEP_CEILING) -> int:
    exponent = deps.atom_count()
    if exponent >= ceiling.bit_length():
        return ceiling
    return min(10 * 2**exponent, ceiling)


def _binding_record(h, keys) -> tuple[tuple[str, str], ...]:
    return tuple((str(k), str(h[k])) for k in sorted(keys))


class _Chaser:
    """One chase run: holds the fresh-variable counter and the step trace."""

    def __init__(self, query: ConjunctiveQuery):
        self.query = query
        self.steps: list[ChaseStep] = []
        self.counter = 1
        self.taken = {v.name for v in query.variables()}

    def fresh(self) -> Term:
        v, self.counter = fresh_variable("Z", self.taken, self.counter)
        self.taken.add(v.name)
        return v

    def fd_step(self, fd: FunctionalDependency) -> ConjunctiveQuery | _Unsatisfiable | None:
        for h in homomorphisms(fd.lhs, self.query.body):
            a, b = h[fd.left], h[fd.right]
            if a == b:
                continue
            record = _binding_record(h, {t for x in fd.lhs for t in x.variables()})
            if not a.is_var and not b.is_var:
                self.steps.append(ChaseStep(fd.name, record, "unsatisfiable"))
                return UNSATISFIABLE
            if not a.is_var or (b.is_var and a.name < b.name):
                a, b = b, a
            # a is the renamed variable, b the surviving term
            self.query = self.query.substitute({a: b})
            self.steps.append(ChaseStep(fd.name, record, "rename", renamed=(a, b)))
            return self.query
        return None

    def tgd_step(self, tgd: TupleGeneratingDependency) -> ConjunctiveQuery | None:
        body = self.query.body
        lhs_vars = tgd.lhs_variables
        for h in homomorphisms(tgd.lhs, body):
            frontier = {v: h[v] for v in tgd.frontier}
            if find_homomorphism([tgd.rhs], body, frontier) is not None:
                continue
            sub = dict(frontier)
            for y in tgd.existential_vars:
                sub[y] = self.fresh()
            added = tgd.rhs.substitute(sub)
            self.query = self.query.with_body(body + (added,))
            self.steps.append(ChaseStep(tgd.name, _binding_record(h, lhs_vars), "add", atom=added))
            return self.query
        return None

    def cc_step(self, cc: ConsistencyConstraint) -> _Unsatisfiable | None:
        h = find_homomorphism(cc.lhs, self.query.body)
        if h is None:
            return None
        keys = {t for a in cc.lhs for t in a.variables()}
        self.steps.append(ChaseStep(cc.name, _binding_record(h, keys), "unsatisfiable"))
        return UNSATISFIABLE


def apply_fd_step(q: ConjunctiveQuery, fd: FunctionalDependency):
    """Renamed query, ``UNSATISFIABLE``, or None when the fd does not apply."""
    return _Chaser(q).fd_step(fd)


def apply_tgd_step(q: ConjunctiveQuery, tgd: TupleGeneratingDependency) -> ConjunctiveQuery | None:
    return _Chaser(q).tgd_step(tgd)


def apply_cc_step(q: ConjunctiveQuery, cc: ConsistencyConstraint) -> _Unsatisfiable | None:
    return _Chaser(q).cc_step(cc)


def _run(chaser: _Chaser, deps: DependencySet, step_limit: int, *, use_ccs=True, use_fds=True, use_tgds=True) -> ChaseResult | None:
    """Chase until no step applies.  Returns a ChaseResult only on unsatisfiability."""

    def over_limit():
        if len(chaser.steps) > step_limit:
            partial = ChaseResult(chaser.query, tuple(chaser.steps), terminated=False)
            raise StepLimitExceeded(f"chase exceeded {step_limit} steps", partial)

    while True:
        if use_ccs:
            for cc in deps.ccs:
                if chaser.cc_step(cc) is UNSATISFIABLE:
                    return ChaseResult(None, tuple(chaser.steps))
        progress = use_fds
        while progress:
            progress = False
            for fd in deps.fds:
                out = chaser.fd_step(fd)
                if out is UNSATISFIABLE:
                    return ChaseResult(None, tuple(chaser.steps))
                if out is not None:
                    progress = True
                    over_limit()
                    break
        if not use_tgds:
            return None
        for tgd in deps.tgds:
            if chaser.tgd_step(tgd) is not None:
                over_limit()
                break
        else:
            return None


def chase(q: ConjunctiveQuery, deps: DependencySet, step_limit: int | None = None) -> ChaseResult:
    """Terminal chase of ``q`` by ``deps``.

    Step order: consistency constraints, then fds to a fixpoint, then the first
    applicable tgd in declaration order; repeat.  Raises StepLimitExceeded
    (carrying the partial result) when the limit is reached.
    """
    limit = step_limit if step_limit is not None else default_step_limit(deps)
    chaser = _Chaser(q)
    failed = _run(chaser, deps, limit)
    if failed is not None:
        return failed
    return ChaseResult(chaser.query, tuple(chaser.steps))


def chase_separated(q: ConjunctiveQuery, deps: DependencySet, step_limit: int | None = None) -> ChaseResult:
    """Chase by the fds alone, then by the tgds alone.

    When the tgd phase re-enables an fd (possible when a tgd conclusion is not
    keyed the way the fds expect), the run continues as an ordinary chase so
    the result stays terminal; ``separation_held`` is then False.
    """
    limit = step_limit if step_limit is not None else default_step_limit(deps)
    chaser = _Chaser(q)
    for phase in ({"use_tgds": False}, {"use_ccs": False, "use_fds": False}):
        failed = _run(chaser, deps, limit, **phase)
        if failed is not None:
            return failed
    held = all(_Chaser(chaser.query).fd_step(fd) is None for fd in deps.fds)
    if not held:
        failed = _run(chaser, deps, limit)
        if failed is not None:
            return ChaseResult(None, failed.steps, separation_held=False)
    return ChaseResult(chaser.query, tuple(chaser.steps), separation_held=held)


def applicable_steps(q: ConjunctiveQuery, deps: DependencySet) -> Iterator[tuple[Dependency, dict]]:
    """Every (dependency, assignment) pair that a chase step could use on ``q``."""
    for cc in deps.ccs:
        for h in homomorphisms(cc.lhs, q.body):
            yield cc, h
    for fd in deps.fds:
        for h in homomorphisms(fd.lhs, q.body):
            if h[fd.left] != h[fd.right]:
                yield fd, h
    for tgd in deps.tgds:
        for h in homomorphisms(tgd.lhs, q.body):
            frontier = {v: h[v] for v in tgd.frontier}
            if find_homomorphism([tgd.rhs], q.body, frontier) is None:
                yield tgd, h


def partial_chase(q: ConjunctiveQuery, deps: DependencySet, steps: int, rng: random.Random) -> ConjunctiveQuery | None:
    """Apply up to ``steps`` chase steps picked at random; None if unsatisfiable."""
    chaser = _Chaser(q)
    for _ in range(steps):
        options = list(applicable_steps(chaser.query, deps))
        if not options:
            break
        dep, h = rng.choice(options)
        if isinstance(dep, ConsistencyConstraint):
            return None
        if isinstance(dep, FunctionalDependency):
            a, b = h[dep.left], h[dep.right]
            if not a.is_var and not b.is_var:
                return None
            if not a.is_var or (b.is_var and a.name < b.name):
                a, b = b, a
            chaser.query = chaser.query.substitute({a: b})
        else:
            sub = {v: h[v] for v in dep.frontier}
            for y in dep.existential_vars:
                sub[y] = chaser.fresh()
            chaser.query = chaser.query.with_body(chaser.query.body + (dep.rhs.substitute(sub),))
    return chaser.query


# -- instance chase (test oracle) -------------------------------------------


@dataclass
class InstanceChaseResult:
    instance: DatabaseInstance | None
    substitution: dict = field(default_factory=dict)
    steps: int = 0

    @property
    def unsatisfiable(self) -> bool:
        return self.instance is None

    def resolve(self, value):
        while isinstance(value, Null) and value in self.substitution:
            value = self.substitution[value]
        return value


def chase_instance(
    instance: DatabaseInstance,
    deps: DependencySet,
    step_limit: int | None = None,
) -> InstanceChaseResult:
    """Chase a finite instance: fresh labeled nulls fill existential positions,
    fd steps merge nulls into other values and fail on two distinct constants."""
    limit = step_limit if step_limit is not None else default_step_limit(deps)
    rels = {name: set(tuples) for name, tuples in instance.items()}
    arities = dict(instance.arities)
    for d in deps:
        for a in tuple(d.lhs) + ((d.rhs,) if isinstance(d, TupleGeneratingDependency) else ()):
            rels.setdefault(a.predicate, set())
            arities.setdefault(a.predicate, a.arity)
    result = InstanceChaseResult(None)
    fresh = 0

    def snapshot() -> DatabaseInstance:
        return DatabaseInstance(rels, arities)

    def tick():
        result.steps += 1
        if result.steps > limit:
            raise StepLimitExceeded(f"instance chase exceeded {limit} steps", snapshot())

    def merge(a, b) -> bool:
        if not isinstance(a, Null) and not isinstance(b, Null):
            return False
        if not isinstance(a, Null) or (isinstance(b, Null) and a.label < b.label):
            a, b = b, a
        result.substitution[a] = b
        for name in rels:
            rels[name] = {tuple(b if v == a else v for v in t) for t in rels[name]}
        return True

    while True:
        current = snapshot()
        for cc in deps.ccs:
            if next(assignments(cc.lhs, current), None) is not None:
                return result
        changed = False
        for fd in deps.fds:
            for g in assignments(fd.lhs, current):
                a, b = g[fd.left], g[fd.right]
                if a != b:
                    tick()
                    if not merge(a, b):
                        return result
                    changed = True
                    break
            if changed:
                break
        if changed:
            continue
        for tgd in deps.tgds:
            for g in assignments(tgd.lhs, current):
                frontier = {v: g[v] for v in tgd.frontier}
                if next(assignments([tgd.rhs], current, frontier), None) is not None:
                    continue
                tick()
                vals = dict(frontier)
                for y in tgd.existential_vars:
                    fresh += 1
                    vals[y] = Null(f"n{fresh}")
                rels[tgd.rhs.predicate].add(tuple(vals[t] if t.is_var else t.name for t in tgd.rhs.args))
                changed = True
                break
            if changed:
                break
        if not changed:
            result.instance = snapshot()
            return result


def chase_all(queries: Sequence[ConjunctiveQuery], deps: DependencySet, step_limit: int | None = None) -> list[ChaseResult]:
    return [chase(q, deps, step_limit) for q in queries]
