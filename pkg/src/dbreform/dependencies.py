"""Functional dependencies, tgds, consistency constraints and their analysis."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from itertools import permutations
from typing import Iterable, Sequence, Union

from .containment import homomorphisms
from .errors import DependencyError
from .terms import Atom, Schema, Term, check_atom


def _atoms_text(atoms: Sequence[Atom]) -> str:
    return ", ".join(str(a) for a in atoms)


@dataclass(frozen=True)
class FunctionalDependency:
    """``lhs -> left = right`` (a conjunctive egd with one equality)."""

    lhs: tuple[Atom, ...]
    left: Term
    right: Term
    name: str = ""

    def __post_init__(self):
        if not self.lhs:
            raise DependencyError("fd with empty left-hand side")
        lhs_vars = {t for a in self.lhs for t in a.variables()}
        for t in (self.left, self.right):
            if not t.is_var or t not in lhs_vars:
                raise DependencyError(f"fd {self.name}: equated term {t} must be a variable of the left-hand side")

    @property
    def relations(self) -> set[str]:
        return {a.predicate for a in self.lhs}

    def __str__(self) -> str:
        return f"fd {_atoms_text(self.lhs)} -> {self.left} = {self.right}."


@dataclass(frozen=True)
class TupleGeneratingDependency:
    """``lhs -> exists ȳ rhs`` with a single right-hand atom."""

    lhs: tuple[Atom, ...]
    rhs: Atom
    name: str = ""

    def __post_init__(self):
        if not self.lhs:
            raise DependencyError("tgd with empty left-hand side")

    @property
    def lhs_variables(self) -> set[Term]:
        return {t for a in self.lhs for t in a.variables()}

    @property
    def existential_vars(self) -> tuple[Term, ...]:
        lv = self.lhs_variables
        return tuple(dict.fromkeys(t for t in self.rhs.variables() if t not in lv))

    @property
    def frontier(self) -> set[Term]:
        lv = self.lhs_variables
        return {t for t in self.rhs.variables() if t in lv}

    @property
    def value_preserving(self) -> bool:
        return not self.existential_vars

    @property
    def is_id(self) -> bool:
        return len(self.lhs) == 1

    @property
    def lhs_relations(self) -> set[str]:
        return {a.predicate for a in self.lhs}

    def __str__(self) -> str:
        return f"tgd {_atoms_text(self.lhs)} -> {self.rhs}."


@dataclass(frozen=True)
class ConsistencyConstraint:
    lhs: tuple[Atom, ...]
    name: str = ""

    def __post_init__(self):
        if not self.lhs:
            raise DependencyError("consistency constraint with empty left-hand side")

    def __str__(self) -> str:
        return f"cc {_atoms_text(self.lhs)} -> false."


Dependency = Union[FunctionalDependency, TupleGeneratingDependency, ConsistencyConstraint]


@dataclass(frozen=True)
class DependencySet:
    fds: tuple[FunctionalDependency, ...] = ()
    tgds: tuple[TupleGeneratingDependency, ...] = ()
    ccs: tuple[ConsistencyConstraint, ...] = ()
    ids_acyclic: bool = field(init=False)
    tgds_acyclic: bool = field(init=False)
    tgds_strongly_acyclic: bool = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "fds", tuple(self.fds))
        object.__setattr__(self, "tgds", tuple(self.tgds))
        object.__setattr__(self, "ccs", tuple(self.ccs))
        object.__setattr__(self, "ids_acyclic", ids_acyclic(self))
        object.__setattr__(self, "tgds_acyclic", tgds_acyclic(self))
        object.__setattr__(self, "tgds_strongly_acyclic", tgds_strongly_acyclic(self))

    @classmethod
    def of(cls, deps: Iterable[Dependency]) -> "DependencySet":
        """Build a set from mixed dependencies, naming unnamed ones fd1/tgd1/cc1..."""
        fds, tgds, ccs = [], [], []
        for d in deps:
            bucket, prefix = {
                FunctionalDependency: (fds, "fd"),
                TupleGeneratingDependency: (tgds, "tgd"),
                ConsistencyConstraint: (ccs, "cc"),
            }[type(d)]
            if not d.name:
                d = replace(d, name=f"{prefix}{len(bucket) + 1}")
            bucket.append(d)
        return cls(tuple(fds), tuple(tgds), tuple(ccs))

    def __iter__(self):
        yield from self.ccs
        yield from self.fds
        yield from self.tgds

    def __len__(self) -> int:
        return len(self.fds) + len(self.tgds) + len(self.ccs)

    @property
    def ids(self) -> tuple[TupleGeneratingDependency, ...]:
        return tuple(t for t in self.tgds if t.is_id)

    @property
    def all_ids(self) -> bool:
        return all(t.is_id for t in self.tgds)

    def counts(self) -> dict[str, int]:
        return {"fd": len(self.fds), "tgd": len(self.tgds), "id": len(self.ids), "cc": len(self.ccs)}

    def without_ccs(self) -> "DependencySet":
        return DependencySet(self.fds, self.tgds, ())

    def only_fds(self) -> "DependencySet":
        return DependencySet(self.fds, (), ())

    def only_tgds(self) -> "DependencySet":
        return DependencySet((), self.tgds, ())

    def relations(self) -> set[str]:
        out = set()
        for d in self:
            out.update(a.predicate for a in d.lhs)
            if isinstance(d, TupleGeneratingDependency):
                out.add(d.rhs.predicate)
        return out

    def atom_count(self) -> int:
        return sum(len(d.lhs) + isinstance(d, TupleGeneratingDependency) for d in self)

    def flags(self) -> dict[str, bool]:
        return {
            "ids_acyclic": self.ids_acyclic,
            "tgds_acyclic": self.tgds_acyclic,
            "tgds_strongly_acyclic": self.tgds_strongly_acyclic,
        }


def validate_dependencies(deps: DependencySet, schema: Schema, query_heads: Iterable[str] = ()) -> None:
    heads = {h.lower() for h in query_heads}
    for d in deps:
        atoms = list(d.lhs) + ([d.rhs] if isinstance(d, TupleGeneratingDependency) else [])
        for a in atoms:
            if a.predicate in heads:
                raise DependencyError(f"{d.name} mentions query head {a.predicate!r}; dependencies range over base relations")
            check_atom(a, schema)


def _has_cycle(edges: dict[str, set[str]]) -> bool:
    white, grey, black = 0, 1, 2
    color: dict[str, int] = {}

    def visit(n: str) -> bool:
        color[n] = grey
        for m in edges.get(n, ()):
            c = color.get(m, white)
            if c == grey or (c == white and visit(m)):
                return True
        color[n] = black
        return False

    return any(color.get(n, white) == white and visit(n) for n in list(edges))


def _relation_graph(tgds: Iterable[TupleGeneratingDependency]) -> dict[str, set[str]]:
    edges: dict[str, set[str]] = {}
    for t in tgds:
        for r in t.lhs_relations:
            edges.setdefault(r, set()).add(t.rhs.predicate)
    return edges


def tgds_acyclic(deps: DependencySet) -> bool:
    """No chain of tgds where each conclusion feeds the next premise and loops back."""
    return not _has_cycle(_relation_graph(deps.tgds))


def ids_acyclic(deps: DependencySet) -> bool:
    return not _has_cycle(_relation_graph(deps.ids))


def tgds_strongly_acyclic(deps: DependencySet) -> bool:
    """Acyclic, and some ordering never lets a later conclusion hit an earlier premise.

    A later tgd whose conclusion relation occurs in an earlier tgd's premise
    forces the producer first; the ordering exists iff those precedences are
    acyclic.
    """
    if not tgds_acyclic(deps):
        return False
    tgds = deps.tgds
    edges: dict[str, set[str]] = {str(i): set() for i in range(len(tgds))}
    for i, producer in enumerate(tgds):
        for j, consumer in enumerate(tgds):
            if i != j and producer.rhs.predicate in consumer.lhs_relations:
                edges[str(i)].add(str(j))
    return not _has_cycle(edges)


def strongly_acyclic_by_enumeration(tgds: Sequence[TupleGeneratingDependency]) -> bool:
    """Reference check over every ordering (only for small sets)."""
    if not tgds_acyclic(DependencySet((), tuple(tgds), ())):
        return False
    for order in permutations(tgds):
        if all(
            order[i + k].rhs.predicate not in order[i].lhs_relations
            for i in range(len(order))
            for k in range(1, len(order) - i)
        ):
            return True
    return not tgds


class _UnionFind:
    def __init__(self):
        self.parent: dict[Term, Term] = {}

    def find(self, t: Term) -> Term:
        p = self.parent.get(t, t)
        if p == t:
            return t
        root = self.find(p)
        self.parent[t] = root
        return root

    def union(self, a: Term, b: Term) -> bool:
        """Merge classes; constants win, otherwise the smallest variable name. False on constant clash."""
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return True
        if not ra.is_var and not rb.is_var:
            return False
        if not rb.is_var or (ra.is_var and rb.name < ra.name):
            ra, rb = rb, ra
        self.parent[rb] = ra
        return True


def _apply_fds_to_atoms(atoms: tuple[Atom, ...], fds: Sequence[FunctionalDependency]) -> tuple[dict[Term, Term], bool]:
    """Fd fixpoint over a conjunction.  Returns (substitution, consistent)."""
    uf = _UnionFind()
    current = atoms
    changed = True
    while changed:
        changed = False
        for fd in fds:
            for h in homomorphisms(fd.lhs, current):
                a, b = h[fd.left], h[fd.right]
                if a != b:
                    if not uf.union(a, b):
                        return {}, False
                    changed = True
                    break
            if changed:
                sub = {t: uf.find(t) for a in atoms for t in a.args if t.is_var}
                current = tuple(dict.fromkeys(a.substitute(sub) for a in atoms))
                break
    return {t: uf.find(t) for a in atoms for t in a.args if t.is_var}, True


def preprocess(deps: DependencySet) -> DependencySet:
    """Apply every fd to the left-hand side of every tgd, to a fixpoint.

    Equated variables collapse to the lexicographically smallest name (or to a
    constant).  A tgd whose premise forces two distinct constants equal can
    never fire on a database satisfying the fds and is dropped.
    """
    if not deps.fds:
        return deps
    tgds = []
    for t in deps.tgds:
        sub, ok = _apply_fds_to_atoms(t.lhs, deps.fds)
        if not ok:
            continue
        lhs = tuple(dict.fromkeys(a.substitute(sub) for a in t.lhs))
        tgds.append(TupleGeneratingDependency(lhs, t.rhs.substitute(sub), t.name))
    return DependencySet(deps.fds, tuple(tgds), deps.ccs)
