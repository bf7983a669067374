"""Homomorphism search, containment, equivalence, minimization, canonical forms."""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Iterator, Mapping, Sequence

from .errors import HeadArityMismatch
from .instance import DatabaseInstance, Null
from .terms import Atom, ConjunctiveQuery, Term, var


class Homomorphism(dict):
    """Variable -> term mapping; constants map to themselves implicitly."""

    def __missing__(self, key: Term) -> Term:
        if key.is_var:
            raise KeyError(key)
        return key

    def apply(self, a: Atom) -> Atom:
        return Atom(a.predicate, tuple(self[t] for t in a.args))


def _compatible(src: Atom, tgt: Atom, mapping: Mapping[Term, Term]) -> dict[Term, Term] | None:
    """Bindings needed to map ``src`` onto ``tgt`` under ``mapping``, or None."""
    if src.predicate != tgt.predicate or len(src.args) != len(tgt.args):
        return None
    new: dict[Term, Term] = {}
    for s, t in zip(src.args, tgt.args):
        if not s.is_var:
            if s != t:
                return None
            continue
        bound = mapping.get(s)
        if bound is None:
            bound = new.get(s)
        if bound is None:
            new[s] = t
        elif bound != t:
            return None
    return new


def homomorphisms(
    source: Sequence[Atom],
    target: Sequence[Atom],
    initial: Mapping[Term, Term] | None = None,
) -> Iterator[Homomorphism]:
    """Yield every mapping of ``source`` variables that sends each source atom
    onto some target atom and extends ``initial``.

    Target atoms are treated as ground: their variables behave like constants.
    Source atoms are matched most-constrained-first.
    """
    by_pred: dict[str, list[Atom]] = defaultdict(list)
    for t in dict.fromkeys(target):
        by_pred[t.predicate].append(t)
    atoms = list(dict.fromkeys(source))
    if any(a.predicate not in by_pred for a in atoms):
        return
    mapping: dict[Term, Term] = dict(initial or {})

    def search(pending: list[Atom]) -> Iterator[Homomorphism]:
        if not pending:
            yield Homomorphism(mapping)
            return
        best_i, best_options = -1, None
        for i, a in enumerate(pending):
            options = []
            for t in by_pred[a.predicate]:
                new = _compatible(a, t, mapping)
                if new is not None:
                    options.append(new)
            if not options:
                return
            if best_options is None or len(options) < len(best_options):
                best_i, best_options = i, options
                if len(options) == 1:
                    break
        rest = pending[:best_i] + pending[best_i + 1:]
        for new in best_options:
            mapping.update(new)
            yield from search(rest)
            for k in new:
                del mapping[k]

    yield from search(atoms)


def find_homomorphism(source, target, initial=None) -> Homomorphism | None:
    return next(homomorphisms(source, target, initial), None)


def _head_binding(src: Atom, tgt: Atom) -> dict[Term, Term] | None:
    if len(src.args) != len(tgt.args):
        raise HeadArityMismatch(f"head arities differ: {src} vs {tgt}")
    binding: dict[Term, Term] = {}
    for s, t in zip(src.args, tgt.args):
        if not s.is_var:
            if s != t:
                return None
        elif binding.setdefault(s, t) != t:
            return None
    return binding


def find_containment_mapping(source: ConjunctiveQuery, target: ConjunctiveQuery) -> Homomorphism | None:
    """A homomorphism sending the head of ``source`` onto the head of ``target``
    and every body atom of ``source`` into the body of ``target``."""
    binding = _head_binding(source.head, target.head)
    if binding is None:
        return None
    return find_homomorphism(source.body, target.body, binding)


def is_contained(q1: ConjunctiveQuery, q2: ConjunctiveQuery) -> bool:
    """q1 ⊑ q2 in the absence of dependencies (mapping goes from q2 to q1)."""
    if not q2.body:
        return _head_binding(q2.head, q1.head) is not None
    if not q1.body:
        return False
    return find_containment_mapping(q2, q1) is not None


def is_equivalent(q1: ConjunctiveQuery, q2: ConjunctiveQuery) -> bool:
    return is_contained(q1, q2) and is_contained(q2, q1)


def minimize(q: ConjunctiveQuery) -> ConjunctiveQuery:
    """Fold away redundant body atoms until none can be removed.

    An atom ``a`` is redundant when ``q`` maps into ``q`` minus ``a``; removing
    one redundant atom at a time reaches the core.  Later atoms are tried
    first, so earlier ones survive among interchangeable copies.
    """
    current = q.dedupe()
    changed = True
    while changed:
        changed = False
        for i in reversed(range(len(current.body))):
            if len(current.body) == 1:
                break
            smaller = current.with_body(current.body[:i] + current.body[i + 1:])
            if find_containment_mapping(current, smaller) is not None:
                current = smaller
                changed = True
                break
    return current


_CANONICAL_NAMES = ("X", "Y", "Z", "W", "U", "V")


def canonical_variable_name(i: int) -> str:
    return _CANONICAL_NAMES[i] if i < len(_CANONICAL_NAMES) else f"X{i + 1}"


def _encode(a: Atom, mapping: Mapping[Term, int]) -> tuple[tuple, dict[Term, int]]:
    local: dict[Term, int] = {}
    n = len(mapping)
    out = []
    for t in a.args:
        if not t.is_var:
            out.append((0, t.name))
        elif t in mapping:
            out.append((1, mapping[t]))
        else:
            if t not in local:
                local[t] = n + len(local)
            out.append((1, local[t]))
    return (a.predicate, tuple(out)), local


def canonicalize(q: ConjunctiveQuery) -> ConjunctiveQuery:
    """Rename variables deterministically so isomorphic queries become equal.

    Head variables are numbered first; body atoms are then emitted in the
    lexicographically least order of their encodings, exploring every tie.
    Duplicate body atoms are dropped.
    """
    atoms = list(dict.fromkeys(q.body))
    mapping: dict[Term, int] = {}
    for t in q.head.args:
        if t.is_var and t not in mapping:
            mapping[t] = len(mapping)
    atom_vars = [frozenset(a.variables()) for a in atoms]
    memo: dict[tuple, tuple] = {}

    def solve(remaining: frozenset[int], mapping: dict[Term, int]) -> tuple:
        if not remaining:
            return ()
        live = set().union(*(atom_vars[i] for i in remaining))
        key = (remaining, len(mapping), tuple(sorted((v.name, mapping[v]) for v in live if v in mapping)))
        hit = memo.get(key)
        if hit is not None:
            return hit
        encoded = [(_encode(atoms[i], mapping), i) for i in remaining]
        least = min(e for (e, _), _ in encoded)
        best = None
        for (e, local), i in encoded:
            if e != least:
                continue
            suffix = (e,) + solve(remaining - {i}, {**mapping, **local})
            if best is None or suffix < best:
                best = suffix
        memo[key] = best
        return best

    def decode(arg) -> Term:
        kind, value = arg
        return Term("const", value) if kind == 0 else var(canonical_variable_name(value))

    body = tuple(Atom(pred, tuple(decode(x) for x in args)) for pred, args in solve(frozenset(range(len(atoms))), mapping))
    head = Atom(q.head.predicate, tuple(var(canonical_variable_name(mapping[t])) if t.is_var else t for t in q.head.args))
    return ConjunctiveQuery(head, body)


def canonical_text(q: ConjunctiveQuery) -> str:
    return str(canonicalize(q))


@dataclass(frozen=True)
class CanonicalDatabase:
    instance: DatabaseInstance
    frozen_head: tuple
    freezing: Mapping[Term, object]


def canonical_database(q: ConjunctiveQuery, schema: "Schema | None" = None) -> CanonicalDatabase:
    """Freeze each variable of ``q`` to a labeled null ``c_<name>``.

    Relations of ``schema`` absent from the body are included empty.
    Labeled nulls are a separate value type, so they never collide with the
    query's constants; plain evaluation treats them as ordinary values.
    """
    freezing: dict[Term, object] = {v: Null(f"c_{v.name}") for v in sorted(q.variables())}

    def freeze(t: Term):
        return freezing[t] if t.is_var else t.name

    relations: dict[str, set] = defaultdict(set)
    arities = {}
    for a in q.body:
        relations[a.predicate].add(tuple(freeze(t) for t in a.args))
        arities[a.predicate] = a.arity
    if schema is not None:
        for name in schema.names():
            relations.setdefault(name, set())
            arities.setdefault(name, schema.arity(name))
    inst = DatabaseInstance(relations, arities)
    return CanonicalDatabase(inst, tuple(freeze(t) for t in q.head.args), freezing)
