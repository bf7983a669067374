"""Terms, atoms, conjunctive queries and schemas.

Variables and constants live in disjoint namespaces: ``Term("var", "X")`` and
``Term("const", "X")`` never compare equal.  Relation names are stored in
lowercase so that ``schema S(A,B)`` and the atom ``s(X,Y)`` refer to the same
relation.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping

from .errors import ArityMismatch, UnknownPredicate, UnsafeQuery

_PLAIN_CONSTANT = re.compile(r"(?:[a-z_][A-Za-z0-9_]*|-?\d+(?:\.\d+)?)\Z")
_VARIABLE_NAME = re.compile(r"[A-Z][A-Za-z0-9_]*\Z")


@dataclass(frozen=True, slots=True, order=True)
class Term:
    kind: str  # "const" | "var"
    name: str

    def __post_init__(self):
        if self.kind not in ("var", "const"):
            raise ValueError(f"bad term kind {self.kind!r}")
        if self.kind == "var" and not _VARIABLE_NAME.match(self.name):
            raise ValueError(f"bad variable name {self.name!r}")

    @property
    def is_var(self) -> bool:
        return self.kind == "var"

    def __str__(self) -> str:
        if self.is_var or _PLAIN_CONSTANT.match(self.name):
            return self.name
        escaped = self.name.replace("\\", "\\\\").replace("'", "\\'")
        return f"'{escaped}'"

    def __repr__(self) -> str:
        return f"{'Var' if self.is_var else 'Const'}({self.name!r})"


def var(name: str) -> Term:
    return Term("var", name)


def const(name: str) -> Term:
    return Term("const", str(name))


def term(token: str) -> Term:
    """Classify a bare token: uppercase-initial tokens are variables."""
    if token[:1].isupper():
        return var(token)
    return const(token)


@dataclass(frozen=True, slots=True)
class Atom:
    predicate: str
    args: tuple[Term, ...]

    @property
    def arity(self) -> int:
        return len(self.args)

    def variables(self) -> Iterator[Term]:
        return (t for t in self.args if t.is_var)

    def substitute(self, mapping: Mapping[Term, Term]) -> "Atom":
        return Atom(self.predicate, tuple(mapping.get(t, t) for t in self.args))

    def __str__(self) -> str:
        return f"{self.predicate}({','.join(str(t) for t in self.args)})"


def atom(predicate: str, *args: str | Term) -> Atom:
    """Shorthand: ``atom("s", "X", "a")`` is ``s(X,a)``."""
    return Atom(predicate.lower(), tuple(a if isinstance(a, Term) else term(a) for a in args))


@dataclass(frozen=True, slots=True)
class ConjunctiveQuery:
    head: Atom
    body: tuple[Atom, ...]

    @property
    def name(self) -> str:
        return self.head.predicate

    def variables(self) -> set[Term]:
        out = {t for t in self.head.args if t.is_var}
        for a in self.body:
            out.update(a.variables())
        return out

    def body_variables(self) -> set[Term]:
        return {t for a in self.body for t in a.args if t.is_var}

    def head_variables(self) -> set[Term]:
        return {t for t in self.head.args if t.is_var}

    def constants(self) -> set[Term]:
        out = {t for t in self.head.args if not t.is_var}
        for a in self.body:
            out.update(t for t in a.args if not t.is_var)
        return out

    def predicates(self) -> set[str]:
        return {a.predicate for a in self.body}

    def substitute(self, mapping: Mapping[Term, Term]) -> "ConjunctiveQuery":
        return ConjunctiveQuery(self.head.substitute(mapping), tuple(a.substitute(mapping) for a in self.body))

    def with_body(self, body: Iterable[Atom]) -> "ConjunctiveQuery":
        return ConjunctiveQuery(self.head, tuple(body))

    def dedupe(self) -> "ConjunctiveQuery":
        """Drop repeated identical body atoms, keeping first occurrences."""
        return self.with_body(dict.fromkeys(self.body))

    def __str__(self) -> str:
        return f"{self.head} :- {', '.join(str(a) for a in self.body)}"


def query(head: Atom, *body: Atom) -> ConjunctiveQuery:
    return ConjunctiveQuery(head, tuple(body))


@dataclass(frozen=True)
class Schema:
    """Relation name -> attribute names.  Names are normalized to lowercase."""

    relations: Mapping[str, tuple[str, ...]] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "relations", {k.lower(): tuple(v) for k, v in self.relations.items()})

    @classmethod
    def from_arities(cls, arities: Mapping[str, int]) -> "Schema":
        return cls({name: tuple(f"A{i + 1}" for i in range(n)) for name, n in arities.items()})

    def __contains__(self, name: str) -> bool:
        return name.lower() in self.relations

    def arity(self, name: str) -> int:
        try:
            return len(self.relations[name.lower()])
        except KeyError:
            raise UnknownPredicate(f"unknown relation {name!r}") from None

    def names(self) -> list[str]:
        return list(self.relations)


def check_atom(a: Atom, schema: Schema) -> None:
    if a.predicate not in schema:
        raise UnknownPredicate(f"unknown relation {a.predicate!r} in {a}")
    expected = schema.arity(a.predicate)
    if a.arity != expected:
        raise ArityMismatch(f"{a}: {a.predicate} has arity {expected}, got {a.arity}")


def validate(q: ConjunctiveQuery, schema: Schema) -> None:
    """Raise unless ``q`` is safe, nonempty and conforms to ``schema``."""
    if not q.body:
        raise UnsafeQuery(f"query {q.name} has an empty body")
    if q.head.predicate in schema:
        raise UnknownPredicate(f"query head {q.head.predicate!r} clashes with a base relation")
    for a in q.body:
        check_atom(a, schema)
    unbound = q.head_variables() - q.body_variables()
    if unbound:
        names = ", ".join(sorted(t.name for t in unbound))
        raise UnsafeQuery(f"head variables {names} of {q.name} do not occur in the body")


def is_safe(q: ConjunctiveQuery) -> bool:
    return bool(q.body) and q.head_variables() <= q.body_variables()


def has_self_joins(q: ConjunctiveQuery) -> bool:
    """True iff two distinct body atoms share a relation name."""
    distinct = set(q.body)
    return len({a.predicate for a in distinct}) < len(distinct)


def fresh_variable(prefix: str, taken: set[str], start: int = 1) -> tuple[Term, int]:
    """Return ``prefix<k>`` for the smallest k >= start not in ``taken``; also the next k."""
    k = start
    while f"{prefix}{k}" in taken:
        k += 1
    return var(f"{prefix}{k}"), k + 1
