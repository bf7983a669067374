"""Finite database instances and conjunctive-query evaluation (set semantics)."""
from __future__ import annotations

import csv
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Iterable, Iterator, Mapping, Sequence

from .errors import DataError, DuplicateViewName, UnknownPredicate

if TYPE_CHECKING:
    from .terms import Atom, ConjunctiveQuery, Schema, Term

DEFAULT_BYTES_PER_VALUE = 8


@dataclass(frozen=True, slots=True, order=True)
class Null:
    """A labeled null: a value distinct from every constant."""

    label: str

    def __str__(self) -> str:
        return self.label


def value_key(v) -> tuple:
    return (1, v.label) if isinstance(v, Null) else (0, v)


def _tuple_key(t: tuple) -> tuple:
    return tuple(map(value_key, t))


class DatabaseInstance:
    """Relation name -> frozenset of tuples, plus the arity of every relation.

    Instances are never mutated after construction.
    """

    __slots__ = ("_relations", "_arities")

    def __init__(self, relations: Mapping[str, Iterable[tuple]] = (), arities: Mapping[str, int] | None = None):
        rels = {name.lower(): frozenset(tuple(t) for t in tuples) for name, tuples in dict(relations).items()}
        ar = {name.lower(): n for name, n in (arities or {}).items()}
        for name, tuples in rels.items():
            for t in tuples:
                n = ar.setdefault(name, len(t))
                if len(t) != n:
                    raise DataError(f"tuple {t} does not match arity {n} of {name}")
        for name in ar:
            rels.setdefault(name, frozenset())
        self._relations = rels
        self._arities = ar

    @classmethod
    def empty(cls, schema: "Schema") -> "DatabaseInstance":
        return cls({}, {name: schema.arity(name) for name in schema.names()})

    def __getitem__(self, name: str) -> frozenset:
        try:
            return self._relations[name]
        except KeyError:
            raise UnknownPredicate(f"no relation {name!r} in instance") from None

    def __contains__(self, name: str) -> bool:
        return name in self._relations

    def __eq__(self, other) -> bool:
        return isinstance(other, DatabaseInstance) and self._relations == other._relations and self._arities == other._arities

    def __hash__(self):
        return hash(frozenset(self._relations.items()))

    def __repr__(self) -> str:
        inner = ", ".join(f"{k}: {len(v)}" for k, v in sorted(self._relations.items()))
        return f"DatabaseInstance({inner})"

    def names(self) -> list[str]:
        return sorted(self._relations)

    def arity(self, name: str) -> int:
        try:
            return self._arities[name]
        except KeyError:
            raise UnknownPredicate(f"no relation {name!r} in instance") from None

    @property
    def arities(self) -> dict[str, int]:
        return dict(self._arities)

    def items(self):
        return self._relations.items()

    def tuple_count(self) -> int:
        return sum(len(v) for v in self._relations.values())

    def active_domain(self) -> set:
        return {v for tuples in self._relations.values() for t in tuples for v in t}

    def replace(self, **changes: Iterable[tuple]) -> "DatabaseInstance":
        rels = dict(self._relations)
        rels.update(changes)
        return DatabaseInstance(rels, self._arities)

    def with_relations(self, relations: Mapping[str, Iterable[tuple]], arities: Mapping[str, int]) -> "DatabaseInstance":
        rels = dict(self._relations)
        rels.update(relations)
        ar = dict(self._arities)
        ar.update(arities)
        return DatabaseInstance(rels, ar)


def _term_value(t: "Term"):
    return t.name


def assignments(
    atoms: Sequence["Atom"],
    instance: DatabaseInstance,
    initial: Mapping["Term", object] | None = None,
) -> Iterator[dict]:
    """Yield every variable assignment satisfying all ``atoms`` on ``instance``.

    Backtracking join; at each level the pending atom with the fewest matching
    tuples (via lazily built hash indexes) is joined next.
    """
    for a in atoms:
        if a.predicate not in instance:
            raise UnknownPredicate(f"no relation {a.predicate!r} in instance")
    indexes: dict[tuple, dict] = {}

    def lookup(a: "Atom", binding: Mapping) -> list[tuple]:
        positions = []
        key = []
        for i, t in enumerate(a.args):
            if not t.is_var:
                positions.append(i)
                key.append(t.name)
            elif t in binding:
                positions.append(i)
                key.append(binding[t])
        pos = tuple(positions)
        index = indexes.get((a.predicate, pos))
        if index is None:
            index = defaultdict(list)
            # sorted so enumeration order never depends on string hashing
            for tup in sorted(instance[a.predicate], key=_tuple_key):
                index[tuple(tup[i] for i in pos)].append(tup)
            indexes[(a.predicate, pos)] = index
        return index.get(tuple(key), [])

    def extend(a: "Atom", tup: tuple, binding: dict) -> dict | None:
        new = {}
        for t, v in zip(a.args, tup):
            if t.is_var and t not in binding:
                seen = new.get(t)
                if seen is None:
                    new[t] = v
                elif seen != v:
                    return None
        return new

    binding: dict = dict(initial or {})
    pending = list(dict.fromkeys(atoms))

    def search(pending: list) -> Iterator[dict]:
        if not pending:
            yield dict(binding)
            return
        best_i, best_rows = 0, None
        for i, a in enumerate(pending):
            rows = lookup(a, binding)
            if best_rows is None or len(rows) < len(best_rows):
                best_i, best_rows = i, rows
                if not rows:
                    return
        a = pending[best_i]
        rest = pending[:best_i] + pending[best_i + 1:]
        for tup in best_rows:
            new = extend(a, tup, binding)
            if new is None:
                continue
            binding.update(new)
            yield from search(rest)
            for k in new:
                del binding[k]

    yield from search(pending)


def evaluate(q: "ConjunctiveQuery", instance: DatabaseInstance) -> set[tuple]:
    """The answer of ``q`` on ``instance``: head images of satisfying assignments."""
    head = q.head.args
    out = set()
    for b in assignments(q.body, instance):
        out.add(tuple(b[t] if t.is_var else t.name for t in head))
    return out


def relation_size_bytes(tuples: Iterable[tuple] | int, arity: int, bytes_per_value: int = DEFAULT_BYTES_PER_VALUE) -> int:
    """tuple count x arity x bytes_per_value."""
    count = tuples if isinstance(tuples, int) else len(set(tuples))
    return count * arity * bytes_per_value


def materialize_views(views: Sequence["ConjunctiveQuery"], instance: DatabaseInstance) -> DatabaseInstance:
    """An instance holding one relation per view (named by the view head).

    Base relations are not carried over: rewritings refer only to views.
    """
    names = [v.head.predicate for v in views]
    dupes = {n for n in names if names.count(n) > 1}
    clashes = {n for n in names if n in instance}
    if dupes or clashes:
        raise DuplicateViewName(f"view names not distinct: {sorted(dupes | clashes)}")
    return DatabaseInstance(
        {v.head.predicate: evaluate(v, instance) for v in views},
        {v.head.predicate: v.head.arity for v in views},
    )


def load_instance(directory: str | Path, schema: "Schema") -> DatabaseInstance:
    """Read ``<relation>.csv`` for every schema relation (no header, bare tokens)."""
    directory = Path(directory)
    relations = {}
    for name in schema.names():
        path = directory / f"{name}.csv"
        if not path.exists():
            raise DataError(f"missing data file for relation {name}", str(path))
        arity = schema.arity(name)
        rows = set()
        with path.open(newline="", encoding="utf-8") as fh:
            for lineno, row in enumerate(csv.reader(fh), start=1):
                values = [v.strip() for v in row]
                if not values or values == [""]:
                    if arity == 0:
                        rows.add(())
                    continue
                if len(values) != arity:
                    raise DataError(f"expected {arity} values, got {len(values)}", str(path), lineno)
                for v in values:
                    if not v:
                        raise DataError("empty value", str(path), lineno)
                    if v[0].isupper():
                        raise DataError(f"value {v!r} looks like a variable", str(path), lineno)
                rows.add(tuple(values))
        relations[name] = rows
    return DatabaseInstance(relations, {n: schema.arity(n) for n in schema.names()})


def save_instance(instance: DatabaseInstance, directory: str | Path) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for name, tuples in instance.items():
        with (directory / f"{name}.csv").open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            for t in sorted(tuples, key=lambda t: tuple(value_key(v) for v in t)):
                writer.writerow([str(v) for v in t])
