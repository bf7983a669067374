"""Size-monotonic cost models and the memoizing view-size oracle."""
from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Protocol, Sequence

from .containment import canonicalize
from .errors import MissingRelation
from .instance import DEFAULT_BYTES_PER_VALUE, DatabaseInstance, evaluate, relation_size_bytes
from .terms import Atom, ConjunctiveQuery


class CostModel(Protocol):
    bytes_per_value: int

    def combine(self, sizes: Sequence[int]) -> int:
        """Cost of a query whose body scans relations of the given byte sizes.

        Must never increase when any single size decreases.
        """


@dataclass(frozen=True)
class ScanSumCost:
    """Sum of the byte sizes of every relation occurrence in the body."""

    bytes_per_value: int = DEFAULT_BYTES_PER_VALUE

    def combine(self, sizes: Sequence[int]) -> int:
        return sum(sizes)


def cost(body: Sequence[Atom] | ConjunctiveQuery, instance: DatabaseInstance, model: CostModel | None = None) -> int:
    """Cost of evaluating ``body`` (a rewriting or query) over ``instance``."""
    model = model or ScanSumCost()
    atoms = body.body if isinstance(body, ConjunctiveQuery) else body
    sizes = []
    for a in atoms:
        if a.predicate not in instance:
            raise MissingRelation(f"no relation {a.predicate!r} to cost")
        sizes.append(relation_size_bytes(len(instance[a.predicate]), instance.arity(a.predicate), model.bytes_per_value))
    return model.combine(sizes)


def _definition_key(view: ConjunctiveQuery) -> str:
    c = canonicalize(view)
    return f"({','.join(str(t) for t in c.head.args)}) :- {', '.join(str(a) for a in c.body)}"


class SizeOracle:
    """Exact byte size of any view on a fixed instance, computed once per definition.

    Views are keyed by their canonical definition, so differently named but
    isomorphic views share one entry.  Safe to share between threads.
    """

    def __init__(self, instance: DatabaseInstance, bytes_per_value: int = DEFAULT_BYTES_PER_VALUE):
        self.instance = instance
        self.bytes_per_value = bytes_per_value
        self._memo: dict[str, int] = {}
        self._lock = threading.Lock()
        self.evaluations = 0

    def size(self, view: ConjunctiveQuery) -> int:
        key = _definition_key(view)
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        with self._lock:
            hit = self._memo.get(key)
            if hit is None:
                rows = evaluate(view, self.instance)
                hit = relation_size_bytes(len(rows), view.head.arity, self.bytes_per_value)
                self._memo[key] = hit
                self.evaluations += 1
            return hit

    def relation_size(self, name: str) -> int:
        return relation_size_bytes(len(self.instance[name]), self.instance.arity(name), self.bytes_per_value)

    def query_cost(self, q: ConjunctiveQuery, model: CostModel) -> int:
        """Cost of answering ``q`` directly over the base relations."""
        return model.combine([self.relation_size(a.predicate) for a in q.body])
