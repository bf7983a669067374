from __future__ import annotations

import os
import sys

from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

sys.path.insert(0, os.path.dirname(__file__))

from dbreform.terms import Atom, ConjunctiveQuery, Schema, const, var  # noqa: E402

settings.register_profile("default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

SCHEMA = Schema({"p": ("A", "B"), "r": ("A", "B", "C"), "u": ("A",)})

terms = st.one_of(
    st.sampled_from(["X", "Y", "Z", "W"]).map(var),
    st.sampled_from(["a", "b"]).map(const),
)


@st.composite
def atoms(draw, schema: Schema = SCHEMA):
    rel = draw(st.sampled_from(schema.names()))
    return Atom(rel, tuple(draw(terms) for _ in range(schema.arity(rel))))


@st.composite
def queries(draw, max_atoms: int = 4, head_arity: int | None = None):
    body = tuple(draw(st.lists(atoms(), min_size=1, max_size=max_atoms)))
    body_vars = sorted({t for a in body for t in a.variables()})
    if head_arity is None:
        head = tuple(draw(st.lists(st.sampled_from(body_vars), max_size=2))) if body_vars else ()
    else:
        if head_arity and not body_vars:
            body = body + (Atom("u", (var("X"),)),)
            body_vars = [var("X")]
        head = tuple(draw(st.sampled_from(body_vars)) for _ in range(head_arity))
    return ConjunctiveQuery(Atom("q", head), body)
