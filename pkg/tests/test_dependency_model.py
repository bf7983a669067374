from __future__ import annotations

import random

import pytest

from dbreform.dependencies import (
    ConsistencyConstraint,
    DependencySet,
    FunctionalDependency,
    TupleGeneratingDependency,
    ids_acyclic,
    preprocess,
    strongly_acyclic_by_enumeration,
    tgds_acyclic,
    tgds_strongly_acyclic,
    validate_dependencies,
)
from dbreform.errors import DependencyError
from dbreform.terms import Atom, Schema, atom, var
from dbreform.workloads import RandomShape, example2, random_dependencies, random_schema

X, Y, Z = map(var, "XYZ")


def tgd(lhs, rhs):
    return TupleGeneratingDependency(tuple(lhs), rhs)


SIGMA = FunctionalDependency((atom("s", "X", "Y"), atom("s", "X", "Z")), Y, Z)


class TestClassification:
    def test_value_preserving_and_id(self):
        t = tgd([atom("p1", "X", "Y")], atom("p2", "Z", "X"))
        assert t.is_id and not t.value_preserving
        assert t.existential_vars == (Z,)
        assert tgd([atom("r", "X"), atom("s", "X", "Y")], atom("t", "Y")).value_preserving

    def test_fd_needs_lhs_variables(self):
        with pytest.raises(DependencyError):
            FunctionalDependency((atom("s", "X", "Y"),), X, Z)

    def test_auto_names_and_iteration_order(self):
        cc = ConsistencyConstraint((atom("s", "X", "X"),))
        deps = DependencySet.of([SIGMA, tgd([atom("s", "X", "Y")], atom("t", "X")), cc])
        assert [d.name for d in deps] == ["cc1", "fd1", "tgd1"]
        assert deps.counts() == {"fd": 1, "tgd": 1, "id": 1, "cc": 1}

    def test_head_predicates_rejected(self):
        schema = Schema({"s": ("A", "B"), "q": ("A",)})
        deps = DependencySet.of([tgd([atom("s", "X", "Y")], atom("q", "X"))])
        with pytest.raises(DependencyError):
            validate_dependencies(deps, schema, ["q"])


class TestAcyclicity:
    def test_example2_ids(self):
        for m in (2, 3, 5):
            _, _, deps = example2(m)
            assert deps.ids_acyclic and deps.tgds_acyclic and deps.tgds_strongly_acyclic
            assert len(deps.tgds) == m * (m - 1)

    def test_cyclic_id(self):
        deps = DependencySet.of([tgd([atom("p", "X", "Y")], atom("p", "Y", "Z"))])
        assert not ids_acyclic(deps) and not deps.tgds_strongly_acyclic

    def test_empty(self):
        assert ids_acyclic(DependencySet()) and tgds_strongly_acyclic(DependencySet())

    def test_two_cycle(self):
        deps = DependencySet.of([tgd([atom("r", "X")], atom("s", "X")), tgd([atom("s", "X")], atom("r", "X"))])
        assert not tgds_acyclic(deps)

    def test_single_multi_atom_tgd(self):
        assert tgds_acyclic(DependencySet.of([tgd([atom("r", "X"), atom("s", "X", "Y")], atom("t", "Y"))]))

    def test_chain(self):
        deps = DependencySet.of([tgd([atom("a", "X")], atom("b", "X")), tgd([atom("b", "X")], atom("c", "X"))])
        assert deps.tgds_strongly_acyclic

    def test_strong_matches_enumeration_on_random_sets(self):
        rng = random.Random(3)
        names = ["a", "b", "c", "d"]
        for _ in range(300):
            ts = []
            for _ in range(rng.randint(0, 4)):
                lhs = [Atom(n, (X,)) for n in rng.sample(names, rng.randint(1, 2))]
                ts.append(tgd(lhs, Atom(rng.choice(names), (X,))))
            deps = DependencySet((), tuple(ts))
            assert deps.tgds_strongly_acyclic == strongly_acyclic_by_enumeration(ts)
            assert not deps.tgds_strongly_acyclic or deps.tgds_acyclic

    def test_ids_acyclic_is_acyclicity_of_the_ids(self):
        rng = random.Random(4)
        for _ in range(100):
            schema = random_schema(rng, RandomShape())
            deps = random_dependencies(rng, schema)
            assert deps.ids_acyclic == tgds_acyclic(DependencySet((), deps.ids))


class TestPreprocess:
    def test_fd_applied_to_tgd_premise(self):
        t = tgd([atom("s", "X", "Y"), atom("s", "X", "Z")], atom("p", "X", "Z"))
        out = preprocess(DependencySet.of([SIGMA, t]))
        assert out.tgds[0].lhs == (atom("s", "X", "Y"),)
        assert out.tgds[0].rhs == atom("p", "X", "Y")

    def test_unchanged_without_fds_or_matches(self):
        t = tgd([atom("s", "X", "Y")], atom("p", "X", "Y"))
        only = DependencySet.of([t])
        assert preprocess(only) == only
        both = DependencySet.of([SIGMA, t])
        assert preprocess(both) == both

    def test_constant_clash_drops_tgd(self):
        t = tgd([atom("s", "X", "a"), atom("s", "X", "b")], atom("p", "X", "X"))
        assert preprocess(DependencySet.of([SIGMA, t])).tgds == ()

    def test_idempotent_on_random_sets(self):
        rng = random.Random(5)
        for _ in range(200):
            schema = random_schema(rng, RandomShape())
            deps = random_dependencies(rng, schema)
            once = preprocess(deps)
            assert preprocess(once) == once
