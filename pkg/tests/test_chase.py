from __future__ import annotations

import random

import pytest

from dbreform.chase import (
    UNSATISFIABLE,
    apply_cc_step,
    apply_fd_step,
    apply_tgd_step,
    applicable_steps,
    chase,
    chase_instance,
    chase_separated,
    default_step_limit,
)
from dbreform.containment import canonicalize, is_equivalent, minimize
from dbreform.dependencies import ConsistencyConstraint, DependencySet, FunctionalDependency, TupleGeneratingDependency, preprocess
from dbreform.errors import StepLimitExceeded
from dbreform.instance import DatabaseInstance, Null, evaluate
from dbreform.satisfaction import generate_satisfying_instance, satisfies
from dbreform.terms import atom, query, var
from dbreform.workloads import RandomShape, example1, example2, random_dependencies, random_key_fd, random_query, random_schema

X, Y, Z = map(var, "XYZ")
_, Q1, SIGMA_SET = example1()
SIGMA = SIGMA_SET.fds[0]


class TestSteps:
    def test_fd_step_renames_into_constant(self):
        out = apply_fd_step(Q1, SIGMA)
        assert str(out) == "q(X,a) :- s(X,a), s(X,a), t(a,a)"

    def test_fd_step_constant_clash(self):
        assert apply_fd_step(query(atom("q", "X"), atom("s", "X", "b"), atom("s", "X", "c")), SIGMA) is UNSATISFIABLE

    def test_fd_step_not_applicable(self):
        assert apply_fd_step(query(atom("q", "X"), atom("s", "X", "Y")), SIGMA) is None

    def test_tgd_steps_example2(self):
        _, q, deps = example2(2)
        s1, s2 = deps.tgds
        step1 = apply_tgd_step(q, s1)
        assert str(step1) == "q(X,Y) :- p1(X,Y), p2(Z1,X)"
        step2 = apply_tgd_step(step1, s2)
        # a fresh chaser restarts its counter but still avoids the taken Z1
        assert str(step2) == "q(X,Y) :- p1(X,Y), p2(Z1,X), p2(Y,Z2)"

    def test_tgd_step_not_applicable_when_matched(self):
        _, _, deps = example2(2)
        q = query(atom("q", "X", "Y"), atom("p1", "X", "Y"), atom("p2", "Y", "W"))
        assert apply_tgd_step(q, deps.tgds[1]) is None

    def test_cc_steps(self):
        cc = ConsistencyConstraint((atom("s", "X", "X"),))
        assert apply_cc_step(query(atom("q", "X"), atom("s", "X", "X")), cc) is UNSATISFIABLE
        assert apply_cc_step(query(atom("q", "X"), atom("s", "X", "a")), cc) is None
        assert apply_cc_step(query(atom("q", "X"), atom("t", "X", "X")), cc) is None


class TestChase:
    def test_example1(self):
        r = chase(Q1, SIGMA_SET)
        assert r.terminated and str(r.query) == "q(X,a) :- s(X,a), s(X,a), t(a,a)"
        assert r.trace()[0]["renamed"] == {"from": "Y", "to": "a"}

    def test_empty_sigma(self):
        assert chase(Q1, DependencySet()).query == Q1

    def test_example2_m2(self):
        _, q, deps = example2(2)
        r = chase(q, deps)
        assert str(r.query) == "q(X,Y) :- p1(X,Y), p2(Z1,X), p2(Y,Z2)"
        assert not list(applicable_steps(r.query, deps))

    def test_example2_growth(self):
        sizes = [len(chase(example2(m)[1], example2(m)[2]).query.body) for m in range(2, 6)]
        assert sizes == [3, 9, 23, 57]

    def test_cyclic_id_hits_limit_with_partial(self):
        deps = DependencySet.of([TupleGeneratingDependency((atom("p", "X", "Y"),), atom("p", "Y", "Z"))])
        with pytest.raises(StepLimitExceeded) as err:
            chase(query(atom("q", "X"), atom("p", "X", "Y")), deps, step_limit=25)
        assert len(err.value.partial.query.body) > 20 and not err.value.partial.terminated

    def test_default_limit(self):
        _, _, deps = example2(2)
        assert default_step_limit(deps) == 10 * 2**4
        assert default_step_limit(example2(12)[2]) == 100_000

    def test_unsatisfiable_via_cc(self):
        deps = DependencySet.of([ConsistencyConstraint((atom("s", "X", "X"),))])
        assert chase(query(atom("q", "X"), atom("s", "X", "X")), deps).unsatisfiable

    def test_terminal_result_has_no_applicable_step(self):
        rng = random.Random(11)
        for _ in range(150):
            schema = random_schema(rng, RandomShape())
            q = random_query(rng, schema)
            deps = random_dependencies(rng, schema)
            r = chase(q, deps, step_limit=10_000)
            assert r.terminated
            if not r.unsatisfiable:
                assert not list(applicable_steps(r.query, deps))


class TestSeparated:
    def test_matches_chase_for_single_kind(self):
        assert chase_separated(Q1, SIGMA_SET).query == chase(Q1, SIGMA_SET).query
        _, q, deps = example2(3)
        assert chase_separated(q, deps).query == chase(q, deps).query

    def test_equivalent_to_chase_on_random_inputs(self):
        rng = random.Random(12)
        for _ in range(150):
            schema = random_schema(rng, RandomShape())
            q = random_query(rng, schema)
            deps = preprocess(random_dependencies(rng, schema))
            a, b = chase(q, deps), chase_separated(q, deps)
            assert a.unsatisfiable == b.unsatisfiable
            if not a.unsatisfiable:
                assert is_equivalent(a.query, b.query)

    def test_fallback_when_a_conclusion_reenables_an_fd(self):
        fd = FunctionalDependency((atom("r", "X", "Y"), atom("r", "X", "Z")), Y, Z)
        t = TupleGeneratingDependency((atom("s", "X"),), atom("r", "X", "X"))
        r = chase_separated(query(atom("q", "X"), atom("s", "X"), atom("r", "X", "Y")), DependencySet.of([fd, t]))
        assert not r.separation_held
        assert str(minimize(r.query)) == "q(X) :- s(X), r(X,X)"


class TestFdOnly:
    def test_order_independent_and_not_larger(self):
        rng = random.Random(13)
        for _ in range(150):
            schema = random_schema(rng, RandomShape())
            q = random_query(rng, schema)
            fds = [d for d in (random_key_fd(rng, schema) for _ in range(3)) if d is not None]
            a = chase(q, DependencySet.of(fds))
            b = chase(q, DependencySet.of(list(reversed(fds))))
            assert a.unsatisfiable == b.unsatisfiable
            if not a.unsatisfiable:
                assert canonicalize(minimize(a.query)) == canonicalize(minimize(b.query))
                assert len(minimize(a.query).body) <= len(minimize(q).body)


class TestInstanceChase:
    def test_satisfying_instance_unchanged(self):
        inst = DatabaseInstance({"s": {("1", "2")}, "t": set()}, {"s": 2, "t": 2})
        assert chase_instance(inst, SIGMA_SET).instance == inst

    def test_nulls_added(self):
        _, _, deps = example2(2)
        inst = DatabaseInstance({"p1": {("1", "2")}, "p2": set()}, {"p1": 2, "p2": 2})
        out = chase_instance(inst, deps).instance
        assert len(out["p2"]) == 2
        assert all(any(isinstance(v, Null) for v in t) for t in out["p2"])
        assert satisfies(out, deps)

    def test_constant_clash(self):
        inst = DatabaseInstance({"s": {("1", "2"), ("1", "3")}}, {"s": 2})
        assert chase_instance(inst, SIGMA_SET).unsatisfiable


def test_chase_preserves_answers_on_satisfying_instances():
    rng = random.Random(14)
    for seed in range(40):
        schema = random_schema(rng, RandomShape())
        q = random_query(rng, schema)
        deps = random_dependencies(rng, schema)
        r = chase(q, deps)
        for k in range(5):
            d = generate_satisfying_instance(schema, deps, 8, seed * 10 + k, domain_size=6, constants=["a", "b"])
            assert evaluate(q, d) == (set() if r.unsatisfiable else evaluate(r.query, d))
