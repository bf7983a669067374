"""Unchase: strip derivable subgoals so dependency-aware equivalence becomes plain equivalence."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .chase import UNSATISFIABLE, ChaseStep, _Chaser, chase, default_step_limit
from .containment import canonicalize, find_homomorphism, is_equivalent, minimize
from .dependencies import DependencySet, FunctionalDependency, TupleGeneratingDependency, preprocess
from .errors import StepLimitExceeded, UnsatisfiableQuery, UnsupportedDependencySet
from .terms import Atom, ConjunctiveQuery, Term

DERIVATION_STEP_CEILING = 2_000


@dataclass(frozen=True)
class UnchaseResult:
    query: ConjunctiveQuery
    steps: tuple[ChaseStep, ...] = ()
    terminated: bool = True

    def trace(self) -> list[dict]:
        return [s.to_record() for s in self.steps]


def _atom_order(a: Atom) -> tuple:
    return (a.predicate, tuple((t.kind, t.name) for t in a.args))


def _match_rhs(rhs: Atom, target: Atom) -> dict[Term, Term] | None:
    if rhs.predicate != target.predicate or rhs.arity != target.arity:
        return None
    mu: dict[Term, Term] = {}
    for r, t in zip(rhs.args, target.args):
        if not r.is_var:
            if r != t:
                return None
        elif mu.setdefault(r, t) != t:
            return None
    return mu


def _removable(q: ConjunctiveQuery, index: int, tgd: TupleGeneratingDependency) -> dict[Term, Term] | None:
    """The homomorphism witnessing that body atom ``index`` is derivable by ``tgd``."""
    s = q.body[index]
    mu = _match_rhs(tgd.rhs, s)
    if mu is None:
        return None
    others = q.body[:index] + q.body[index + 1:]
    head_vars = q.head_variables()
    elsewhere = {t for a in others for t in a.args if t.is_var}
    images = []
    for y in tgd.existential_vars:
        img = mu[y]
        if not img.is_var or img in head_vars or img in elsewhere:
            return None
        images.append(img)
    if len(set(images)) != len(images):
        return None
    frontier = {v: mu[v] for v in tgd.frontier}
    if find_homomorphism(tgd.lhs, others, frontier) is None:
        return None
    return mu


def apply_unchase_step(q: ConjunctiveQuery, tgd: TupleGeneratingDependency) -> ConjunctiveQuery | None:
    """Remove the first (in scan order) body atom derivable by ``tgd``.

    The atom must be the image of the conclusion under some mapping that also
    sends the premise into the remaining atoms; every existential position must
    hold a distinct nondistinguished variable found nowhere else.
    """
    step = _unchase_step(q.dedupe(), tgd)
    return None if step is None else step[0]


def relation_depths(tgds: Sequence[TupleGeneratingDependency]) -> dict[str, int]:
    """Longest-path depth of each relation in the condensation of the tgd relation graph."""
    edges: dict[str, set[str]] = {}
    for t in tgds:
        for a in t.lhs:
            edges.setdefault(a.predicate, set()).add(t.rhs.predicate)
        edges.setdefault(t.rhs.predicate, set())

    def reach(r: str) -> set[str]:
        seen, stack = set(), [r]
        while stack:
            for n in edges[stack.pop()]:
                if n not in seen:
                    seen.add(n)
                    stack.append(n)
        return seen

    reaches = {r: reach(r) for r in edges}
    preds = {r: {p for p in edges if r in reaches[p] and p not in reaches[r]} for r in edges}
    depth: dict[str, int] = {}

    def d(r: str) -> int:
        if r not in depth:
            depth[r] = max((d(p) + 1 for p in preds[r]), default=0)
        return depth[r]

    return {r: d(r) for r in edges}


def _unchase_step(
    q: ConjunctiveQuery,
    *tgds: TupleGeneratingDependency,
    depths: dict[str, int] | None = None,
    fds: Sequence[FunctionalDependency] = (),
) -> tuple[ConjunctiveQuery, ChaseStep] | None:
    """Scan atoms deepest relation first (canonical order within a depth); try tgds in declaration order.

    Deepest first keeps every premise witness, which lives in a shallower
    relation, in place until the atoms derived from it are gone.
    """
    depths = relation_depths(tgds) if depths is None else depths
    order = sorted(range(len(q.body)), key=lambda i: (-depths.get(q.body[i].predicate, 0), _atom_order(q.body[i])))
    for i in order:
        removed = q.body[i]
        for tgd in tgds:
            mu = _removable(q, i, tgd)
            if mu is not None:
                record = tuple((str(k), str(v)) for k, v in sorted(mu.items()))
                return q.with_body(q.body[:i] + q.body[i + 1:]), ChaseStep(tgd.name, record, "remove", atom=removed)
        h = _derivable(q, i, tgds, depths, fds)
        if h is not None:
            record = tuple((str(k), str(v)) for k, v in sorted(h.items()) if k.is_var and k != v)
            return q.with_body(q.body[:i] + q.body[i + 1:]), ChaseStep("derivation", record, "remove", atom=removed)
    return None


def _derivable(
    q: ConjunctiveQuery,
    index: int,
    tgds: Sequence[TupleGeneratingDependency],
    depths: dict[str, int],
    fds: Sequence[FunctionalDependency] = (),
):
    """A witness that body atom ``index`` follows from the other atoms under the dependencies.

    The other atoms are chased by the fds and by the tgds that can reach the
    atom's relation.  Their variables ride along in an auxiliary head, so fd
    merges during that chase are tracked.  The atom must map into the chase
    with every term it shares with the rest of the query (or the head) sent
    to its chased image.  A chase cut off at its step limit still yields only
    implied atoms, so the test stays sound on cyclic ids.
    """
    s = q.body[index]
    rest = q.body[:index] + q.body[index + 1:]
    if not rest or s.predicate not in depths:
        return None
    relevant = tuple(t for t in tgds if _reaches(t.rhs.predicate, s.predicate, tgds))
    if not relevant:
        return None
    sub = DependencySet(tuple(fds), relevant)
    tracked = tuple(sorted({t for a in rest for t in a.variables()}, key=lambda t: t.name))
    aux = ConjunctiveQuery(Atom("_aux", tracked), rest)
    try:
        result = chase(aux, sub, default_step_limit(sub, DERIVATION_STEP_CEILING))
    except StepLimitExceeded as exc:
        result = exc.partial
    if result.unsatisfiable:
        return None
    chased = result.query
    fixed = {t: t for t in q.head.variables()}
    fixed.update(zip(tracked, chased.head.args))
    return find_homomorphism([s], chased.body, fixed)


def _reaches(src: str, dst: str, tgds: Sequence[TupleGeneratingDependency]) -> bool:
    seen, stack = {src}, [src]
    while stack:
        r = stack.pop()
        if r == dst:
            return True
        for t in tgds:
            if r in t.lhs_relations and t.rhs.predicate not in seen:
                seen.add(t.rhs.predicate)
                stack.append(t.rhs.predicate)
    return False


def _fd_key_form(fd: FunctionalDependency) -> tuple[str, frozenset[int], int] | None:
    """(relation, key positions, equated position) when ``fd`` is a plain key dependency."""
    if len(fd.lhs) != 2:
        return None
    a, b = fd.lhs
    if a.predicate != b.predicate or a.arity != b.arity:
        return None
    if any(not t.is_var for t in a.args + b.args):
        return None
    key = frozenset(i for i in range(a.arity) if a.args[i] == b.args[i])
    rest = [t for i in range(a.arity) if i not in key for t in (a.args[i], b.args[i])]
    if len(set(rest)) != len(rest):
        return None
    shared = {a.args[i] for i in key}
    if any(t in shared for t in rest) or len(shared) != len(key):
        return None
    eq = [i for i in range(a.arity) if i not in key and {a.args[i], b.args[i]} == {fd.left, fd.right}]
    if len(eq) != 1:
        return None
    return a.predicate, key, eq[0]


def check_supported(deps: DependencySet) -> None:
    """Raise UnsupportedDependencySet unless unchase is known to be confluent on ``deps``.

    The tgds must be ids or strongly acyclic.  Where fds and tgds share a
    relation, the fd must be a key dependency and every tgd concluding into
    that relation must put a private existential variable either at the
    equated position or at some key position, so merges triggered by derived
    atoms only ever touch invented values.
    """
    if deps.tgds and not (deps.all_ids or deps.tgds_strongly_acyclic):
        raise UnsupportedDependencySet("tgds must be inclusion dependencies or strongly acyclic")
    if not deps.fds or not deps.tgds:
        return
    concluded = {t.rhs.predicate for t in deps.tgds}
    for fd in deps.fds:
        touched = fd.relations & concluded
        if not touched:
            continue
        form = _fd_key_form(fd)
        if form is None:
            raise UnsupportedDependencySet(f"{fd.name} is not a key dependency but shares relations with tgd conclusions")
        rel, key, eq = form
        for t in deps.tgds:
            if t.rhs.predicate != rel:
                continue
            ex = t.existential_vars
            private = {y for y in ex if sum(1 for a in t.rhs.args if a == y) == 1}
            if t.rhs.args[eq] in private or any(t.rhs.args[k] in private for k in key):
                continue
            raise UnsupportedDependencySet(
                f"{t.name} concludes into {rel} with a non-invented value at a position {fd.name} can equate"
            )


def unchase(q: ConjunctiveQuery, deps: DependencySet) -> UnchaseResult:
    """Terminal unchase of ``q`` under ``deps`` (consistency constraints are ignored).

    Rounds of: tgd removal steps to a fixpoint, then fd chase steps to a
    fixpoint, then minimization; rounds repeat while the fd or minimization
    phase changed the query.  The result is canonicalized.
    """
    deps = preprocess(DependencySet(deps.fds, deps.tgds, ()))
    check_supported(deps)
    steps: list[ChaseStep] = []
    current = q.dedupe()
    depths = relation_depths(deps.tgds)
    while True:
        while (out := _unchase_step(current, *deps.tgds, depths=depths, fds=deps.fds)) is not None:
            current, step = out
            steps.append(step)
        before = current
        chaser = _Chaser(current)
        progress = True
        while progress:
            progress = False
            for fd in deps.fds:
                size = len(chaser.query.body)
                out = chaser.fd_step(fd)
                if out is UNSATISFIABLE:
                    raise UnsatisfiableQuery(f"{q.name} is unsatisfiable under {fd.name}")
                if out is not None:
                    assert len(chaser.query.body) <= size
                    progress = True
                    break
        steps.extend(chaser.steps)
        current = minimize(chaser.query)
        if current == before:
            break
    return UnchaseResult(canonicalize(current), tuple(steps))


def equivalent_under_deps(q1: ConjunctiveQuery, q2: ConjunctiveQuery, deps: DependencySet) -> bool:
    """Decide q1 ≡ q2 on databases satisfying ``deps`` by comparing unchase results.

    Two queries that are both unsatisfiable under the fds are equivalent.
    """
    try:
        u1 = unchase(q1, deps).query
    except UnsatisfiableQuery:
        u1 = None
    try:
        u2 = unchase(q2, deps).query
    except UnsatisfiableQuery:
        u2 = None
    if u1 is None or u2 is None:
        return u1 is None and u2 is None
    return is_equivalent(u1, u2)
