"""View selection and rewriting: cgalg plus the chase and unchase pipelines."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

from .chase import chase_separated, default_step_limit, DEFAULT_STEP_CEILING
from .containment import find_containment_mapping, is_equivalent, minimize
from .costs import CostModel, ScanSumCost, SizeOracle, _definition_key
from .dependencies import DependencySet, preprocess
from .errors import InstanceViolatesDeps, UnknownView, UnsatisfiableQuery
from .instance import DatabaseInstance
from .satisfaction import satisfies
from .terms import Atom, ConjunctiveQuery, Term, fresh_variable, has_self_joins
from .unchase import unchase


@dataclass(frozen=True)
class View:
    name: str
    definition: ConjunctiveQuery

    @property
    def arity(self) -> int:
        return self.definition.head.arity

    def renamed(self, name: str) -> "View":
        d = self.definition
        return View(name, ConjunctiveQuery(Atom(name, d.head.args), d.body))

    def __str__(self) -> str:
        return str(self.definition)


@dataclass(frozen=True)
class Rewriting:
    query_name: str
    head: Atom
    body: tuple[Atom, ...]
    views_used: tuple[View, ...]

    def as_query(self) -> ConjunctiveQuery:
        return ConjunctiveQuery(self.head, self.body)

    def __str__(self) -> str:
        return str(self.as_query())


def _export_variables(q: ConjunctiveQuery, mask: int) -> tuple[Term, ...]:
    inside = [a for i, a in enumerate(q.body) if mask >> i & 1]
    outside_vars = q.head_variables() | {t for i, a in enumerate(q.body) if not mask >> i & 1 for t in a.variables()}
    return tuple(dict.fromkeys(t for a in inside for t in a.variables() if t in outside_vars))


def make_view(q: ConjunctiveQuery, mask: int, name: str) -> View:
    """The view over the body atoms selected by ``mask``, exporting exactly the
    variables it shares with the head or with the atoms left out."""
    body = tuple(a for i, a in enumerate(q.body) if mask >> i & 1)
    return View(name, ConjunctiveQuery(Atom(name, _export_variables(q, mask)), body))


def enumerate_candidate_views(q: ConjunctiveQuery) -> list[View]:
    """One view per nonempty subset of body atoms, named v1, v2, ... by bitmask."""
    q = q.dedupe()
    return [make_view(q, mask, f"v{mask}") for mask in range(1, 1 << len(q.body))]


def build_rewriting(q: ConjunctiveQuery, views: Sequence[View]) -> Rewriting | None:
    """The rewriting using one atom per view, when the view bodies partition q's body."""
    remaining = list(dict.fromkeys(q.body))
    for v in views:
        for a in v.definition.body:
            if a not in remaining:
                return None
            remaining.remove(a)
    if remaining:
        return None
    body = tuple(Atom(v.name, v.definition.head.args) for v in views)
    return Rewriting(q.name, q.head, body, tuple(views))


def expand(rewriting: Rewriting | ConjunctiveQuery, views: Sequence[View]) -> ConjunctiveQuery:
    """Replace each view atom by the view body, freshening non-exported variables."""
    by_name = {v.name: v for v in views}
    r = rewriting.as_query() if isinstance(rewriting, Rewriting) else rewriting
    taken = {t.name for t in r.variables()}
    counters: dict[str, int] = {}
    body: list[Atom] = []
    for va in r.body:
        view = by_name.get(va.predicate)
        if view is None:
            raise UnknownView(f"no view named {va.predicate!r}")
        d = view.definition
        if d.head.arity != va.arity:
            raise UnknownView(f"{va} does not match the arity of view {view.name}")
        sub: dict[Term, Term] = {}
        for h, arg in zip(d.head.args, va.args):
            if h.is_var:
                if sub.setdefault(h, arg) != arg:
                    raise ValueError(f"cannot expand {va}: repeated head variable bound twice")
            elif h != arg:
                raise ValueError(f"cannot expand {va}: constant {h} in the view head")
        for t in sorted({t for a in d.body for t in a.variables()} - set(sub)):
            base = t.name.rstrip("0123456789_") or "V"
            fresh, counters[base] = fresh_variable(f"{base}_", taken, counters.get(base, 1))
            taken.add(fresh.name)
            sub[t] = fresh
        body.extend(a.substitute(sub) for a in d.body)
    return ConjunctiveQuery(r.head, tuple(body))


def verify_rewriting(working: ConjunctiveQuery, rewriting: Rewriting) -> bool:
    """Containment mappings in both directions between the working query and the expansion."""
    exp = expand(rewriting, rewriting.views_used)
    return find_containment_mapping(working, exp) is not None and find_containment_mapping(exp, working) is not None


def is_nonfiltering(working: ConjunctiveQuery, rewriting: Rewriting) -> bool:
    """True iff dropping any single view atom breaks equivalence with ``working``."""
    for i in range(len(rewriting.body)):
        body = rewriting.body[:i] + rewriting.body[i + 1:]
        if not body:
            continue
        exp = expand(ConjunctiveQuery(rewriting.head, body), rewriting.views_used)
        if exp.head_variables() <= exp.body_variables() and is_equivalent(exp, working):
            return False
    return True


# -- cgalg ---------------------------------------------------------------------


@dataclass(frozen=True)
class Plan:
    """One candidate answer strategy for a query: a viewset (empty for the baseline)."""

    cost: int
    view_bytes: int
    views: tuple[View, ...] = ()
    rewriting: Rewriting | None = None
    view_sizes: tuple[int, ...] = ()

    @property
    def is_baseline(self) -> bool:
        return self.rewriting is None

    def definition_texts(self) -> tuple[str, ...]:
        return tuple(sorted(_definition_key(v.definition) for v in self.views))


@dataclass
class CgalgStats:
    candidate_views: int = 0
    partitions_examined: int = 0
    verifications: int = 0
    truncated: bool = False


@dataclass(frozen=True)
class CgalgResult:
    working_query: ConjunctiveQuery
    best: Plan
    baseline_cost: int
    stats: CgalgStats
    pareto: tuple[Plan, ...] = ()


@dataclass(frozen=True)
class CgalgConfig:
    cost_model: CostModel = field(default_factory=ScanSumCost)
    max_partitions: int | None = 5_000_000
    collect_pareto: bool = False


def _plan_key(p: Plan) -> tuple:
    # Equal cost: any view plan beats the baseline; then fewer views, fewer bytes, smaller text.
    return (p.cost, p.is_baseline, len(p.views), p.view_bytes, p.definition_texts())


def _pareto_insert(front: list[Plan], p: Plan) -> None:
    for o in front:
        if o.cost <= p.cost and o.view_bytes <= p.view_bytes and _plan_key(o) <= _plan_key(p):
            return
    front[:] = [o for o in front if not (p.cost <= o.cost and p.view_bytes <= o.view_bytes)]
    front.append(p)


def cgalg(
    working_query: ConjunctiveQuery,
    oracle: SizeOracle,
    storage_limit: int | None,
    config: CgalgConfig | None = None,
) -> CgalgResult:
    """Cheapest equivalent rewriting of one query over views on its own subgoals.

    The query is minimized; the baseline answers it over the base relations.
    Every partition of the body into view bodies whose total materialized size
    fits ``storage_limit`` (None = unlimited) is examined, first block always
    holding the lowest remaining atom and larger blocks tried first.  A plan
    replaces the incumbent only after its expansion is verified equivalent by
    containment mappings in both directions.
    """
    config = config or CgalgConfig()
    model = config.cost_model
    q = minimize(working_query)
    m = len(q.body)
    stats = CgalgStats()
    baseline_cost = oracle.query_cost(q, model)
    best = Plan(baseline_cost, 0)
    pareto: list[Plan] = [best] if config.collect_pareto else []
    views: dict[int, View] = {}
    sizes: dict[int, int] = {}
    limit = storage_limit if storage_limit is not None else float("inf")
    budget = config.max_partitions
    scan_sum = isinstance(model, ScanSumCost)

    def view_size(mask: int) -> int:
        s = sizes.get(mask)
        if s is None:
            views[mask] = make_view(q, mask, f"v{mask}")
            s = sizes[mask] = oracle.size(views[mask].definition)
            stats.candidate_views += 1
        return s

    def consider(blocks: list[int], total: int) -> None:
        nonlocal best
        cost = total if scan_sum else model.combine([sizes[b] for b in blocks])
        if cost > best.cost and not config.collect_pareto:
            return
        if cost == best.cost and not best.is_baseline and len(blocks) > len(best.views) and not config.collect_pareto:
            return
        chosen = tuple(views[b] for b in blocks)
        rewriting = build_rewriting(q, chosen)
        plan = Plan(cost, total, chosen, rewriting, tuple(sizes[b] for b in blocks))
        if config.collect_pareto and rewriting is not None:
            _pareto_insert(pareto, plan)
        if rewriting is None or _plan_key(plan) >= _plan_key(best):
            return
        stats.verifications += 1
        if verify_rewriting(q, rewriting):
            best = plan

    full = (1 << m) - 1
    blocks: list[int] = []

    def search(remaining: int, total: int) -> bool:
        if remaining == 0:
            stats.partitions_examined += 1
            consider(blocks, total)
            return budget is None or stats.partitions_examined < budget
        low = remaining & -remaining
        rest = remaining ^ low
        sub = rest
        while True:
            block = sub | low
            size = view_size(block)
            if total + size <= limit:
                blocks.append(block)
                ok = search(remaining ^ block, total + size)
                blocks.pop()
                if not ok:
                    return False
            if sub == 0:
                return True
            sub = (sub - 1) & rest

    if m:
        stats.truncated = not search(full, 0)
    return CgalgResult(q, best, baseline_cost, stats, tuple(pareto))


# -- pipelines -----------------------------------------------------------------


@dataclass(frozen=True)
class ProblemInput:
    workload: tuple[ConjunctiveQuery, ...]
    instance: DatabaseInstance
    deps: DependencySet
    storage_limit: int | None

    def check(self) -> None:
        if not satisfies(self.instance, self.deps):
            raise InstanceViolatesDeps("the database instance violates the dependencies")


@dataclass(frozen=True)
class PipelineConfig:
    cgalg: CgalgConfig = field(default_factory=CgalgConfig)
    max_chase_steps: int | None = None
    chase_step_ceiling: int = DEFAULT_STEP_CEILING
    bytes_per_value: int = 8


@dataclass(frozen=True)
class QueryPlan:
    query: ConjunctiveQuery
    working_query: ConjunctiveQuery | None
    plan: Plan | None
    baseline_cost: int
    complete: bool
    stats: CgalgStats | None = None
    expansion: ConjunctiveQuery | None = None

    @property
    def status(self) -> str:
        if self.working_query is None:
            return "empty"
        return "baseline" if self.plan.is_baseline else "views"

    @property
    def cost(self) -> int:
        return 0 if self.plan is None else self.plan.cost

    @property
    def rewriting(self) -> Rewriting | None:
        return None if self.plan is None else self.plan.rewriting


@dataclass(frozen=True)
class Reformulation:
    pipeline: str
    per_query: tuple[QueryPlan, ...]
    viewset: tuple[tuple[View, int], ...]
    storage_limit: int | None
    traces: tuple = ()

    @property
    def total_view_bytes(self) -> int:
        return sum(b for _, b in self.viewset)

    @property
    def total_cost(self) -> int:
        return sum(p.cost for p in self.per_query)


def strip_consistency_constraints(problem: ProblemInput) -> ProblemInput:
    return ProblemInput(problem.workload, problem.instance, problem.deps.without_ccs(), problem.storage_limit)


def _combine(results: list[CgalgResult | None], storage_limit: int | None) -> list[Plan | None]:
    """Choose one plan per query so the union of views fits the storage limit."""
    limit = storage_limit if storage_limit is not None else float("inf")
    live = [i for i, r in enumerate(results) if r is not None]
    if len(live) == 1:
        out: list[Plan | None] = [None] * len(results)
        out[live[0]] = results[live[0]].best
        return out
    fronts = [sorted(results[i].pareto or (results[i].best,), key=_plan_key) for i in live]
    best_key, best_combo = None, None
    for combo in itertools.product(*fronts):
        union: set[str] = set()
        bytes_ = 0
        for p in combo:
            for v, b in zip(p.views, p.view_sizes):
                k = _definition_key(v.definition)
                if k not in union:
                    union.add(k)
                    bytes_ += b
        if bytes_ > limit:
            continue
        key = (sum(p.cost for p in combo), not union, len(union), bytes_, tuple(sorted(union)))
        if best_key is None or key < best_key:
            best_key, best_combo = key, combo
    out = [None] * len(results)
    for i, p in zip(live, best_combo):
        out[i] = p
    return out


def _finish(
    pipeline: str,
    problem: ProblemInput,
    working: list[ConjunctiveQuery | None],
    results: list[CgalgResult | None],
    oracle: SizeOracle,
    traces: list,
) -> Reformulation:
    chosen = _combine(results, problem.storage_limit)
    names: dict[str, View] = {}
    viewset: list[tuple[View, int]] = []
    per_query: list[QueryPlan] = []
    for q, w, res, plan in zip(problem.workload, working, results, chosen):
        if res is None:
            per_query.append(QueryPlan(q, None, None, 0, True))
            continue
        if plan is None or plan.is_baseline:
            per_query.append(QueryPlan(q, res.working_query, plan or res.best, res.baseline_cost,
                                       not has_self_joins(res.working_query) and not res.stats.truncated, res.stats))
            continue
        renamed = []
        for v in plan.views:
            key = _definition_key(v.definition)
            if key not in names:
                names[key] = v.renamed(f"v{len(names) + 1}")
                viewset.append((names[key], oracle.size(v.definition)))
            renamed.append(View(names[key].name, v.renamed(names[key].name).definition))
        rewriting = build_rewriting(res.working_query, renamed)
        final = Plan(plan.cost, plan.view_bytes, tuple(renamed), rewriting, plan.view_sizes)
        per_query.append(QueryPlan(
            q, res.working_query, final, res.baseline_cost,
            not has_self_joins(res.working_query) and not res.stats.truncated, res.stats,
            expand(rewriting, renamed),
        ))
    return Reformulation(pipeline, tuple(per_query), tuple(viewset), problem.storage_limit, tuple(traces))


def _step_limit(deps: DependencySet, config: PipelineConfig) -> int:
    if config.max_chase_steps is not None:
        return config.max_chase_steps
    return default_step_limit(deps, config.chase_step_ceiling)


def reformulate_chase_pipeline(problem: ProblemInput, config: PipelineConfig | None = None) -> Reformulation:
    """cgalg on the terminal chase of every workload query.

    Consistency constraints are dropped first; the remaining dependencies are
    preprocessed and each query is chased by the fds, then by the tgds.
    Raises StepLimitExceeded when the chase does not terminate in budget.
    """
    config = config or PipelineConfig()
    problem.check()
    problem = strip_consistency_constraints(problem)
    deps = preprocess(problem.deps)
    oracle = SizeOracle(problem.instance, config.bytes_per_value)
    cg = _pareto_config(config, problem)
    working, results, traces = [], [], []
    for q in problem.workload:
        chased = chase_separated(q, deps, _step_limit(deps, config))
        traces.append({"query": q.name, "pipeline": "chase", "steps": chased.trace()})
        if chased.unsatisfiable:
            working.append(None)
            results.append(None)
            continue
        res = cgalg(chased.query, oracle, problem.storage_limit, cg)
        working.append(res.working_query)
        results.append(res)
    return _finish("chase", problem, working, results, oracle, traces)


def reformulate_unchase_pipeline(problem: ProblemInput, config: PipelineConfig | None = None) -> Reformulation:
    """cgalg on the terminal unchase of every workload query.

    The chosen rewriting's expansion is checked against the unchased query in
    the absence of dependencies; no further unchase of the expansion is needed.
    """
    config = config or PipelineConfig()
    problem.check()
    problem = strip_consistency_constraints(problem)
    deps = preprocess(problem.deps)
    oracle = SizeOracle(problem.instance, config.bytes_per_value)
    cg = _pareto_config(config, problem)
    working, results, traces = [], [], []
    for q in problem.workload:
        try:
            u = unchase(q, deps)
        except UnsatisfiableQuery:
            traces.append({"query": q.name, "pipeline": "unchase", "steps": [], "unsatisfiable": True})
            working.append(None)
            results.append(None)
            continue
        traces.append({"query": q.name, "pipeline": "unchase", "steps": u.trace()})
        res = cgalg(u.query, oracle, problem.storage_limit, cg)
        if res.best.rewriting is not None:
            assert is_equivalent(expand(res.best.rewriting, res.best.views), u.query)
        working.append(res.working_query)
        results.append(res)
    return _finish("unchase", problem, working, results, oracle, traces)


def _pareto_config(config: PipelineConfig, problem: ProblemInput) -> CgalgConfig:
    if len(problem.workload) > 1 and not config.cgalg.collect_pareto:
        c = config.cgalg
        return CgalgConfig(c.cost_model, c.max_partitions, True)
    return config.cgalg
