"""Database reformulation: pick materialized views that answer a query workload
cheaply on one instance, under fds, tgds and consistency constraints."""
from __future__ import annotations

from .chase import ChaseResult, chase, chase_instance, chase_separated, partial_chase
from .containment import (
    canonical_database,
    canonicalize,
    find_containment_mapping,
    is_contained,
    is_equivalent,
    minimize,
)
from .costs import ScanSumCost, SizeOracle, cost
from .dependencies import (
    ConsistencyConstraint,
    DependencySet,
    FunctionalDependency,
    TupleGeneratingDependency,
    preprocess,
)
from .errors import *  # noqa: F401,F403
from .instance import DatabaseInstance, Null, evaluate, load_instance, materialize_views, save_instance
from .query_io import ProgramFile, build_report, parse_program, print_program
from .reformulator import (
    CgalgConfig,
    PipelineConfig,
    ProblemInput,
    Reformulation,
    Rewriting,
    View,
    build_rewriting,
    cgalg,
    enumerate_candidate_views,
    expand,
    reformulate_chase_pipeline,
    reformulate_unchase_pipeline,
    strip_consistency_constraints,
)
from .satisfaction import generate_satisfying_instance, satisfies, violations
from .terms import Atom, ConjunctiveQuery, Schema, Term, atom, const, query, var
from .unchase import equivalent_under_deps, unchase
