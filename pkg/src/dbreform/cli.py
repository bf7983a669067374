"""Command-line driver: program + CSV data in, JSON report out."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Sequence

from .errors import InputError, InstanceViolatesDeps, PipelineError
from .instance import load_instance
from .query_io import build_report, dumps_report, error_section, parse_program, pipeline_section
from .reformulator import (
    CgalgConfig,
    PipelineConfig,
    ProblemInput,
    reformulate_chase_pipeline,
    reformulate_unchase_pipeline,
)
from .satisfaction import satisfies

PIPELINES = {"chase": reformulate_chase_pipeline, "unchase": reformulate_unchase_pipeline}


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dbreform", description="Select materialized views under integrity constraints.")
    p.add_argument("--program", required=True, type=Path, help="schema, queries and dependencies")
    p.add_argument("--data", required=True, type=Path, help="directory holding <relation>.csv files")
    p.add_argument("--storage-limit", required=True, type=int, help="storage limit in bytes")
    p.add_argument("--pipeline", choices=["chase", "unchase", "both"], default="both")
    p.add_argument("--max-chase-steps", type=int, default=None)
    p.add_argument("--max-partitions", type=int, default=CgalgConfig.max_partitions)
    p.add_argument("--bytes-per-value", type=int, default=8)
    p.add_argument("--report", type=Path, default=None, help="output file (default stdout)")
    p.add_argument("--trace", action="store_true", help="include chase/unchase step traces")
    p.add_argument("--seed", type=int, default=0, help="seed for randomized subcommands")
    return p


def _write(text: str, target: Path | None) -> None:
    if target is None:
        sys.stdout.write(text)
    else:
        target.write_text(text, encoding="utf-8")


def run_cli(argv: Sequence[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        program = parse_program(args.program.read_text(encoding="utf-8"))
        instance = load_instance(args.data, program.schema)
        if not satisfies(instance, program.dependencies):
            raise InstanceViolatesDeps("the database instance violates the dependencies")
        if args.storage_limit < 0:
            raise InputError("--storage-limit must be nonnegative")
    except (InputError, OSError) as exc:
        _write(dumps_report({"error": {"type": type(exc).__name__, "message": str(exc)}}), args.report)
        return 1
    problem = ProblemInput(program.queries, instance, program.dependencies, args.storage_limit)
    config = PipelineConfig(
        cgalg=CgalgConfig(max_partitions=args.max_partitions),
        max_chase_steps=args.max_chase_steps,
        bytes_per_value=args.bytes_per_value,
    )
    names = ["chase", "unchase"] if args.pipeline == "both" else [args.pipeline]
    sections, traces, code = [], [], 0
    for name in names:
        try:
            result = PIPELINES[name](problem, config)
        except PipelineError as exc:
            sections.append(error_section(name, exc))
            code = 2
            continue
        sections.append(pipeline_section(result))
        traces.extend(result.traces)
    report = build_report(program, sections, traces if args.trace else None)
    _write(dumps_report(report), args.report)
    return code


def main() -> None:
    sys.exit(run_cli())
