"""Rule-based program text, its printer, and the JSON report."""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .dependencies import (
    ConsistencyConstraint,
    Dependency,
    DependencySet,
    FunctionalDependency,
    TupleGeneratingDependency,
    validate_dependencies,
)
from .errors import DependencyError, ParseError, QueryError, ReformulationError
from .reformulator import Reformulation
from .terms import Atom, ConjunctiveQuery, Schema, Term, const, term, validate

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>\#[^\n]*)
  | (?P<neck>:-)
  | (?P<arrow>->)
  | (?P<number>-?\d+(?:\.\d+)?(?![A-Za-z_]))
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<string>'(?:[^'\\\n]|\\.)*')
  | (?P<punct>[(),.=])
    """,
    re.VERBOSE,
)

KEYWORDS = ("schema", "query", "fd", "tgd", "cc")


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    column: int


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    line, line_start, pos = 1, 0, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind == "nl":
            line, line_start = line + 1, m.end()
        elif kind not in ("ws", "comment"):
            tokens.append(Token(kind, m.group(), line, pos - line_start + 1))
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


@dataclass(frozen=True)
class Span:
    kind: str
    line: int
    column: int


@dataclass(frozen=True)
class ProgramFile:
    schema: Schema
    queries: tuple[ConjunctiveQuery, ...]
    dependencies: DependencySet
    spans: tuple[Span, ...] = field(default=(), compare=False)


class _Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def fail(self, message: str, tok: Token | None = None):
        tok = tok or self.tok
        raise ParseError(message, tok.line, tok.column)

    def next(self) -> Token:
        t = self.tok
        self.i += 1
        return t

    def expect(self, text: str) -> Token:
        if self.tok.text != text or self.tok.kind == "string":
            found = self.tok.text or "end of input"
            self.fail(f"expected {text!r}, found {found!r}")
        return self.next()

    def accept(self, text: str) -> bool:
        if self.tok.text == text and self.tok.kind != "string":
            self.i += 1
            return True
        return False

    def name(self) -> str:
        if self.tok.kind != "ident":
            self.fail(f"expected a name, found {self.tok.text or 'end of input'!r}")
        return self.next().text

    def term(self) -> Term:
        t = self.tok
        if t.kind == "ident":
            self.i += 1
            return term(t.text)
        if t.kind == "number":
            self.i += 1
            return const(t.text)
        if t.kind == "string":
            self.i += 1
            return const(re.sub(r"\\(.)", r"\1", t.text[1:-1]))
        self.fail(f"expected a term, found {t.text or 'end of input'!r}")

    def atom(self) -> Atom:
        pred = self.name()
        args: list[Term] = []
        if self.accept("("):
            if not self.accept(")"):
                args.append(self.term())
                while self.accept(","):
                    args.append(self.term())
                self.expect(")")
        return Atom(pred.lower(), tuple(args))

    def atoms(self) -> tuple[Atom, ...]:
        out = [self.atom()]
        while self.accept(","):
            out.append(self.atom())
        return tuple(out)

    def relation_decl(self) -> tuple[str, tuple[str, ...]]:
        rel = self.name()
        attrs: list[str] = []
        self.expect("(")
        if not self.accept(")"):
            attrs.append(self.name())
            while self.accept(","):
                attrs.append(self.name())
            self.expect(")")
        return rel, tuple(attrs)


def _positioned(exc: ReformulationError, span: Span) -> ReformulationError:
    out = type(exc)(f"{span.line}:{span.column}: {exc}")
    out.line, out.column = span.line, span.column
    return out


def parse_program(text: str) -> ProgramFile:
    """Parse and validate a program; errors carry the offending statement's position."""
    p = _Parser(text)
    relations: dict[str, tuple[str, ...]] = {}
    queries: list[tuple[ConjunctiveQuery, Span]] = []
    deps: list[tuple[Dependency, Span]] = []
    spans: list[Span] = []
    while p.tok.kind != "eof":
        start = p.tok
        if start.kind != "ident" or start.text not in KEYWORDS:
            p.fail(f"expected one of {', '.join(KEYWORDS)}, found {start.text!r}")
        p.next()
        span = Span(start.text, start.line, start.column)
        spans.append(span)
        if start.text == "schema":
            while True:
                tok = p.tok
                rel, attrs = p.relation_decl()
                if rel.lower() in relations:
                    p.fail(f"relation {rel!r} declared twice", tok)
                relations[rel.lower()] = attrs
                if not p.accept(","):
                    break
        elif start.text == "query":
            head = p.atom()
            p.expect(":-")
            queries.append((ConjunctiveQuery(head, p.atoms()), span))
        else:
            lhs = p.atoms()
            p.expect("->")
            try:
                if start.text == "fd":
                    while True:
                        left = p.term()
                        p.expect("=")
                        deps.append((FunctionalDependency(lhs, left, p.term()), span))
                        if not p.accept(","):
                            break
                elif start.text == "tgd":
                    deps.append((TupleGeneratingDependency(lhs, p.atom()), span))
                else:
                    tok = p.tok
                    if tok.kind != "ident" or tok.text != "false":
                        p.fail(f"a consistency constraint must conclude 'false', found {tok.text!r}")
                    p.next()
                    deps.append((ConsistencyConstraint(lhs), span))
            except DependencyError as exc:
                raise _positioned(exc, span) from None
        p.expect(".")
    schema = Schema(relations)
    names: set[str] = set()
    for q, span in queries:
        try:
            validate(q, schema)
            if q.name in names:
                raise QueryError(f"query {q.name!r} defined twice")
        except QueryError as exc:
            raise _positioned(exc, span) from None
        names.add(q.name)
    dep_set = DependencySet.of(d for d, _ in deps)
    for d, (_, span) in zip(_declaration_order(dep_set, [d for d, _ in deps]), deps):
        try:
            validate_dependencies(DependencySet.of([d]), schema, names)
        except (QueryError, DependencyError) as exc:
            raise _positioned(exc, span) from None
    return ProgramFile(schema, tuple(q for q, _ in queries), dep_set, tuple(spans))


def _declaration_order(dep_set: DependencySet, declared: Sequence[Dependency]) -> list[Dependency]:
    # DependencySet buckets by kind; recover the named objects in source order.
    buckets = {FunctionalDependency: list(dep_set.fds), TupleGeneratingDependency: list(dep_set.tgds),
               ConsistencyConstraint: list(dep_set.ccs)}
    return [buckets[type(d)].pop(0) for d in declared]


def print_program(program: ProgramFile) -> str:
    """Program text that parses back to an identical ProgramFile."""
    lines: list[str] = []
    rels = program.schema.relations
    if rels:
        decls = ", ".join(f"{name}({','.join(attrs)})" for name, attrs in rels.items())
        lines.append(f"schema {decls}.")
    lines.extend(f"query {q}." for q in program.queries)
    lines.extend(str(d) for d in program.dependencies)
    return "\n".join(lines) + "\n"


# -- report --------------------------------------------------------------------


def _text(q: object) -> str | None:
    return None if q is None else str(q)


def pipeline_section(r: Reformulation) -> dict:
    per_query = []
    for p in r.per_query:
        entry = {
            "query": str(p.query),
            "working_query": _text(p.working_query),
            "plan": p.status,
            "rewriting": _text(p.rewriting),
            "expansion": _text(p.expansion),
            "cost": p.cost,
            "baseline_cost": p.baseline_cost,
            "complete": p.complete,
        }
        if p.stats is not None:
            entry["search"] = {
                "candidate_views": p.stats.candidate_views,
                "partitions_examined": p.stats.partitions_examined,
                "truncated": p.stats.truncated,
            }
        per_query.append(entry)
    return {
        "name": r.pipeline,
        "per_query": per_query,
        "viewset": [{"name": v.name, "definition": str(v.definition), "bytes": b} for v, b in r.viewset],
        "total_view_bytes": r.total_view_bytes,
        "storage_limit": r.storage_limit,
    }


def error_section(name: str, exc: BaseException) -> dict:
    return {"name": name, "error": {"type": type(exc).__name__, "message": str(exc)}}


def build_report(
    program: ProgramFile,
    sections: Iterable[dict],
    traces: Iterable[dict] | None = None,
) -> dict:
    report = {
        "input": {
            "queries": [str(q) for q in program.queries],
            "dependency_counts": program.dependencies.counts(),
            "flags": program.dependencies.flags(),
        },
        "pipelines": list(sections),
    }
    if traces is not None:
        report["traces"] = list(traces)
    return report


def dumps_report(report: dict) -> str:
    return json.dumps(report, indent=2, ensure_ascii=False) + "\n"
