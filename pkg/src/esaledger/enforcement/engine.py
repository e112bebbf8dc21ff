"""In-memory relational store plus the rewriting and compliance rules."""
from __future__ import annotations

import csv
import threading
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from ..lang.agreement import Esa, Kind, field_order
from ..lang.predicate import (
    FALSE,
    And,
    Atom,
    Const,
    Or,
    Predicate,
    TypeMismatchError,
    Value,
    conj,
    eval_predicate,
    iter_atoms,
    value_kind,
)
from ..lang.syntax import MASKED
from .entail import FieldDomain, entails
from .query import Delete, Insert, Query, Select, Update

_KIND_SORT = {"int": "num", "decimal": "num", "text": "str", "bool": "bool"}


class QueryError(ValueError):
    pass


class UnknownTableError(QueryError, KeyError):
    pass


class UnknownFieldError(QueryError, KeyError):
    pass


@dataclass(frozen=True)
class Schema:
    table: str
    columns: tuple  # ((name, kind), ...) in column order
    owner: str = "owner"

    def __post_init__(self) -> None:
        object.__setattr__(self, "columns", tuple((n, k) for n, k in self.columns))
        kinds = dict(self.columns)
        if self.owner not in kinds:
            raise ValueError(f"table {self.table!r} has no owner column {self.owner!r}")
        if kinds[self.owner] != "text":
            raise ValueError("owner column must be text")
        for name, kind in self.columns:
            if kind not in _KIND_SORT:
                raise ValueError(f"column {name!r}: unknown kind {kind!r}")

    @property
    def names(self) -> tuple:
        return tuple(n for n, _ in self.columns)

    def kind(self, name: str) -> str:
        for n, k in self.columns:
            if n == name:
                return k
        raise UnknownFieldError(f"table {self.table!r} has no column {name!r}")

    def domains(self) -> dict[str, FieldDomain]:
        return {n: FieldDomain(k) for n, k in self.columns}

    def check_value(self, name: str, value: Value) -> None:
        if value is None or value is MASKED:
            return
        sort = _KIND_SORT[self.kind(name)]
        if value_kind(value) != sort:
            raise TypeMismatchError(f"column {name!r} of kind {self.kind(name)} cannot hold {value!r}")
        if self.kind(name) == "int" and isinstance(value, Decimal):
            raise TypeMismatchError(f"column {name!r} holds integers, got {value}")

    def check_predicate(self, p: Predicate) -> None:
        for a in iter_atoms(p):
            self.check_value(a.field, a.value)

    def parse_cell(self, name: str, text: str) -> Value:
        kind = self.kind(name)
        if text == "":
            return None
        try:
            if kind == "int":
                return int(text)
            if kind == "decimal":
                return Decimal(text)
        except (ValueError, InvalidOperation):
            raise TypeMismatchError(f"column {name!r}: {text!r} is not a {kind}") from None
        if kind == "bool":
            low = text.lower()
            if low not in ("true", "false"):
                raise TypeMismatchError(f"column {name!r}: {text!r} is not a bool")
            return low == "true"
        return text

    @staticmethod
    def format_cell(value: Value) -> str:
        if value is None:
            return ""
        if isinstance(value, bool):
            return "true" if value else "false"
        if isinstance(value, Decimal):
            return format(value, "f")
        return str(value)


@dataclass
class ResultSet:
    columns: tuple
    rows: list  # list of dicts keyed by column

    def __len__(self) -> int:
        return len(self.rows)


class Database:
    """Tables of rows; writes are serialized by a per-instance lock."""

    def __init__(self, schemas: Iterable[Schema] = ()):
        self.schemas: dict[str, Schema] = {}
        self.tables: dict[str, list[dict]] = {}
        self._lock = threading.Lock()
        for s in schemas:
            self.add_table(s)

    def add_table(self, schema: Schema, rows: Iterable[Mapping[str, Value]] = ()) -> None:
        self.schemas[schema.table] = schema
        self.tables[schema.table] = []
        for r in rows:
            self._insert_row(schema, dict(r))

    def schema(self, table: str) -> Schema:
        try:
            return self.schemas[table]
        except KeyError:
            raise UnknownTableError(f"unknown table {table!r}") from None

    def rows(self, table: str) -> list[dict]:
        self.schema(table)
        return [dict(r) for r in self.tables[table]]

    def _insert_row(self, schema: Schema, values: dict) -> None:
        row = {}
        for name in schema.names:
            v = values.get(name)
            schema.check_value(name, v)
            row[name] = v
        for name in values:
            schema.kind(name)
        self.tables[schema.table].append(row)

    def load_csv(self, schema: Schema, path: str | Path) -> None:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if not header or header[0] != schema.owner:
                raise QueryError(f"{path}: first column must be {schema.owner!r}")
            rows = []
            for lineno, rec in enumerate(reader, start=2):
                if len(rec) != len(header):
                    raise QueryError(f"{path}:{lineno}: expected {len(header)} cells, got {len(rec)}")
                try:
                    rows.append({h: schema.parse_cell(h, c) for h, c in zip(header, rec)})
                except (TypeMismatchError, UnknownFieldError) as exc:
                    raise QueryError(f"{path}:{lineno}: {exc}") from None
        self.add_table(schema, rows)

    def dump_csv(self, table: str, path: str | Path) -> None:
        schema = self.schema(table)
        names = [schema.owner] + [n for n in schema.names if n != schema.owner]
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(names)
            for row in self.tables[table]:
                w.writerow([Schema.format_cell(row[n]) for n in names])


def execute(db: Database, q: Query) -> ResultSet | int:
    schema = db.schema(q.table)
    if isinstance(q, Select):
        for f in q.fields:
            schema.kind(f)
        schema.check_predicate(q.where)
        for _, g in q.guards:
            schema.check_predicate(g)
        out = []
        for row in db.tables[q.table]:
            if eval_predicate(q.where, row):
                out.append({f: row[f] if eval_predicate(q.guard(f), row) else None for f in q.fields})
        return ResultSet(tuple(q.fields), out)

    with db._lock:
        if isinstance(q, Insert):
            values = dict(q.assignments)
            if any(v is MASKED for v in values.values()):
                raise QueryError("masked values cannot be executed")
            db._insert_row(schema, values)
            return 1
        if isinstance(q, Update):
            schema.check_predicate(q.where)
            for c, v in q.assignments:
                if v is MASKED:
                    raise QueryError("masked values cannot be executed")
                schema.check_value(c, v)
            n = 0
            for row in db.tables[q.table]:
                if eval_predicate(q.where, row):
                    row.update(q.assignments)
                    n += 1
            return n
        if isinstance(q, Delete):
            schema.check_predicate(q.where)
            keep = [r for r in db.tables[q.table] if not eval_predicate(q.where, r)]
            n = len(db.tables[q.table]) - len(keep)
            db.tables[q.table] = keep
            return n
    raise TypeError(f"not a query: {q!r}")


# read enforcement


@dataclass(frozen=True)
class ComplianceContext:
    requester: str
    purpose: str
    agreements: tuple = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "agreements", tuple(self.agreements))
        if any(not a.valid for a in self.agreements):
            raise ValueError("compliance context may only hold valid agreements")

    def applicable(self, table: str, kind: Kind = Kind.READ) -> list[Esa]:
        return [a for a in self.agreements if a.domain == table and a.kind is kind]


def _agreement_clause(a: Esa, ctx: ComplianceContext, owner: str) -> Predicate:
    allowed = a.allows(ctx.requester, ctx.purpose)
    return And((Atom(owner, "=", a.consumer), Const(allowed), a.row))


def _disjunction(clauses: Sequence[Predicate]) -> Predicate:
    if not clauses:
        return FALSE
    return clauses[0] if len(clauses) == 1 else Or(tuple(clauses))


def compliance_formula(ctx: ComplianceContext, table: str, owner: str = "owner", field_name: str | None = None) -> Predicate:
    """Disjunction over agreements of ``owner = consumer and context and row``.

    With ``field_name`` only agreements exposing that field contribute.
    """
    clauses = [
        _agreement_clause(a, ctx, owner)
        for a in ctx.applicable(table)
        if field_name is None or field_name in a.fields
    ]
    return _disjunction(clauses)


def rewrite_select(q: Select, ctx: ComplianceContext, owner: str = "owner") -> Select:
    applicable = ctx.applicable(q.table)
    granted = [a for a in applicable if a.allows(ctx.requester, ctx.purpose)]
    exposed = set().union(*(a.fields for a in granted)) if granted else set()
    fields = tuple(f for f in q.fields if f in exposed)

    guards = []
    for f in fields:
        allowing = [a for a in granted if f in a.fields]
        if len(allowing) < len(granted):
            guards.append((f, _disjunction([conj(Atom(owner, "=", a.consumer), a.row) for a in allowing])))

    if not fields:
        # nothing requested is exposed: keep the columns but never reveal them
        fields = q.fields
        guards = [(f, FALSE) for f in fields]

    where = And((q.where, compliance_formula(ctx, q.table, owner)))
    return Select(fields, q.table, where, tuple(guards))


def check_compliance(
    q: Select,
    ctx: ComplianceContext,
    owner: str = "owner",
    domains: Mapping[str, FieldDomain] | None = None,
) -> bool:
    """Decide whether a stored SELECT could only have returned agreed data.

    Every returned row must satisfy some agreement, and every returned column must,
    on the rows where it is visible, be covered by an agreement exposing it.
    """
    if not entails(q.where, compliance_formula(ctx, q.table, owner), domains):
        return False
    for f in q.fields:
        visible = conj(q.where, q.guard(f))
        if not entails(visible, compliance_formula(ctx, q.table, owner, f), domains):
            return False
    return True


# write enforcement


@dataclass(frozen=True)
class WriteDecision:
    query: Query
    executed: bool
    allowed_fields: frozenset = frozenset()


def write_owner(q: Insert | Update, owner: str = "owner") -> str | None:
    values = dict(q.assignments)
    if isinstance(values.get(owner), str):
        return values[owner]
    if isinstance(q, Update):
        conjuncts = q.where.items if isinstance(q.where, And) else (q.where,)
        hits = {c.value for c in conjuncts if isinstance(c, Atom) and c.field == owner and c.op == "=" and isinstance(c.value, str)}
        if len(hits) == 1:
            return hits.pop()
    return None


def write_agreements(
    agreements: Iterable[Esa], table: str, consumer: str, requester: str | None = None, purpose: str | None = None
) -> list[Esa]:
    out = []
    for a in agreements:
        if a.kind is not Kind.WRITE or a.domain != table or a.consumer != consumer or not a.valid:
            continue
        if requester is not None and not a.allows(requester, purpose or ""):
            continue
        out.append(a)
    return out


def rewrite_write(
    q: Insert | Update,
    agreements: Iterable[Esa],
    owner: str = "owner",
    requester: str | None = None,
    purpose: str | None = None,
) -> WriteDecision:
    """Null every column no write agreement of the row owner permits.

    Writes with no applicable agreement come back with ``executed=False``; callers
    must neither run nor log them.
    """
    consumer = write_owner(q, owner)
    usable = write_agreements(agreements, q.table, consumer, requester, purpose) if consumer is not None else []
    allowed = frozenset().union(*(a.fields for a in usable)) if usable else frozenset()
    assignments = tuple((c, v if c == owner or c in allowed else None) for c, v in q.assignments)
    if isinstance(q, Insert):
        rewritten: Query = Insert(q.table, assignments)
    else:
        rewritten = Update(q.table, assignments, q.where)
    return WriteDecision(rewritten, bool(usable), allowed)


def check_write_compliance(
    q: Insert | Update,
    agreements: Iterable[Esa],
    owner: str = "owner",
    requester: str | None = None,
    purpose: str | None = None,
) -> bool:
    """A stored write complies when every non-null column was permitted.

    Writes that only clear columns reduce stored data and need no agreement.
    """
    stored = [c for c, v in q.assignments if c != owner and v is not None]
    if not stored:
        return True
    consumer = write_owner(q, owner)
    if consumer is None:
        return False
    usable = write_agreements(agreements, q.table, consumer, requester, purpose)
    if not usable:
        return False
    allowed = frozenset().union(*(a.fields for a in usable))
    return all(c in allowed for c in stored)


def apply_deletion(db: Database, q: Delete) -> int:
    """Deletions always run, whatever agreements are in force."""
    return execute(db, q)


def apply_revocation(db: Database, consumer: str, remaining: Iterable[Esa], revoked: Esa) -> list[Query]:
    """Bring stored data in line after ``revoked`` stops being in force.

    Columns only the revoked agreement permitted are overwritten with null; when
    no write agreement for the consumer remains, the rows are deleted.  The
    emitted queries are executed before being returned.
    """
    if revoked.kind is not Kind.WRITE or revoked.domain not in db.schemas:
        return []
    schema = db.schema(revoked.domain)
    still = write_agreements(remaining, revoked.domain, consumer)
    who = Atom(schema.owner, "=", consumer)
    if not still:
        queries: list[Query] = [Delete(revoked.domain, who)]
    else:
        kept = frozenset().union(*(a.fields for a in still))
        dropped = sorted((revoked.fields - kept) & (set(schema.names) - {schema.owner}), key=field_order)
        queries = [Update(revoked.domain, tuple((c, None) for c in dropped), who)] if dropped else []
    for q in queries:
        execute(db, q)
    return queries
