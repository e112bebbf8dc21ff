"""Minimal SQL fragment: SELECT / INSERT / UPDATE / DELETE over one table.

Text forms (keywords case-insensitive, predicates use the agreement grammar)::

    SELECT age, PSA IF (owner = "Bob") FROM EHR WHERE PSA >= 5
    INSERT INTO EHR SET owner = "Bob", age = 52
    INSERT INTO EHR (owner, age) VALUES ("Bob", 52)
    UPDATE EHR SET phone = null WHERE owner = "Bob"
    DELETE FROM EHR WHERE owner = "Bob"

``IF (...)`` on a selected column is a per-row visibility guard: the column is
returned as null for rows where the guard is false.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from ..lang.predicate import TRUE, Predicate
from ..lang.syntax import MASKED, Parser, render_predicate, render_value


@dataclass(frozen=True)
class Select:
    fields: tuple
    table: str
    where: Predicate = TRUE
    guards: tuple = ()  # ((field, predicate), ...)

    def guard(self, name: str) -> Predicate:
        return dict(self.guards).get(name, TRUE)


@dataclass(frozen=True)
class Insert:
    table: str
    assignments: tuple  # ((column, value), ...)


@dataclass(frozen=True)
class Update:
    table: str
    assignments: tuple
    where: Predicate = TRUE


@dataclass(frozen=True)
class Delete:
    table: str
    where: Predicate = TRUE


Query = Union[Select, Insert, Update, Delete]
WRITES = (Insert, Update)


def _parse_assignments(p: Parser) -> tuple:
    out = []
    while True:
        col = p.expect_ident("column name")
        if p.tok.kind != "op" or p.tok.value != "=":
            raise p.error(f"expected '=', found {p.describe()}")
        p.advance()
        out.append((col, p.parse_literal(allow_mask=True)))
        if not p.at_punct(","):
            return tuple(out)
        p.advance()


def _parse_where(p: Parser) -> Predicate:
    if p.at_keyword("where"):
        p.advance()
        return p.parse_predicate()
    return TRUE


def parse_query(text: str) -> Query:
    p = Parser(text)
    if p.at_keyword("select"):
        p.advance()
        fields, guards = [], []
        while True:
            name = p.expect_ident("column name")
            fields.append(name)
            if p.at_keyword("if"):
                p.advance()
                p.expect_punct("(")
                guards.append((name, p.parse_predicate()))
                p.expect_punct(")")
            if not p.at_punct(","):
                break
            p.advance()
        p.expect_keyword("from")
        table = p.expect_ident("table name")
        q: Query = Select(tuple(fields), table, _parse_where(p), tuple(guards))
    elif p.at_keyword("insert"):
        p.advance()
        p.expect_keyword("into")
        table = p.expect_ident("table name")
        if p.at_punct("("):
            p.advance()
            cols = [p.expect_ident("column name")]
            while p.at_punct(","):
                p.advance()
                cols.append(p.expect_ident("column name"))
            p.expect_punct(")")
            p.expect_keyword("values")
            p.expect_punct("(")
            vals = [p.parse_literal(allow_mask=True)]
            while p.at_punct(","):
                p.advance()
                vals.append(p.parse_literal(allow_mask=True))
            close = p.expect_punct(")")
            if len(vals) != len(cols):
                raise p.error(f"{len(cols)} columns but {len(vals)} values", close)
            q = Insert(table, tuple(zip(cols, vals)))
        else:
            p.expect_keyword("set")
            q = Insert(table, _parse_assignments(p))
    elif p.at_keyword("update"):
        p.advance()
        table = p.expect_ident("table name")
        p.expect_keyword("set")
        assignments = _parse_assignments(p)
        q = Update(table, assignments, _parse_where(p))
    elif p.at_keyword("delete"):
        p.advance()
        p.expect_keyword("from")
        table = p.expect_ident("table name")
        q = Delete(table, _parse_where(p))
    else:
        raise p.error(f"expected SELECT, INSERT, UPDATE or DELETE, found {p.describe()}")
    p.expect_eof()
    return q


def _render_assignments(assignments: tuple) -> str:
    return ", ".join(f"{c} = {render_value(v)}" for c, v in assignments)


def render_query(q: Query) -> str:
    if isinstance(q, Select):
        guards = dict(q.guards)
        cols = ", ".join(f"{f} IF ({render_predicate(guards[f])})" if f in guards else f for f in q.fields)
        return f"SELECT {cols} FROM {q.table} WHERE {render_predicate(q.where)}"
    if isinstance(q, Insert):
        return f"INSERT INTO {q.table} SET {_render_assignments(q.assignments)}"
    if isinstance(q, Update):
        return f"UPDATE {q.table} SET {_render_assignments(q.assignments)} WHERE {render_predicate(q.where)}"
    if isinstance(q, Delete):
        return f"DELETE FROM {q.table} WHERE {render_predicate(q.where)}"
    raise TypeError(f"not a query: {q!r}")


def mask_query(q: Query, owner: str = "owner") -> Query:
    """Replace stored data values in a write with the mask token.

    The owner column and null assignments carry no consumer data and stay readable,
    which keeps column-level write compliance checkable after the fact.
    """
    if not isinstance(q, WRITES):
        return q
    masked = tuple((c, v if c == owner or v is None or v is MASKED else MASKED) for c, v in q.assignments)
    if isinstance(q, Insert):
        return Insert(q.table, masked)
    return Update(q.table, masked, q.where)


def is_masked(q: Query) -> bool:
    return isinstance(q, WRITES) and any(v is MASKED for _, v in q.assignments)
