"""Executable sharing agreements: structure, text form, English form, digest."""
from __future__ import annotations

import enum
import hashlib
from dataclasses import dataclass, field
from decimal import Decimal

from .predicate import TRUE, And, Atom, Const, Or, Predicate, eval_predicate, fields_of
from .syntax import EsaSyntaxError, Parser, _IDENT_RE, render_predicate, render_value

CONTEXT_FIELDS = frozenset({"requester", "purpose"})


class Kind(str, enum.Enum):
    READ = "read"
    WRITE = "write"


class EsaError(ValueError):
    pass


def field_order(name: str) -> tuple[str, str]:
    return (name.lower(), name)


@dataclass(frozen=True)
class Esa:
    """One consumer's consent for a domain.

    ``id``, ``valid`` and ``deployed_at`` are bookkeeping and do not take part in
    equality, so two agreements with the same notation compare equal.
    """

    consumer: str
    context: Predicate
    domain: str
    fields: frozenset
    row: Predicate = TRUE
    kind: Kind = Kind.READ
    valid: bool = field(default=True, compare=False)
    deployed_at: int = field(default=0, compare=False)
    id: str = field(default="", compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "fields", frozenset(self.fields))
        object.__setattr__(self, "kind", Kind(self.kind))
        if not self.fields:
            raise EsaError("an agreement must name at least one field")
        if self.kind is Kind.WRITE and self.row != TRUE:
            raise EsaError("write agreements cannot carry a row predicate")
        stray = fields_of(self.context) - CONTEXT_FIELDS
        if stray:
            raise EsaError(f"context predicate may only use requester/purpose, found {sorted(stray)}")

    @property
    def sorted_fields(self) -> list[str]:
        return sorted(self.fields, key=field_order)

    def allows(self, requester: str, purpose: str) -> bool:
        return eval_predicate(self.context, {"requester": requester, "purpose": purpose})


def parse_esa(text: str) -> Esa:
    p = Parser(text)
    start = p.tok
    if p.tok.kind == "string":
        consumer = p.advance().value
    else:
        consumer = p.expect_ident("consumer")
    p.expect_punct(",")
    ctx_tok = p.tok
    context = p.parse_predicate()
    stray = fields_of(context) - CONTEXT_FIELDS
    if stray:
        raise p.error(f"context predicate may only use requester/purpose, found {sorted(stray)}", ctx_tok)
    p.expect_punct(":")
    p.expect_punct("[")
    names = [p.expect_ident("field name")]
    while p.at_punct(","):
        p.advance()
        names.append(p.expect_ident("field name"))
    p.expect_punct("]")
    p.expect_keyword("of")
    domain = p.expect_ident("domain")
    kind = Kind.READ
    if p.at_punct("."):
        p.advance()
        p.expect_keyword("write")
        kind = Kind.WRITE
    row = TRUE
    if p.at_punct(","):
        comma = p.advance()
        if kind is Kind.WRITE:
            raise p.error("write agreements cannot carry a row predicate", comma)
        row = p.parse_predicate()
    p.expect_eof()
    try:
        return Esa(consumer, context, domain, frozenset(names), row, kind)
    except EsaError as exc:
        raise EsaSyntaxError(str(exc), start.line, start.column) from None


def _render_name(name: str) -> str:
    return name if _IDENT_RE.fullmatch(name) and name.lower() not in ("and", "or", "true", "false", "null") else render_value(name)


def render_esa(esa: Esa) -> str:
    head = f"{_render_name(esa.consumer)}, {render_predicate(esa.context)} : [{', '.join(esa.sorted_fields)}] of {esa.domain}"
    if esa.kind is Kind.WRITE:
        return head + ".write"
    return f"{head}, {render_predicate(esa.row)}"


def hash_esa(esa: Esa) -> bytes:
    return hashlib.sha256(render_esa(esa).encode("utf-8")).digest()


# English rendering

_OP_PHRASES = {
    "=": "",
    "!=": "not ",
    "<": "less than ",
    "<=": "less than or equal to ",
    ">": "greater than ",
    ">=": "greater than or equal to ",
}


def _nl_value(v: object) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, Decimal):
        return format(v, "f")
    return str(v)


def _nl_atom(a: Atom) -> str:
    if a.value is None:
        return f"the {a.field} is {'empty' if a.op == '=' else 'not empty'}"
    return f"the {a.field} is {_OP_PHRASES[a.op]}{_nl_value(a.value)}"


def _nl_predicate(p: Predicate) -> str:
    if isinstance(p, Const):
        return "always" if p.value else "never"
    if isinstance(p, Atom):
        return _nl_atom(p)
    joiner = " and " if isinstance(p, And) else " or "
    parts = [f"({_nl_predicate(q)})" if isinstance(q, (And, Or)) else _nl_predicate(q) for q in p.items]
    return joiner.join(parts)


def _nl_list(items: list[str]) -> str:
    if len(items) == 1:
        return items[0]
    return ", ".join(items[:-1]) + " and " + items[-1]


def _single_equality(conjuncts: list[Predicate], name: str) -> str | None:
    hits = [c for c in conjuncts if isinstance(c, Atom) and c.field == name and c.op == "=" and isinstance(c.value, str)]
    if len(hits) != 1:
        return None
    conjuncts.remove(hits[0])
    return hits[0].value


def render_natural_language(esa: Esa) -> str:
    conjuncts = list(esa.context.items) if isinstance(esa.context, And) else [esa.context]
    conjuncts = [c for c in conjuncts if c != TRUE]
    requester = _single_equality(conjuncts, "requester")
    purpose = _single_equality(conjuncts, "purpose")

    verb = "store" if esa.kind is Kind.WRITE else "read"
    sentence = (
        f"{requester or 'Any requester'} can {verb} the {_nl_list(esa.sorted_fields)} "
        f"of {esa.consumer}'s {esa.domain} for {purpose or 'any purpose'}"
    )
    if conjuncts:
        rest = conjuncts[0] if len(conjuncts) == 1 else And(tuple(conjuncts))
        sentence += f" provided that {_nl_predicate(rest)}"
    if esa.row != TRUE:
        sentence += f" and if {_nl_predicate(esa.row)}"
    return sentence + "."
