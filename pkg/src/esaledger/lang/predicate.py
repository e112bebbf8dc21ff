"""Predicate AST shared by agreements and queries.

Values are ``int``, ``Decimal``, ``str``, ``bool`` or ``None`` (null).  Decimals are
kept exact so evaluation and entailment never see binary floating point.
"""
from __future__ import annotations

from dataclasses import dataclass
from decimal import Decimal
from typing import Iterator, Mapping, Union

Value = Union[int, Decimal, str, bool, None]

OPS = ("=", "!=", "<", "<=", ">", ">=")
ORDERING_OPS = frozenset({"<", "<=", ">", ">="})
COMPLEMENT = {"=": "!=", "!=": "=", "<": ">=", "<=": ">", ">": "<=", ">=": "<"}


class PredicateError(Exception):
    pass


class MissingFieldError(PredicateError, KeyError):
    def __init__(self, field: str):
        super().__init__(field)
        self.field = field

    def __str__(self) -> str:
        return f"field {self.field!r} missing from assignment"


class TypeMismatchError(PredicateError, TypeError):
    pass


def value_kind(v: Value) -> str:
    if v is None:
        return "null"
    if isinstance(v, bool):
        return "bool"
    if isinstance(v, (int, Decimal)):
        return "num"
    if isinstance(v, str):
        return "str"
    raise TypeError(f"unsupported value {v!r} of type {type(v).__name__}")


def is_numeric(v: Value) -> bool:
    return isinstance(v, (int, Decimal)) and not isinstance(v, bool)


def value_key(v: Value) -> tuple:
    # bool is an int subclass; keep True and 1 apart
    return (value_kind(v), v)


@dataclass(frozen=True)
class Const:
    value: bool


TRUE = Const(True)
FALSE = Const(False)


@dataclass(frozen=True, eq=False)
class Atom:
    field: str
    op: str
    value: Value

    def __post_init__(self) -> None:
        if self.op not in OPS:
            raise PredicateError(f"unknown operator {self.op!r}")
        value_kind(self.value)
        if self.op in ORDERING_OPS and not is_numeric(self.value):
            raise PredicateError(f"operator {self.op} requires a numeric operand, got {self.value!r}")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Atom):
            return NotImplemented
        return (self.field, self.op, value_key(self.value)) == (other.field, other.op, value_key(other.value))

    def __hash__(self) -> int:
        return hash((self.field, self.op, value_key(self.value)))


@dataclass(frozen=True)
class And:
    items: tuple

    def __post_init__(self) -> None:
        if not self.items:
            raise PredicateError("And requires at least one operand")


@dataclass(frozen=True)
class Or:
    items: tuple

    def __post_init__(self) -> None:
        if not self.items:
            raise PredicateError("Or requires at least one operand")


Predicate = Union[Const, Atom, And, Or]


def conj(*items: Predicate) -> Predicate:
    """Conjunction that drops ``true`` operands and short-circuits on ``false``."""
    kept = []
    for p in items:
        if p == FALSE:
            return FALSE
        if p != TRUE:
            kept.append(p)
    if not kept:
        return TRUE
    return kept[0] if len(kept) == 1 else And(tuple(kept))


def disj(*items: Predicate) -> Predicate:
    kept = []
    for p in items:
        if p == TRUE:
            return TRUE
        if p != FALSE:
            kept.append(p)
    if not kept:
        return FALSE
    return kept[0] if len(kept) == 1 else Or(tuple(kept))


def compare(op: str, left: Value, right: Value) -> bool:
    """Null satisfies only ``= null``; everything else needs matching kinds."""
    if right is None:
        if op == "=":
            return left is None
        if op == "!=":
            return left is not None
        raise TypeMismatchError(f"operator {op} cannot compare with null")
    if left is None:
        return False
    lk, rk = value_kind(left), value_kind(right)
    if lk != rk:
        raise TypeMismatchError(f"cannot compare {lk} value {left!r} with {rk} value {right!r}")
    if op == "=":
        return left == right
    if op == "!=":
        return left != right
    if lk != "num":
        raise TypeMismatchError(f"operator {op} requires numbers, got {left!r}")
    if op == "<":
        return left < right
    if op == "<=":
        return left <= right
    if op == ">":
        return left > right
    return left >= right


def eval_predicate(p: Predicate, assignment: Mapping[str, Value]) -> bool:
    if isinstance(p, Const):
        return p.value
    if isinstance(p, Atom):
        try:
            left = assignment[p.field]
        except KeyError:
            raise MissingFieldError(p.field) from None
        return compare(p.op, left, p.value)
    if isinstance(p, And):
        # evaluate every operand so missing fields surface deterministically
        results = [eval_predicate(q, assignment) for q in p.items]
        return all(results)
    if isinstance(p, Or):
        results = [eval_predicate(q, assignment) for q in p.items]
        return any(results)
    raise TypeError(f"not a predicate: {p!r}")


def negate(p: Predicate) -> Predicate:
    """Negation pushed to the atoms.

    Because null fails every comparison except ``= null``, the complement of a
    non-null atom must also admit the null case.
    """
    if isinstance(p, Const):
        return FALSE if p.value else TRUE
    if isinstance(p, Atom):
        if p.value is None:
            return Atom(p.field, COMPLEMENT[p.op], None)
        return Or((Atom(p.field, COMPLEMENT[p.op], p.value), Atom(p.field, "=", None)))
    if isinstance(p, And):
        return Or(tuple(negate(q) for q in p.items))
    if isinstance(p, Or):
        return And(tuple(negate(q) for q in p.items))
    raise TypeError(f"not a predicate: {p!r}")


def iter_atoms(p: Predicate) -> Iterator[Atom]:
    if isinstance(p, Atom):
        yield p
    elif isinstance(p, (And, Or)):
        for q in p.items:
            yield from iter_atoms(q)


def fields_of(p: Predicate) -> set[str]:
    return {a.field for a in iter_atoms(p)}


def constants_of(p: Predicate, field: str | None = None) -> list[Value]:
    return [a.value for a in iter_atoms(p) if field is None or a.field == field]


def substitute_fields(p: Predicate, names: Mapping[str, str]) -> Predicate:
    if isinstance(p, Atom):
        return Atom(names.get(p.field, p.field), p.op, p.value)
    if isinstance(p, And):
        return And(tuple(substitute_fields(q, names) for q in p.items))
    if isinstance(p, Or):
        return Or(tuple(substitute_fields(q, names) for q in p.items))
    return p


def depth(p: Predicate) -> int:
    if isinstance(p, (And, Or)):
        return 1 + max(depth(q) for q in p.items)
    return 0

