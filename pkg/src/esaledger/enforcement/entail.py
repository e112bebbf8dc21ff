"""Entailment between predicates without an external solver.

``entails(pi, phi)`` asks whether ``pi and not phi`` is satisfiable.  Negation is
pushed to the atoms, then a depth-first case split over the disjunctions
enumerates the DNF lazily.  Each branch keeps one small constraint record per
field (interval, pinned value, excluded values, null-ness) and is abandoned as
soon as a field becomes unsatisfiable.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Optional

from ..lang.predicate import And, Atom, Const, Or, Predicate, TypeMismatchError, Value, iter_atoms, negate, value_kind

KINDS = ("int", "decimal", "text", "bool")
_SORT_OF_KIND = {"int": "num", "decimal": "num", "text": "str", "bool": "bool"}


@dataclass(frozen=True)
class FieldDomain:
    """Value space of one column.  ``lo``/``hi`` are inclusive numeric bounds."""

    kind: str
    lo: Optional[Value] = None
    hi: Optional[Value] = None
    nullable: bool = True

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown kind {self.kind!r}")

    @property
    def sort(self) -> str:
        return _SORT_OF_KIND[self.kind]


@dataclass
class _FieldState:
    sort: str  # num | str | bool | any
    integer: bool = False
    null: Optional[bool] = None
    lo: Optional[tuple] = None  # (value, strict)
    hi: Optional[tuple] = None
    eq: object = None
    has_eq: bool = False
    neq: set = field(default_factory=set)

    def copy(self) -> "_FieldState":
        c = _FieldState.__new__(_FieldState)
        c.__dict__.update(self.__dict__)
        c.neq = set(self.neq)
        return c


def _tighter_lo(cur, new):
    if cur is None or new[0] > cur[0] or (new[0] == cur[0] and new[1] and not cur[1]):
        return new
    return cur


def _tighter_hi(cur, new):
    if cur is None or new[0] < cur[0] or (new[0] == cur[0] and new[1] and not cur[1]):
        return new
    return cur


def _in_bounds(v, lo, hi) -> bool:
    if lo is not None and (v < lo[0] or (lo[1] and v == lo[0])):
        return False
    if hi is not None and (v > hi[0] or (hi[1] and v == hi[0])):
        return False
    return True


def _nonnull_ok(s: _FieldState) -> bool:
    if s.sort == "any":
        return True
    if s.has_eq:
        if s.eq in s.neq:
            return False
        if s.sort != "num":
            return True
        if s.integer and s.eq != math.floor(s.eq):
            return False
        return _in_bounds(s.eq, s.lo, s.hi)
    if s.sort == "bool":
        return bool({True, False} - s.neq)
    if s.sort == "str":
        return True  # a fresh string avoids every excluded literal
    if s.integer:
        lo = None if s.lo is None else (math.floor(s.lo[0]) + 1 if s.lo[1] else math.ceil(s.lo[0]))
        hi = None if s.hi is None else (math.ceil(s.hi[0]) - 1 if s.hi[1] else math.floor(s.hi[0]))
        if lo is None or hi is None:
            return True
        if lo > hi:
            return False
        excluded = sum(1 for v in s.neq if v == math.floor(v) and lo <= v <= hi)
        return hi - lo + 1 > excluded
    if s.lo is None or s.hi is None:
        return True
    if s.lo[0] < s.hi[0]:
        return True
    return s.lo[0] == s.hi[0] and not s.lo[1] and not s.hi[1] and s.lo[0] not in s.neq


def _assert(s: _FieldState, a: Atom) -> bool:
    """Add one atom to a field record; False when the record becomes empty."""
    if a.value is None:
        want_null = a.op == "="
        if s.null is not None and s.null != want_null:
            return False
        s.null = want_null
        return True
    if s.null is True:
        return False
    s.null = False
    if value_kind(a.value) != s.sort and s.sort != "any":
        # a value of another sort is never equal to anything in this column
        return a.op == "!="
    op, v = a.op, a.value
    if op == "=":
        if s.has_eq and s.eq != v:
            return False
        s.eq, s.has_eq = v, True
    elif op == "!=":
        s.neq.add(v)
    elif op in ("<", "<="):
        s.hi = _tighter_hi(s.hi, (v, op == "<"))
    else:
        s.lo = _tighter_lo(s.lo, (v, op == ">"))
    return _nonnull_ok(s)


def _initial_states(preds: list[Predicate], domains: Mapping[str, FieldDomain]) -> dict[str, _FieldState]:
    sorts: dict[str, set] = {}
    for p in preds:
        for a in iter_atoms(p):
            bucket = sorts.setdefault(a.field, set())
            if a.value is not None:
                bucket.add(value_kind(a.value))
    states = {}
    for name, seen in sorts.items():
        dom = domains.get(name)
        if dom is not None:
            s = _FieldState(dom.sort, integer=dom.kind == "int")
            if not dom.nullable:
                s.null = False
            if dom.lo is not None:
                s.lo = (dom.lo, False)
            if dom.hi is not None:
                s.hi = (dom.hi, False)
        elif len(seen) > 1:
            raise TypeMismatchError(f"field {name!r} is compared with values of kinds {sorted(seen)}")
        else:
            s = _FieldState(next(iter(seen)) if seen else "any")
        states[name] = s
    return states


_FLIP = {"=": "!=", "!=": "=", "<": ">=", "<=": ">", ">": "<=", ">=": "<"}


def _implied(s: _FieldState, a: Atom) -> bool:
    """Does every value the record still admits satisfy ``a``?"""
    if a.value is None:
        return s.null is (a.op == "=")
    if s.null is not False:
        return False
    return not _assert(s.copy(), Atom(a.field, _FLIP[a.op], a.value))


def _search(pending: list[Predicate], branches: list[tuple], states: dict[str, _FieldState]) -> bool:
    while True:
        while pending:
            p = pending.pop()
            if isinstance(p, Atom):
                if not _assert(states[p.field], p):
                    return False
            elif isinstance(p, And):
                pending.extend(p.items)
            elif isinstance(p, Or):
                branches.append(p.items)
            elif isinstance(p, Const):
                if not p.value:
                    return False
            else:
                raise TypeError(f"not a predicate: {p!r}")
        # prune each disjunction against the current records before splitting
        kept = []
        for alts in branches:
            live = []
            for alt in alts:
                if isinstance(alt, Const):
                    if alt.value:
                        break
                    continue
                if isinstance(alt, Atom):
                    s = states[alt.field]
                    if not _assert(s.copy(), alt):
                        continue
                    if _implied(s, alt):
                        break
                live.append(alt)
            else:
                if not live:
                    return False
                if len(live) == 1:
                    pending.append(live[0])
                else:
                    kept.append(tuple(live))
        branches = kept
        if not pending:
            break
    if not branches:
        return True
    pick = min(range(len(branches)), key=lambda i: len(branches[i]))
    rest = branches[:pick] + branches[pick + 1:]
    for alt in branches[pick]:
        trial = {k: v.copy() for k, v in states.items()}
        if _search([alt], list(rest), trial):
            return True
    return False


def satisfiable(preds: list[Predicate], domains: Mapping[str, FieldDomain] | None = None) -> bool:
    domains = domains or {}
    states = _initial_states(preds, domains)
    for s in states.values():
        if s.null is False and not _nonnull_ok(s):
            return False
    return _search(list(preds), [], states)


def entails(pi: Predicate, phi: Predicate, domains: Mapping[str, FieldDomain] | None = None) -> bool:
    """True iff every assignment (over ``domains``) satisfying ``pi`` satisfies ``phi``."""
    return not satisfiable([pi, negate(phi)], domains)

