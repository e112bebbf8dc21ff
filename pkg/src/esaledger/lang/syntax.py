"""Tokenizer, predicate parser and canonical renderer.

The agreement notation and the SQL fragment in :mod:`esaledger.enforcement.query`
both build on :class:`Parser`.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from decimal import Decimal

from .predicate import FALSE, OPS, TRUE, And, Atom, Const, Or, Predicate, PredicateError, Value

MASK_TOKEN = "«masked»"

_UNICODE_OPS = {"≠": "!=", "≤": "<=", "≥": ">="}
_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_NUMBER_RE = re.compile(r"-?[0-9]+(\.[0-9]+)?")
_PUNCT = set(",:[]().")
_OP_CHARS = set("=!<>")


class EsaSyntaxError(ValueError):
    """Raised with a 1-based line/column of the offending token."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} at line {line}, column {column}")
        self.message = message
        self.line = line
        self.column = column


class Masked:
    """Placeholder for a write literal removed from the audit log."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "MASKED"


MASKED = Masked()


@dataclass(frozen=True)
class Token:
    kind: str  # ident | string | number | op | punct | mask | eof
    text: str
    value: object
    line: int
    column: int


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    i, line, line_start = 0, 1, 0
    n = len(text)
    while i < n:
        ch = text[i]
        col = i - line_start + 1
        if ch == "\n":
            i += 1
            line += 1
            line_start = i
            continue
        if ch.isspace():
            i += 1
            continue
        if text.startswith(MASK_TOKEN, i):
            tokens.append(Token("mask", MASK_TOKEN, MASKED, line, col))
            i += len(MASK_TOKEN)
            continue
        if ch == '"':
            j, buf = i + 1, []
            while True:
                if j >= n or text[j] == "\n":
                    raise EsaSyntaxError("unterminated string literal", line, col)
                c = text[j]
                if c == "\\":
                    if j + 1 >= n or text[j + 1] not in '"\\':
                        raise EsaSyntaxError("invalid escape in string literal", line, j - line_start + 1)
                    buf.append(text[j + 1])
                    j += 2
                    continue
                if c == '"':
                    break
                buf.append(c)
                j += 1
            tokens.append(Token("string", text[i : j + 1], "".join(buf), line, col))
            i = j + 1
            continue
        if ch.isdigit() or (ch == "-" and i + 1 < n and text[i + 1].isdigit()):
            m = _NUMBER_RE.match(text, i)
            lit = m.group(0)
            value: Value = Decimal(lit) if "." in lit else int(lit)
            tokens.append(Token("number", lit, value, line, col))
            i = m.end()
            continue
        m = _IDENT_RE.match(text, i)
        if m:
            tokens.append(Token("ident", m.group(0), m.group(0), line, col))
            i = m.end()
            continue
        if ch in _UNICODE_OPS:
            tokens.append(Token("op", ch, _UNICODE_OPS[ch], line, col))
            i += 1
            continue
        if ch in _OP_CHARS:
            j = i
            while j < n and text[j] in _OP_CHARS:
                j += 1
            op = text[i:j]
            if op not in OPS:
                raise EsaSyntaxError(f"unknown operator {op!r}", line, col)
            tokens.append(Token("op", op, op, line, col))
            i = j
            continue
        if ch in _PUNCT:
            tokens.append(Token("punct", ch, ch, line, col))
            i += 1
            continue
        raise EsaSyntaxError(f"unexpected character {ch!r}", line, col)
    col = n - line_start + 1
    tokens.append(Token("eof", "", None, line, col))
    return tokens


class Parser:
    """Recursive-descent parser over a token list; keywords are matched case-insensitively."""

    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.pos = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def peek(self, offset: int = 1) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def advance(self) -> Token:
        t = self.tokens[self.pos]
        if t.kind != "eof":
            self.pos += 1
        return t

    def error(self, message: str, tok: Token | None = None) -> EsaSyntaxError:
        t = tok or self.tok
        return EsaSyntaxError(message, t.line, t.column)

    def at_keyword(self, *words: str) -> bool:
        t = self.tok
        return t.kind == "ident" and t.text.lower() in words

    def at_punct(self, ch: str) -> bool:
        return self.tok.kind == "punct" and self.tok.text == ch

    def expect_punct(self, ch: str) -> Token:
        if not self.at_punct(ch):
            raise self.error(f"expected {ch!r}, found {self.describe()}")
        return self.advance()

    def expect_keyword(self, word: str) -> Token:
        if not self.at_keyword(word):
            raise self.error(f"expected {word!r}, found {self.describe()}")
        return self.advance()

    def expect_ident(self, what: str = "identifier") -> str:
        if self.tok.kind != "ident" or self.tok.text.lower() in ("and", "or", "true", "false", "null"):
            raise self.error(f"expected {what}, found {self.describe()}")
        return self.advance().text

    def expect_eof(self) -> None:
        if self.tok.kind != "eof":
            raise self.error(f"unexpected {self.describe()}")

    def describe(self) -> str:
        t = self.tok
        return "end of input" if t.kind == "eof" else repr(t.text)

    # predicates

    def parse_predicate(self) -> Predicate:
        items = [self.parse_conjunction()]
        while self.at_keyword("or"):
            self.advance()
            items.append(self.parse_conjunction())
        return items[0] if len(items) == 1 else Or(tuple(items))

    def parse_conjunction(self) -> Predicate:
        items = [self.parse_primary()]
        while self.at_keyword("and"):
            self.advance()
            items.append(self.parse_primary())
        return items[0] if len(items) == 1 else And(tuple(items))

    def parse_primary(self) -> Predicate:
        if self.at_punct("("):
            self.advance()
            p = self.parse_predicate()
            self.expect_punct(")")
            return p
        if self.at_keyword("true"):
            self.advance()
            return TRUE
        if self.at_keyword("false"):
            self.advance()
            return FALSE
        start = self.tok
        field = self.expect_ident("field name or predicate")
        if self.tok.kind != "op":
            raise self.error(f"expected comparison operator, found {self.describe()}")
        op = self.advance().value
        value = self.parse_literal()
        try:
            return Atom(field, op, value)
        except PredicateError as exc:
            raise self.error(str(exc), start) from None

    def parse_literal(self, allow_mask: bool = False) -> Value:
        t = self.tok
        if t.kind in ("string", "number"):
            self.advance()
            return t.value
        if t.kind == "mask" and allow_mask:
            self.advance()
            return MASKED
        if t.kind == "ident":
            word = t.text.lower()
            if word in ("and", "or"):
                raise self.error(f"expected literal, found {self.describe()}")
            self.advance()
            if word == "true":
                return True
            if word == "false":
                return False
            if word == "null":
                return None
            return t.text  # bare words are string values, e.g. purpose = research
        raise self.error(f"expected literal, found {self.describe()}")


def parse_predicate(text: str) -> Predicate:
    p = Parser(text)
    pred = p.parse_predicate()
    p.expect_eof()
    return pred


def render_value(v: object) -> str:
    if v is MASKED:
        return MASK_TOKEN
    if v is None:
        return "null"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, Decimal):
        s = format(v, "f")
        return s if "." in s else s + ".0"
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    raise TypeError(f"cannot render {v!r}")


def render_predicate(p: Predicate) -> str:
    if isinstance(p, Const):
        return "true" if p.value else "false"
    if isinstance(p, Atom):
        return f"{p.field} {p.op} {render_value(p.value)}"
    if isinstance(p, And):
        # a nested And or any Or keeps its parentheses so the tree survives a reparse
        return " and ".join(
            f"({render_predicate(q)})" if isinstance(q, (And, Or)) else render_predicate(q) for q in p.items
        )
    if isinstance(p, Or):
        return " or ".join(f"({render_predicate(q)})" if isinstance(q, Or) else render_predicate(q) for q in p.items)
    raise TypeError(f"not a predicate: {p!r}")
