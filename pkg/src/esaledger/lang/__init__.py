from .agreement import (
    CONTEXT_FIELDS,
    Esa,
    EsaError,
    Kind,
    field_order,
    hash_esa,
    parse_esa,
    render_esa,
    render_natural_language,
)
from .predicate import (
    FALSE,
    TRUE,
    And,
    Atom,
    Const,
    MissingFieldError,
    Or,
    Predicate,
    PredicateError,
    TypeMismatchError,
    Value,
    conj,
    disj,
    eval_predicate,
    fields_of,
    negate,
)
from .syntax import MASK_TOKEN, MASKED, EsaSyntaxError, parse_predicate, render_predicate, render_value

__all__ = [
    "And",
    "Atom",
    "CONTEXT_FIELDS",
    "Const",
    "Esa",
    "EsaError",
    "EsaSyntaxError",
    "FALSE",
    "Kind",
    "MASKED",
    "MASK_TOKEN",
    "MissingFieldError",
    "Or",
    "Predicate",
    "PredicateError",
    "TRUE",
    "TypeMismatchError",
    "Value",
    "conj",
    "disj",
    "eval_predicate",
    "field_order",
    "fields_of",
    "hash_esa",
    "negate",
    "parse_esa",
    "parse_predicate",
    "render_esa",
    "render_natural_language",
    "render_predicate",
    "render_value",
]
