from .engine import (
    ComplianceContext,
    Database,
    QueryError,
    ResultSet,
    Schema,
    UnknownFieldError,
    UnknownTableError,
    WriteDecision,
    apply_deletion,
    apply_revocation,
    check_compliance,
    check_write_compliance,
    compliance_formula,
    execute,
    rewrite_select,
    rewrite_write,
    write_owner,
)
from .entail import FieldDomain, entails, satisfiable
from .query import Delete, Insert, Query, Select, Update, is_masked, mask_query, parse_query, render_query

__all__ = [
    "ComplianceContext",
    "Database",
    "Delete",
    "FieldDomain",
    "Insert",
    "Query",
    "QueryError",
    "ResultSet",
    "Schema",
    "Select",
    "UnknownFieldError",
    "UnknownTableError",
    "Update",
    "WriteDecision",
    "apply_deletion",
    "apply_revocation",
    "check_compliance",
    "check_write_compliance",
    "compliance_formula",
    "entails",
    "execute",
    "is_masked",
    "mask_query",
    "parse_query",
    "render_query",
    "rewrite_select",
    "rewrite_write",
    "satisfiable",
    "write_owner",
]
