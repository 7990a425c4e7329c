"""PDL data model: policies, validation, normalization, canonical serialization.

A policy pairs a Condition (who / where / what data / on which legal basis)
with an ActionSet (the measures required once the condition applies).  All
types are immutable; validation is total and returns a report instead of
raising, so mapping pipelines can run validate/adjust loops.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

from .labels import (
    ACTION_CATEGORIES,
    JURISDICTIONS,
    LABEL_SPACE,
    ROLES,
    SCOPES,
)

POLICY_FILE_SUFFIX = ".pdl.json"

# issue codes
MISSING_FIELD = "MISSING_FIELD"
UNKNOWN_ROLE = "UNKNOWN_ROLE"
UNKNOWN_SCOPE = "UNKNOWN_SCOPE"
UNKNOWN_JURISDICTION = "UNKNOWN_JURISDICTION"
LEGAL_BASIS_CONFLICT = "LEGAL_BASIS_CONFLICT"
FOREIGN_LABEL = "FOREIGN_LABEL"
WRONG_CATEGORY = "WRONG_CATEGORY"

# parse error codes
SYNTAX_ERROR = "SYNTAX_ERROR"
UNKNOWN_FIELD = "UNKNOWN_FIELD"
TYPE_MISMATCH = "TYPE_MISMATCH"


class PdlError(Exception):
    pass


class PdlParseError(PdlError):
    def __init__(self, code: str, message: str, line: int | None = None, column: int | None = None):
        self.code = code
        self.line = line
        self.column = column
        where = f" at line {line}, column {column}" if line is not None else ""
        super().__init__(f"{code}: {message}{where}")


class PdlValidationError(PdlError):
    def __init__(self, report: "ValidationReport"):
        self.report = report
        summary = "; ".join(f"{i.path}: {i.code}" for i in report.issues)
        super().__init__(f"invalid policy: {summary}")


@dataclass(frozen=True)
class Issue:
    path: str
    code: str
    message: str


@dataclass(frozen=True)
class ValidationReport:
    valid: bool
    issues: tuple[Issue, ...]

    @classmethod
    def from_issues(cls, issues: list[Issue]) -> "ValidationReport":
        return cls(valid=not issues, issues=tuple(issues))


@dataclass(frozen=True)
class LegalBasis:
    """Either an applicable law (with optional clause text) or an owner stipulation."""

    law: str | None = None
    clause: str | None = None
    owner_stipulation: str | None = None


@dataclass(frozen=True)
class Condition:
    roles: frozenset[str]
    data_categories: frozenset[str]
    legal_basis: LegalBasis
    jurisdiction_scope: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "roles", frozenset(self.roles))
        object.__setattr__(self, "data_categories", frozenset(self.data_categories))


@dataclass(frozen=True)
class ActionSet:
    security_measures: frozenset[str] = frozenset()
    data_subject_rights: frozenset[str] = frozenset()
    compliance_requirements: frozenset[str] = frozenset()
    supervision_management: frozenset[str] = frozenset()

    def __post_init__(self):
        for cat in ACTION_CATEGORIES:
            object.__setattr__(self, cat, frozenset(getattr(self, cat)))

    def by_category(self) -> dict[str, frozenset[str]]:
        return {cat: getattr(self, cat) for cat in ACTION_CATEGORIES}

    def is_empty(self) -> bool:
        return not any(getattr(self, cat) for cat in ACTION_CATEGORIES)


@dataclass(frozen=True)
class Policy:
    policy_name: str
    policy_id: str
    condition: Condition
    action: ActionSet


def _allowed_jurisdictions(basis: LegalBasis) -> tuple[str, ...]:
    # Owner stipulations may reference any jurisdiction's labels; a policy
    # grounded in one law is confined to that law's vocabulary.
    if basis.law is not None and basis.law in JURISDICTIONS:
        return (basis.law,)
    return JURISDICTIONS


def validate_policy(policy: Policy) -> ValidationReport:
    """Check every type invariant; the report lists all violations, not the first."""
    issues: list[Issue] = []

    if not isinstance(policy.policy_id, str) or not policy.policy_id:
        issues.append(Issue("policy_id", MISSING_FIELD, "policy_id must be a non-empty string"))
    if not isinstance(policy.policy_name, str):
        issues.append(Issue("policy_name", MISSING_FIELD, "policy_name must be a string"))

    cond = policy.condition
    if not cond.roles:
        issues.append(Issue("condition.roles", MISSING_FIELD, "at least one role is required"))
    for role in sorted(cond.roles):
        if role not in ROLES:
            issues.append(Issue("condition.roles", UNKNOWN_ROLE, f"unknown role {role!r}"))

    if not cond.data_categories:
        issues.append(
            Issue("condition.data_categories", MISSING_FIELD, "at least one data category is required")
        )
    for cat in sorted(cond.data_categories):
        if not isinstance(cat, str) or not cat:
            issues.append(
                Issue("condition.data_categories", MISSING_FIELD, "data category must be a non-empty string")
            )

    scope = cond.jurisdiction_scope
    if scope is None:
        issues.append(
            Issue("condition.jurisdiction_scope", MISSING_FIELD, "jurisdiction scope is absent")
        )
    elif scope not in SCOPES:
        issues.append(
            Issue("condition.jurisdiction_scope", UNKNOWN_SCOPE, f"unknown scope {scope!r}")
        )

    basis = cond.legal_basis
    has_law = basis.law is not None
    has_stip = basis.owner_stipulation is not None
    if has_law == has_stip:
        issues.append(
            Issue(
                "condition.legal_basis",
                LEGAL_BASIS_CONFLICT,
                "exactly one of applicable law / owner stipulation must be populated",
            )
        )
    if has_law and basis.law not in JURISDICTIONS:
        issues.append(
            Issue("condition.legal_basis.law", UNKNOWN_JURISDICTION, f"unknown law {basis.law!r}")
        )
    if has_stip and not basis.owner_stipulation:
        issues.append(
            Issue("condition.legal_basis.owner_stipulation", MISSING_FIELD, "stipulation text is empty")
        )
    if basis.clause is not None and not has_law:
        issues.append(
            Issue("condition.legal_basis.clause", LEGAL_BASIS_CONFLICT, "clause text requires a law")
        )

    allowed = _allowed_jurisdictions(basis)
    for category, labels in policy.action.by_category().items():
        for name in sorted(labels):
            homes = [j for j in allowed if LABEL_SPACE.contains(j, name)]
            if not homes:
                issues.append(
                    Issue(
                        f"action.{category}",
                        FOREIGN_LABEL,
                        f"label {name!r} is not in the vocabulary of {'/'.join(allowed)}",
                    )
                )
            elif not any(LABEL_SPACE.category_of(j, name) == category for j in homes):
                issues.append(
                    Issue(
                        f"action.{category}",
                        WRONG_CATEGORY,
                        f"label {name!r} does not belong to category {category!r}",
                    )
                )

    return ValidationReport.from_issues(issues)


def adjust_policy(policy: Policy) -> Policy:
    """Normalize a policy: canonical-case labels, default the jurisdiction scope.

    Idempotent.  Unfixable issues (foreign labels, missing roles, ...) are left
    in place for a follow-up validate_policy to report.
    """
    cond = policy.condition
    scope = cond.jurisdiction_scope if cond.jurisdiction_scope is not None else "both"
    if isinstance(scope, str):
        scope = scope.lower()
    roles = frozenset(r.lower() if isinstance(r, str) else r for r in cond.roles)

    allowed = _allowed_jurisdictions(cond.legal_basis)

    def canonicalize(category: str, labels: frozenset[str]) -> frozenset[str]:
        fixed = set()
        for name in labels:
            canonical = None
            for j in allowed:
                cand = LABEL_SPACE.canonical_name(j, name)
                if cand is not None and LABEL_SPACE.category_of(j, cand) == category:
                    canonical = cand
                    break
            fixed.add(canonical if canonical is not None else name)
        return frozenset(fixed)

    action = ActionSet(
        **{cat: canonicalize(cat, labels) for cat, labels in policy.action.by_category().items()}
    )
    condition = replace(cond, roles=roles, jurisdiction_scope=scope)
    return replace(policy, condition=condition, action=action)


def policy_to_dict(policy: Policy) -> dict:
    basis = policy.condition.legal_basis
    if basis.owner_stipulation is not None and basis.law is None:
        basis_doc: dict = {"owner_stipulation": basis.owner_stipulation}
    else:
        basis_doc = {"law": basis.law}
        if basis.clause is not None:
            basis_doc["clause"] = basis.clause
    doc = {
        "policy_name": policy.policy_name,
        "policy_id": policy.policy_id,
        "condition": {
            "roles": sorted(policy.condition.roles),
            "jurisdiction_scope": policy.condition.jurisdiction_scope,
            "data_categories": sorted(policy.condition.data_categories),
            "legal_basis": basis_doc,
        },
        "action": {cat: sorted(labels) for cat, labels in policy.action.by_category().items()},
    }
    return doc


def canonical_bytes(policy: Policy) -> bytes:
    """Deterministic serialization: sorted keys and set members, no whitespace.

    Equal policies produce equal bytes.  Invalid policies are rejected.
    """
    report = validate_policy(policy)
    if not report.valid:
        raise PdlValidationError(report)
    return json.dumps(
        policy_to_dict(policy), sort_keys=True, separators=(",", ":"), ensure_ascii=False
    ).encode("utf-8")


_TOP_KEYS = {"policy_name", "policy_id", "condition", "action"}
_CONDITION_KEYS = {"roles", "jurisdiction_scope", "data_categories", "legal_basis"}
_BASIS_KEYS = {"law", "clause", "owner_stipulation"}


def _expect(value, kind, path: str):
    if not isinstance(value, kind):
        raise PdlParseError(TYPE_MISMATCH, f"{path} has wrong type {type(value).__name__}")
    return value


def _string_list(value, path: str) -> list[str]:
    items = _expect(value, list, path)
    for item in items:
        _expect(item, str, f"{path}[]")
    return items


def policy_from_dict(doc: dict) -> Policy:
    _expect(doc, dict, "document")
    unknown = set(doc) - _TOP_KEYS
    if unknown:
        raise PdlParseError(UNKNOWN_FIELD, f"unknown top-level field {sorted(unknown)[0]!r}")
    missing = _TOP_KEYS - set(doc)
    if missing:
        raise PdlParseError(TYPE_MISMATCH, f"missing required field {sorted(missing)[0]!r}")

    cond_doc = _expect(doc["condition"], dict, "condition")
    unknown = set(cond_doc) - _CONDITION_KEYS
    if unknown:
        raise PdlParseError(UNKNOWN_FIELD, f"unknown condition field {sorted(unknown)[0]!r}")

    basis_doc = _expect(cond_doc.get("legal_basis", {}), dict, "condition.legal_basis")
    unknown = set(basis_doc) - _BASIS_KEYS
    if unknown:
        raise PdlParseError(UNKNOWN_FIELD, f"unknown legal_basis field {sorted(unknown)[0]!r}")
    law = basis_doc.get("law")
    clause = basis_doc.get("clause")
    stipulation = basis_doc.get("owner_stipulation")
    for name, value in (("law", law), ("clause", clause), ("owner_stipulation", stipulation)):
        if value is not None:
            _expect(value, str, f"condition.legal_basis.{name}")

    scope = cond_doc.get("jurisdiction_scope")
    if scope is not None:
        _expect(scope, str, "condition.jurisdiction_scope")

    condition = Condition(
        roles=frozenset(_string_list(cond_doc.get("roles", []), "condition.roles")),
        data_categories=frozenset(
            _string_list(cond_doc.get("data_categories", []), "condition.data_categories")
        ),
        legal_basis=LegalBasis(law=law, clause=clause, owner_stipulation=stipulation),
        jurisdiction_scope=scope,
    )

    action_doc = _expect(doc["action"], dict, "action")
    unknown = set(action_doc) - set(ACTION_CATEGORIES)
    if unknown:
        raise PdlParseError(UNKNOWN_FIELD, f"unknown action field {sorted(unknown)[0]!r}")
    action = ActionSet(
        **{
            cat: frozenset(_string_list(action_doc.get(cat, []), f"action.{cat}"))
            for cat in ACTION_CATEGORIES
        }
    )

    return Policy(
        policy_name=_expect(doc["policy_name"], str, "policy_name"),
        policy_id=_expect(doc["policy_id"], str, "policy_id"),
        condition=condition,
        action=action,
    )


def parse_policy(data: bytes | str) -> Policy:
    """Parse an on-disk PDL document; inverse of canonical_bytes on valid policies."""
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise PdlParseError(SYNTAX_ERROR, exc.msg, line=exc.lineno, column=exc.colno) from exc
    return policy_from_dict(doc)


def save_policy(policy: Policy, path: str | Path) -> Path:
    path = Path(path)
    path.write_bytes(canonical_bytes(policy))
    return path


def load_policy(path: str | Path) -> Policy:
    return parse_policy(Path(path).read_bytes())
