"""Tour of the policy definition language layer.

Builds a policy document by hand, checks it, normalizes a sloppy variant,
and shows the canonical byte serialization round trip.
"""

from cbcms.labels import label_vocabulary
from cbcms.policy import (
    ActionSet,
    Condition,
    LegalBasis,
    Policy,
    adjust_policy,
    canonical_bytes,
    parse_policy,
    validate_policy,
)

# The global label space: 24 GDPR + 12 CCPA + 15 PIPL action labels.
for jurisdiction in ("GDPR", "CCPA", "PIPL"):
    vocab = label_vocabulary(jurisdiction)
    print(f"{jurisdiction}: {len(vocab)} labels, e.g. {vocab[0]!r}, {vocab[-1]!r}")

# A security-measures policy for cross-border processing of personal data.
policy = Policy(
    policy_name="GDPR Article 32(1)",
    policy_id="11111111-2222-3333-4444-555555555555",
    condition=Condition(
        roles={"controller", "processor"},
        data_categories={"personal_data"},
        legal_basis=LegalBasis(law="GDPR", clause="Article 32(1)"),
        jurisdiction_scope="both",
    ),
    action=ActionSet(
        security_measures={
            "End-to-end Encryption",
            "Encrypt In Storage",
            "Pseudonymisation",
            "Access Control",
        },
    ),
)
report = validate_policy(policy)
print(f"\nvalid: {report.valid}")

# Validation is total: a broken policy yields a report listing every issue.
broken = Policy(
    policy_name="broken",
    policy_id="",
    condition=Condition(
        roles={"controller"},
        data_categories=set(),
        legal_basis=LegalBasis(law="GDPR"),
        jurisdiction_scope=None,
    ),
    action=ActionSet(security_measures={"Non-discrimination"}),  # a CCPA label
)
for issue in validate_policy(broken).issues:
    print(f"  {issue.path}: {issue.code}")

# adjust_policy fixes what is mechanically fixable (casing, missing scope)
# and leaves the rest for a follow-up validate.
sloppy = Policy(
    policy_name="sloppy",
    policy_id="22222222-2222-4222-8222-222222222222",
    condition=Condition(
        roles={"CONTROLLER"},
        data_categories={"personal_data"},
        legal_basis=LegalBasis(law="GDPR"),
        jurisdiction_scope=None,
    ),
    action=ActionSet(security_measures={"access control", "ACCESS CONTROL"}),
)
fixed = adjust_policy(sloppy)
print(f"\nadjusted: scope={fixed.condition.jurisdiction_scope!r}, "
      f"measures={sorted(fixed.action.security_measures)}")
print(f"adjust is idempotent: {adjust_policy(fixed) == fixed}")

# Canonical bytes are deterministic (sorted keys and members, no
# whitespace), which makes them signable and hashable.
raw = canonical_bytes(policy)
print(f"\ncanonical bytes ({len(raw)} bytes): {raw[:80].decode()}...")
print(f"round trip holds: {parse_policy(raw) == policy}")
