"""Owner policies, conflict resolution, signatures, and the audit chain.

Walks the registry flow: register identities and metadata, let the owner
disable a label the law requires, watch compliance precedence resolve the
conflict, sign the outcome, and demonstrate that the audit chain catches
tampering.
"""

import numpy as np

from cbcms.labels import LABEL_SPACE
from cbcms.policy import ActionSet, Condition, LegalBasis, Policy
from cbcms.registry import (
    Registry,
    detect_conflicts,
    generate_keypair,
    new_identifier,
    sign_policy,
    verify_signature,
)

registry = Registry()  # in-memory; pass a directory for file persistence

# Identifier management: users register with their public keys.
owner_private, owner_public = generate_keypair()
owner_id = registry.register_user("owner", owner_public)
print(f"owner registered: {owner_id}")

data_id = registry.register_metadata(owner_id, "behavioral_data", 2, "clickstream archive")
print(f"metadata registered: {data_id}")

# The owner's policy: requires end-to-end encryption, but explicitly marks
# GDPR Data Minimization as not required.
owner_policy = Policy(
    policy_name="owner preferences",
    policy_id=new_identifier(),
    condition=Condition(
        roles={"owner"},
        data_categories={"behavioral_data"},
        legal_basis=LegalBasis(owner_stipulation="internal analytics charter"),
        jurisdiction_scope="both",
    ),
    action=ActionSet(security_measures={"End-to-end Encryption"}),
)
registry.register_owner_policy(
    owner_id, data_id, owner_policy, not_required=[("GDPR", "Data Minimization")]
)

# Compliance requires data minimization for this scenario.
compliance = np.zeros(len(LABEL_SPACE), dtype=np.uint8)
for name in ("Data Minimization", "Encrypt In Storage", "Purpose Limitation"):
    compliance[LABEL_SPACE.index("GDPR", name)] = 1

stance = registry.owner_stance_for(data_id)
report = detect_conflicts(stance, compliance)
print(f"\nconflicts: {len(report.conflicts)}")
for conflict in report.conflicts:
    label = LABEL_SPACE.label_at(conflict.label_index)
    print(f"  owner says not required, compliance requires: {label.jurisdiction}/{label.name}")
merged_on = [LABEL_SPACE.label_at(i).name for i in np.nonzero(report.merged)[0]]
print(f"merged vector keeps compliance plus stricter owner choices: {sorted(merged_on)}")

# Digital confirmation: detached signature over canonical policy bytes.
signature = sign_policy(owner_private, owner_policy)
print(f"\nsignature verifies: {verify_signature(owner_public, owner_policy, signature)}")
_, wrong_public = generate_keypair()
print(f"wrong key rejected: {not verify_signature(wrong_public, owner_policy, signature)}")

# Every mutation appended one audit record; the chain verifies end to end.
ok, bad = registry.verify_audit()
print(f"\naudit chain: {len(registry.audit)} records, verify -> {ok}")

# Tamper with one stored record and the chain pinpoints it.
victim = registry.audit.records[1]
object.__setattr__(victim, "payload_hash", "00" * 32)
ok, bad = registry.verify_audit()
print(f"after tampering with record 1: verify -> {ok}, first bad index = {bad}")
