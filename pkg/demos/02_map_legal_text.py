"""Mapping legal prose into policy documents.

Runs the deterministic pipeline (tokenize, lemmatize, stop-word removal,
lexicon NER, relation extraction, field mapping) on the GDPR Art.32(1)
security clause and prints every intermediate product.
"""

from importlib import resources

from cbcms.policy import policy_to_dict
from cbcms.textmap import analyze

text = resources.files("cbcms.data").joinpath("fixtures/gdpr_art32_1.txt").read_text()
print(text[:190] + "...\n")

result = analyze(text)

print(f"cleaned tokens: {len(result.stream)}")

# Recognized entities, grouped by type.
by_type: dict[str, list[str]] = {}
for entity in result.entities:
    by_type.setdefault(entity.entity_type, []).append(entity.surface)
for entity_type, surfaces in by_type.items():
    unique = sorted(set(surfaces))
    print(f"{entity_type:>13}: {', '.join(unique)}")

# Coordinated action groups with their resolved modifiers.
print("\nrelations:")
for relation in result.relations:
    group = ", ".join(e.surface for e in relation.action_group)
    print(f"  [{group}]  ->  {relation.modifier}")

# The mapped, validated policy.
policy = result.policies[0]
print(f"\npolicy: {policy.policy_name}")
doc = policy_to_dict(policy)
for category, labels in doc["action"].items():
    if labels:
        print(f"  {category}: {labels}")
print(f"condition: roles={doc['condition']['roles']} "
      f"scope={doc['condition']['jurisdiction_scope']} "
      f"basis={doc['condition']['legal_basis']}")

# The same pipeline handles other regulations through the same lexicon.
other = analyze(
    "Under PIPL the processor shall apply encryption and pseudonymisation "
    "to personal information before any transfer."
)
pipl_policy = other.policies[0]
print(f"\nPIPL example -> security_measures = "
      f"{sorted(pipl_policy.action.security_measures)}")
