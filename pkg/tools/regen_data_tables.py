#!/usr/bin/env python3
"""Regenerate the shipped default rule table and baseline tables.

Run from the repository root after editing the ladders below:

    python tools/regen_data_tables.py

The JSON files under src/cbcms/data/ are the editable source of truth for
the package; this script only exists so the 192-key rule table does not
have to be maintained by hand.
"""

import json
from pathlib import Path

DATA_DIR = Path(__file__).resolve().parent.parent / "src" / "cbcms" / "data"

CATEGORIES = [
    "personal_data", "sensitive_personal_data", "health_data", "financial_data",
    "biometric_data", "location_data", "behavioral_data", "anonymized_data",
]
HIGH_TIER = {"sensitive_personal_data", "health_data", "biometric_data"}


def cumulative(ladder: dict) -> dict:
    acc: list[str] = []
    out = {}
    for level in range(4):
        acc = acc + [x for x in ladder.get(level, []) if x not in acc]
        out[level] = list(acc)
    return out


def merge(base: dict, extra: dict) -> dict:
    out = {k: list(v) for k, v in base.items()}
    for level, labels in extra.items():
        out.setdefault(level, [])
        out[level] = out[level] + [x for x in labels if x not in out[level]]
    return out


def expand(jur: str, role: str, per_category: dict, table: dict):
    for category, ladder in per_category.items():
        for level, labels in cumulative(ladder).items():
            table[f"{jur}/{role}/{category}/{level}"] = sorted(labels)


def gdpr_source() -> dict:
    base = {
        0: ["Encrypt In Storage", "Lawfulness, Fairness and Transparency"],
        1: ["End-to-end Encryption", "Access Control", "Access", "Rectification and Erasure",
            "Purpose Limitation", "Data Minimization"],
        2: ["Regular Testing and Evaluation", "Portability", "Storage Limitation",
            "Integrity and Confidentiality", "Appropriate Safeguards", "Cooperation with Authorities"],
        3: ["Pseudonymisation", "Availability and Recovery", "Restriction",
            "Data Protection Officer", "Decision Based on Adequacy", "Management and Notification"],
    }
    per_category = {}
    for category in CATEGORIES:
        ladder = base
        if category in HIGH_TIER:
            ladder = merge(ladder, {1: ["Pseudonymisation", "Integrity and Confidentiality"],
                                    2: ["Data Protection Officer", "Management and Notification"],
                                    3: ["Anonymization"]})
        if category == "financial_data":
            ladder = merge(ladder, {1: ["Regular Testing and Evaluation", "Accuracy"]})
        if category == "location_data":
            ladder = merge(ladder, {2: ["Transparency in Processing", "Exemptions in Certain Conditions"]})
        if category == "behavioral_data":
            ladder = merge(ladder, {1: ["Transparency in Processing"], 2: ["Restriction"]})
        if category == "anonymized_data":
            ladder = {
                1: ["Encrypt In Storage", "Lawfulness, Fairness and Transparency"],
                2: ["Access Control", "Purpose Limitation"],
                3: ["Regular Testing and Evaluation", "Data Minimization", "Cooperation with Authorities"],
            }
        per_category[category] = ladder
    return per_category


def gdpr_target() -> dict:
    base = {
        0: ["Encrypt In Storage", "Lawfulness, Fairness and Transparency"],
        1: ["Access Control", "Access", "Purpose Limitation"],
        2: ["End-to-end Encryption", "Rectification and Erasure", "Data Minimization",
            "Integrity and Confidentiality"],
        3: ["Regular Testing and Evaluation", "Availability and Recovery", "Portability", "Restriction",
            "Storage Limitation", "Appropriate Safeguards", "Cooperation with Authorities",
            "Management and Notification"],
    }
    per_category = {}
    for category in CATEGORIES:
        ladder = base
        if category in HIGH_TIER:
            ladder = merge(ladder, {2: ["Pseudonymisation"], 3: ["Data Protection Officer"]})
        if category == "financial_data":
            ladder = merge(ladder, {2: ["Accuracy"]})
        if category == "behavioral_data":
            ladder = merge(ladder, {2: ["Transparency in Processing"]})
        if category == "anonymized_data":
            ladder = {
                2: ["Encrypt In Storage", "Lawfulness, Fairness and Transparency"],
                3: ["Access Control", "Purpose Limitation"],
            }
        per_category[category] = ladder
    return per_category


def ccpa_source() -> dict:
    base = {
        0: ["Disclosure of Processing"],
        1: ["Access", "Right to Know", "Transparency and Responsibility"],
        2: ["Deletion", "Correction", "Data Minimization", "Cooperation with Authorities"],
        3: ["Portability", "Non-discrimination", "Processing Limitations", "Management and Notification"],
    }
    per_category = {}
    for category in CATEGORIES:
        ladder = base
        if category == "behavioral_data":
            ladder = merge(ladder, {2: ["Non-discrimination", "Processing Limitations"]})
        if category == "location_data":
            ladder = merge(ladder, {2: ["Processing Limitations"]})
        if category == "financial_data":
            ladder = merge(ladder, {2: ["Management and Notification"]})
        if category == "anonymized_data":
            ladder = {
                1: ["Disclosure of Processing"],
                2: ["Transparency and Responsibility"],
                3: ["Data Minimization", "Cooperation with Authorities"],
            }
        per_category[category] = ladder
    return per_category


def ccpa_target() -> dict:
    base = {
        0: ["Disclosure of Processing"],
        1: ["Right to Know", "Transparency and Responsibility"],
        2: ["Access", "Deletion", "Data Minimization", "Processing Limitations"],
        3: ["Correction", "Portability", "Non-discrimination", "Cooperation with Authorities",
            "Management and Notification"],
    }
    per_category = {}
    for category in CATEGORIES:
        ladder = base
        if category == "behavioral_data":
            ladder = merge(ladder, {1: ["Non-discrimination"]})
        if category == "anonymized_data":
            # disclosure duties apply from the lowest tier even for
            # de-identified data; rights and minimization kick in later
            ladder = {
                0: ["Disclosure of Processing"],
                3: ["Transparency and Responsibility"],
            }
        per_category[category] = ladder
    return per_category


def pipl_source() -> dict:
    base = {
        0: ["Data Encryption", "Internal Supervision"],
        1: ["Data De-identification", "View and Copy", "Data Protection Manager"],
        2: ["Rectification and Erasure", "National Security Assessment",
            "International Legal Requirements", "Cooperation with Authorities"],
        3: ["Data Anonymization", "Portability", "Right to Withdraw Consent",
            "International Cooperation", "Punishment for Illegal Acts", "Management and Notification"],
    }
    per_category = {}
    for category in CATEGORIES:
        ladder = base
        if category in HIGH_TIER:
            ladder = merge(ladder, {0: ["Data De-identification"], 1: ["National Security Assessment"]})
        if category == "behavioral_data":
            ladder = merge(ladder, {2: ["Right to Withdraw Consent"]})
        if category == "anonymized_data":
            ladder = {
                1: ["Data Encryption", "Internal Supervision"],
                3: ["Data De-identification", "International Legal Requirements"],
            }
        per_category[category] = ladder
    return per_category


def pipl_target() -> dict:
    base = {
        0: ["Data Encryption"],
        1: ["Internal Supervision"],
        2: ["Data De-identification", "View and Copy", "International Legal Requirements"],
        3: ["Data Anonymization", "Rectification and Erasure", "Portability", "Data Protection Manager",
            "Punishment for Illegal Acts", "Cooperation with Authorities", "Management and Notification"],
    }
    per_category = {}
    for category in CATEGORIES:
        ladder = base
        if category in HIGH_TIER:
            ladder = merge(ladder, {2: ["National Security Assessment"]})
        if category == "anonymized_data":
            ladder = {2: ["Data Encryption"], 3: ["Internal Supervision"]}
        per_category[category] = ladder
    return per_category


def build_rule_table() -> dict:
    table: dict = {}
    expand("GDPR", "source", gdpr_source(), table)
    expand("GDPR", "target", gdpr_target(), table)
    expand("CCPA", "source", ccpa_source(), table)
    expand("CCPA", "target", ccpa_target(), table)
    expand("PIPL", "source", pipl_source(), table)
    expand("PIPL", "target", pipl_target(), table)
    return dict(sorted(table.items()))


GDPR_DSR = ["Access", "Rectification and Erasure", "Portability", "Restriction"]
CCPA_DSR = ["Access", "Deletion", "Correction", "Portability", "Non-discrimination", "Right to Know"]
PIPL_DSR = ["View and Copy", "Rectification and Erasure", "Portability", "Right to Withdraw Consent"]
GDPR_CR = ["Decision Based on Adequacy", "Appropriate Safeguards", "Exemptions in Certain Conditions",
           "Lawfulness, Fairness and Transparency", "Purpose Limitation", "Data Minimization", "Accuracy",
           "Storage Limitation", "Integrity and Confidentiality", "Data Protection Officer"]
CCPA_CR = ["Transparency and Responsibility", "Disclosure of Processing", "Data Minimization",
           "Processing Limitations"]
PIPL_CR = ["National Security Assessment", "International Legal Requirements", "International Cooperation",
           "Internal Supervision", "Data Protection Manager", "Punishment for Illegal Acts"]
GDPR_SEC = ["End-to-end Encryption", "Encrypt In Storage", "Pseudonymisation", "Anonymization",
            "Access Control", "Availability and Recovery", "Transparency in Processing",
            "Regular Testing and Evaluation"]
PIPL_SEC = ["Data Encryption", "Data De-identification", "Data Anonymization"]
GDPR_SUP = ["Cooperation with Authorities", "Management and Notification"]
CCPA_SUP = GDPR_SUP
PIPL_SUP = GDPR_SUP


def q(jur, names):
    return [f"{jur}:{n}" for n in names]


def build_baseline_tiers() -> dict:
    # strict ladder: little activates below the top tiers, so the method
    # under-predicts at low sensitivity (recall suffers before precision)
    tier0 = (q("GDPR", ["Encrypt In Storage", "Lawfulness, Fairness and Transparency"])
             + q("CCPA", ["Disclosure of Processing"])
             + q("PIPL", ["Data Encryption", "Internal Supervision"]))
    tier1 = tier0 + (
        q("GDPR", ["End-to-end Encryption", "Access Control", "Access", "Rectification and Erasure",
                   "Purpose Limitation", "Data Minimization"])
        + q("CCPA", ["Right to Know", "Access", "Transparency and Responsibility"])
        + q("PIPL", ["Data De-identification", "View and Copy", "Data Protection Manager"]))
    tier2 = tier1 + (
        q("GDPR", ["Regular Testing and Evaluation", "Portability", "Storage Limitation",
                   "Integrity and Confidentiality", "Appropriate Safeguards",
                   "Cooperation with Authorities"])
        + q("CCPA", ["Deletion", "Correction", "Data Minimization", "Cooperation with Authorities"])
        + q("PIPL", ["Rectification and Erasure", "National Security Assessment",
                     "International Legal Requirements", "Cooperation with Authorities"]))
    tier3 = (q("GDPR", GDPR_SEC + GDPR_DSR + GDPR_CR + GDPR_SUP)
             + q("CCPA", CCPA_DSR + CCPA_CR + CCPA_SUP)
             + q("PIPL", PIPL_SEC + PIPL_DSR + PIPL_CR + PIPL_SUP))
    return {"0": sorted(set(tier0)), "1": sorted(set(tier1)), "2": sorted(set(tier2)), "3": sorted(set(tier3))}


def build_baseline_roles() -> dict:
    return {
        "GDPR/source": sorted(
            ["End-to-end Encryption", "Encrypt In Storage", "Pseudonymisation", "Access Control",
             "Regular Testing and Evaluation", "Availability and Recovery",
             "Access", "Rectification and Erasure", "Portability",
             "Lawfulness, Fairness and Transparency", "Purpose Limitation", "Data Minimization",
             "Storage Limitation", "Integrity and Confidentiality", "Appropriate Safeguards",
             "Decision Based on Adequacy", "Exemptions in Certain Conditions",
             "Cooperation with Authorities"]),
        "GDPR/target": sorted(
            ["Encrypt In Storage", "Access Control", "Transparency in Processing", "Anonymization",
             "Access", "Rectification and Erasure", "Restriction",
             "Lawfulness, Fairness and Transparency", "Purpose Limitation", "Data Minimization",
             "Integrity and Confidentiality", "Accuracy", "Data Protection Officer",
             "Cooperation with Authorities", "Management and Notification"]),
        "CCPA/source": sorted(
            ["Access", "Right to Know", "Deletion",
             "Disclosure of Processing", "Transparency and Responsibility", "Data Minimization",
             "Cooperation with Authorities"]),
        "CCPA/target": sorted(
            ["Right to Know", "Access", "Deletion", "Correction", "Portability", "Non-discrimination",
             "Disclosure of Processing", "Transparency and Responsibility", "Data Minimization",
             "Processing Limitations", "Cooperation with Authorities", "Management and Notification"]),
        "PIPL/source": sorted(
            ["Data Encryption", "Data De-identification", "Data Anonymization",
             "View and Copy", "Rectification and Erasure", "Portability",
             "Internal Supervision", "Data Protection Manager", "National Security Assessment",
             "International Legal Requirements", "International Cooperation",
             "Cooperation with Authorities"]),
        "PIPL/target": sorted(
            ["Data Encryption", "Data De-identification",
             "View and Copy", "Right to Withdraw Consent",
             "Internal Supervision", "International Legal Requirements", "Data Protection Manager",
             "Punishment for Illegal Acts", "Cooperation with Authorities",
             "Management and Notification"]),
    }


def main():
    (DATA_DIR / "rule_table.json").write_text(json.dumps(build_rule_table(), indent=1) + "\n")
    (DATA_DIR / "baseline_tiers.json").write_text(json.dumps(build_baseline_tiers(), indent=1) + "\n")
    (DATA_DIR / "baseline_roles.json").write_text(json.dumps(build_baseline_roles(), indent=1) + "\n")
    print(f"wrote tables to {DATA_DIR}")


if __name__ == "__main__":
    main()
