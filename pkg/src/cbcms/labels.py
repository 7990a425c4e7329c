"""Label vocabulary shared by every component.

The global label space is an ordered list of 51 (jurisdiction, category,
name) triples: 24 GDPR labels, then 12 CCPA, then 15 PIPL.  The order is
fixed so that the 51-bit multi-label encoding is reproducible across runs
and across model versions.  Label identity is (jurisdiction, name):
identically named labels under different laws (e.g. "Portability") are
distinct indices.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

GDPR = "GDPR"
CCPA = "CCPA"
PIPL = "PIPL"
JURISDICTIONS = (GDPR, CCPA, PIPL)

SECURITY_MEASURES = "security_measures"
DATA_SUBJECT_RIGHTS = "data_subject_rights"
COMPLIANCE_REQUIREMENTS = "compliance_requirements"
SUPERVISION_MANAGEMENT = "supervision_management"
ACTION_CATEGORIES = (
    SECURITY_MEASURES,
    DATA_SUBJECT_RIGHTS,
    COMPLIANCE_REQUIREMENTS,
    SUPERVISION_MANAGEMENT,
)

ROLES = ("controller", "processor", "owner", "user")
SCOPES = ("source", "target", "both")

DATA_CATEGORIES = (
    "personal_data",
    "sensitive_personal_data",
    "health_data",
    "financial_data",
    "biometric_data",
    "location_data",
    "behavioral_data",
    "anonymized_data",
)
SENSITIVITY_LEVELS = (0, 1, 2, 3)  # non / low / medium / high


@dataclass(frozen=True)
class Label:
    jurisdiction: str
    category: str
    name: str


_VOCABULARY: tuple[Label, ...] = tuple(
    Label(j, c, n)
    for j, c, n in [
        # GDPR (24)
        (GDPR, SECURITY_MEASURES, "End-to-end Encryption"),
        (GDPR, SECURITY_MEASURES, "Encrypt In Storage"),
        (GDPR, SECURITY_MEASURES, "Pseudonymisation"),
        (GDPR, SECURITY_MEASURES, "Anonymization"),
        (GDPR, SECURITY_MEASURES, "Access Control"),
        (GDPR, SECURITY_MEASURES, "Availability and Recovery"),
        (GDPR, SECURITY_MEASURES, "Transparency in Processing"),
        (GDPR, SECURITY_MEASURES, "Regular Testing and Evaluation"),
        (GDPR, DATA_SUBJECT_RIGHTS, "Access"),
        (GDPR, DATA_SUBJECT_RIGHTS, "Rectification and Erasure"),
        (GDPR, DATA_SUBJECT_RIGHTS, "Portability"),
        (GDPR, DATA_SUBJECT_RIGHTS, "Restriction"),
        (GDPR, COMPLIANCE_REQUIREMENTS, "Decision Based on Adequacy"),
        (GDPR, COMPLIANCE_REQUIREMENTS, "Appropriate Safeguards"),
        (GDPR, COMPLIANCE_REQUIREMENTS, "Exemptions in Certain Conditions"),
        (GDPR, COMPLIANCE_REQUIREMENTS, "Lawfulness, Fairness and Transparency"),
        (GDPR, COMPLIANCE_REQUIREMENTS, "Purpose Limitation"),
        (GDPR, COMPLIANCE_REQUIREMENTS, "Data Minimization"),
        (GDPR, COMPLIANCE_REQUIREMENTS, "Accuracy"),
        (GDPR, COMPLIANCE_REQUIREMENTS, "Storage Limitation"),
        (GDPR, COMPLIANCE_REQUIREMENTS, "Integrity and Confidentiality"),
        (GDPR, COMPLIANCE_REQUIREMENTS, "Data Protection Officer"),
        (GDPR, SUPERVISION_MANAGEMENT, "Cooperation with Authorities"),
        (GDPR, SUPERVISION_MANAGEMENT, "Management and Notification"),
        # CCPA (12)
        (CCPA, DATA_SUBJECT_RIGHTS, "Access"),
        (CCPA, DATA_SUBJECT_RIGHTS, "Deletion"),
        (CCPA, DATA_SUBJECT_RIGHTS, "Correction"),
        (CCPA, DATA_SUBJECT_RIGHTS, "Portability"),
        (CCPA, DATA_SUBJECT_RIGHTS, "Non-discrimination"),
        (CCPA, DATA_SUBJECT_RIGHTS, "Right to Know"),
        (CCPA, COMPLIANCE_REQUIREMENTS, "Transparency and Responsibility"),
        (CCPA, COMPLIANCE_REQUIREMENTS, "Disclosure of Processing"),
        (CCPA, COMPLIANCE_REQUIREMENTS, "Data Minimization"),
        (CCPA, COMPLIANCE_REQUIREMENTS, "Processing Limitations"),
        (CCPA, SUPERVISION_MANAGEMENT, "Cooperation with Authorities"),
        (CCPA, SUPERVISION_MANAGEMENT, "Management and Notification"),
        # PIPL (15)
        (PIPL, SECURITY_MEASURES, "Data Encryption"),
        (PIPL, SECURITY_MEASURES, "Data De-identification"),
        (PIPL, SECURITY_MEASURES, "Data Anonymization"),
        (PIPL, DATA_SUBJECT_RIGHTS, "View and Copy"),
        (PIPL, DATA_SUBJECT_RIGHTS, "Rectification and Erasure"),
        (PIPL, DATA_SUBJECT_RIGHTS, "Portability"),
        (PIPL, DATA_SUBJECT_RIGHTS, "Right to Withdraw Consent"),
        (PIPL, COMPLIANCE_REQUIREMENTS, "National Security Assessment"),
        (PIPL, COMPLIANCE_REQUIREMENTS, "International Legal Requirements"),
        (PIPL, COMPLIANCE_REQUIREMENTS, "International Cooperation"),
        (PIPL, COMPLIANCE_REQUIREMENTS, "Internal Supervision"),
        (PIPL, COMPLIANCE_REQUIREMENTS, "Data Protection Manager"),
        (PIPL, COMPLIANCE_REQUIREMENTS, "Punishment for Illegal Acts"),
        (PIPL, SUPERVISION_MANAGEMENT, "Cooperation with Authorities"),
        (PIPL, SUPERVISION_MANAGEMENT, "Management and Notification"),
    ]
)

N_LABELS = len(_VOCABULARY)


class UnknownJurisdictionError(KeyError):
    pass


class UnknownLabelError(KeyError):
    pass


class LabelSpace:
    """The fixed ordered vocabulary plus index/mask helpers."""

    def __init__(self, vocabulary: tuple[Label, ...] = _VOCABULARY):
        self.labels = vocabulary
        self._index: dict[tuple[str, str], int] = {}
        self._by_jurisdiction: dict[str, list[Label]] = {j: [] for j in JURISDICTIONS}
        for i, lab in enumerate(vocabulary):
            key = (lab.jurisdiction, lab.name)
            if key in self._index:
                raise ValueError(f"duplicate label {key}")
            self._index[key] = i
            self._by_jurisdiction[lab.jurisdiction].append(lab)
        self._slices: dict[str, slice] = {}
        start = 0
        for j in JURISDICTIONS:
            n = len(self._by_jurisdiction[j])
            self._slices[j] = slice(start, start + n)
            start += n
        self._casefold_index = {
            (lab.jurisdiction, lab.name.casefold()): lab.name for lab in vocabulary
        }

    def __len__(self) -> int:
        return len(self.labels)

    def index(self, jurisdiction: str, name: str) -> int:
        try:
            return self._index[(jurisdiction, name)]
        except KeyError:
            raise UnknownLabelError(f"{jurisdiction}/{name}") from None

    def contains(self, jurisdiction: str, name: str) -> bool:
        return (jurisdiction, name) in self._index

    def label_at(self, index: int) -> Label:
        return self.labels[index]

    def category_of(self, jurisdiction: str, name: str) -> str:
        return self.labels[self.index(jurisdiction, name)].category

    def canonical_name(self, jurisdiction: str, name: str) -> str | None:
        """Case-insensitive lookup of the canonical label name, else None."""
        return self._casefold_index.get((jurisdiction, name.casefold()))

    def vocabulary(self, jurisdiction: str) -> tuple[str, ...]:
        if jurisdiction not in self._by_jurisdiction:
            raise UnknownJurisdictionError(jurisdiction)
        return tuple(lab.name for lab in self._by_jurisdiction[jurisdiction])

    def block(self, jurisdiction: str) -> slice:
        if jurisdiction not in self._slices:
            raise UnknownJurisdictionError(jurisdiction)
        return self._slices[jurisdiction]

    def involvement_mask(self, source: str, target: str) -> np.ndarray:
        """0/1 vector with ones exactly on the blocks of the involved pair."""
        mask = np.zeros(len(self.labels), dtype=np.uint8)
        mask[self.block(source)] = 1
        mask[self.block(target)] = 1
        return mask

    def version(self) -> str:
        """Stable digest of the ordered vocabulary, used to pin models to it."""
        listing = "\n".join(f"{l.jurisdiction}\t{l.category}\t{l.name}" for l in self.labels)
        return hashlib.sha256(listing.encode("utf-8")).hexdigest()[:16]


LABEL_SPACE = LabelSpace()


def label_vocabulary(jurisdiction: str) -> tuple[str, ...]:
    """Ordered label names of one jurisdiction (GDPR 24 / CCPA 12 / PIPL 15)."""
    return LABEL_SPACE.vocabulary(jurisdiction)
