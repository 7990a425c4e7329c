"""Feature and label codecs between transfer scenarios and model vectors.

Feature layout (15 dims): one-hot data category (8) + sensitivity ordinal
(1) + one-hot source jurisdiction (3) + one-hot target jurisdiction (3).
Label vectors are the 51-bit encoding in global label-space order; bits of
jurisdictions outside the {source, target} pair are always zero
(involvement masking).
"""

from __future__ import annotations

import hashlib
import uuid

import numpy as np

from .dataset import Dataset, DatasetEntry
from .labels import (
    DATA_CATEGORIES,
    JURISDICTIONS,
    LABEL_SPACE,
    SENSITIVITY_LEVELS,
)
from .policy import ActionSet, Condition, LegalBasis, Policy

N_FEATURES = len(DATA_CATEGORIES) + 1 + len(JURISDICTIONS) * 2

_CATEGORY_INDEX = {c: i for i, c in enumerate(DATA_CATEGORIES)}
_JURISDICTION_INDEX = {j: i for i, j in enumerate(JURISDICTIONS)}

_SENS_POS = len(DATA_CATEGORIES)
_SOURCE_POS = _SENS_POS + 1
_TARGET_POS = _SOURCE_POS + len(JURISDICTIONS)

_POLICY_ID_NAMESPACE = uuid.UUID("6ba7b810-9dad-11d1-80b4-00c04fd430c8")


class EncodingError(ValueError):
    pass


class MaskingError(EncodingError):
    pass


UNKNOWN_CATEGORY = "UNKNOWN_CATEGORY"


def feature_schema_hash() -> str:
    desc = "|".join(
        ["cat8"] + list(DATA_CATEGORIES) + ["sens1", "src3", "tgt3"] + list(JURISDICTIONS)
    )
    return hashlib.sha256(desc.encode()).hexdigest()[:16]


def encode_query(category: str, sensitivity: int, source: str, target: str) -> np.ndarray:
    if category not in _CATEGORY_INDEX:
        raise EncodingError(f"{UNKNOWN_CATEGORY}: {category!r}")
    if sensitivity not in SENSITIVITY_LEVELS:
        raise EncodingError(f"sensitivity {sensitivity!r} out of range")
    for jur in (source, target):
        if jur not in _JURISDICTION_INDEX:
            raise EncodingError(f"unknown jurisdiction {jur!r}")
    fv = np.zeros(N_FEATURES, dtype=np.float64)
    fv[_CATEGORY_INDEX[category]] = 1.0
    fv[_SENS_POS] = float(sensitivity)
    fv[_SOURCE_POS + _JURISDICTION_INDEX[source]] = 1.0
    fv[_TARGET_POS + _JURISDICTION_INDEX[target]] = 1.0
    return fv


def encode_features(entry: DatasetEntry) -> np.ndarray:
    return encode_query(
        entry.data_category,
        entry.sensitivity_level,
        entry.source_jurisdiction,
        entry.target_jurisdiction,
    )


def decode_query(fv: np.ndarray) -> tuple[str, int, str, str]:
    """Invert encode_query; rejects vectors violating the one-hot layout."""
    fv = np.asarray(fv, dtype=np.float64)
    if fv.shape != (N_FEATURES,):
        raise EncodingError(f"expected {N_FEATURES}-dim feature vector")
    cat_block = fv[: len(DATA_CATEGORIES)]
    src_block = fv[_SOURCE_POS:_SOURCE_POS + len(JURISDICTIONS)]
    tgt_block = fv[_TARGET_POS:_TARGET_POS + len(JURISDICTIONS)]
    for block, what in [(cat_block, "category"), (src_block, "source"), (tgt_block, "target")]:
        if int((block == 1.0).sum()) != 1 or block.sum() != 1.0:
            raise EncodingError(f"{what} block is not one-hot")
    sensitivity = int(fv[_SENS_POS])
    if sensitivity not in SENSITIVITY_LEVELS or fv[_SENS_POS] != sensitivity:
        raise EncodingError("sensitivity slot out of range")
    return (
        DATA_CATEGORIES[int(np.argmax(cat_block))],
        sensitivity,
        JURISDICTIONS[int(np.argmax(src_block))],
        JURISDICTIONS[int(np.argmax(tgt_block))],
    )


def encode_dataset(dataset: Dataset) -> tuple[np.ndarray, np.ndarray]:
    if not dataset.entries:
        raise EncodingError("empty dataset")
    X = np.vstack([encode_features(e) for e in dataset.entries])
    Y = dataset.label_matrix()
    return X, Y


def encode_labels(policies: Policy | list[Policy], source: str, target: str) -> np.ndarray:
    """51-bit vector with bit i set iff label i is required by the policies.

    Labels must resolve within the involved jurisdictions; stipulation-based
    policies set the bit in every involved jurisdiction sharing the name.
    """
    if isinstance(policies, Policy):
        policies = [policies]
    involved = {source, target}
    for jur in involved:
        if jur not in _JURISDICTION_INDEX:
            raise EncodingError(f"unknown jurisdiction {jur!r}")
    vector = np.zeros(len(LABEL_SPACE), dtype=np.uint8)
    for policy in policies:
        law = policy.condition.legal_basis.law
        if law is not None and law not in involved:
            raise MaskingError(f"policy law {law!r} outside involved pair {sorted(involved)}")
        homes = (law,) if law is not None else tuple(sorted(involved))
        for labels in policy.action.by_category().values():
            for name in labels:
                hits = [j for j in homes if LABEL_SPACE.contains(j, name)]
                if not hits:
                    raise MaskingError(
                        f"label {name!r} does not resolve within {sorted(involved)}"
                    )
                for j in hits:
                    vector[LABEL_SPACE.index(j, name)] = 1
    return vector


def decode_labels(
    vector: np.ndarray,
    source: str,
    target: str,
    category: str = "personal_data",
    version: str = "",
) -> list[Policy]:
    """One compliance policy per involved jurisdiction from a 51-bit vector.

    Policy ids are deterministic in (version, query, jurisdiction) so that
    identical queries decode to identical documents.
    """
    vector = np.asarray(vector).astype(np.uint8).reshape(len(LABEL_SPACE))
    mask = LABEL_SPACE.involvement_mask(source, target)
    stray = vector & (1 - mask)
    if stray.any():
        offending = LABEL_SPACE.label_at(int(np.argmax(stray)))
        raise MaskingError(
            f"bit for {offending.jurisdiction}/{offending.name} set outside pair ({source}, {target})"
        )

    jurisdictions = [source] if source == target else [source, target]
    policies = []
    for jur in jurisdictions:
        block = LABEL_SPACE.block(jur)
        grouped: dict[str, set[str]] = {}
        for i in range(block.start, block.stop):
            if vector[i]:
                label = LABEL_SPACE.label_at(i)
                grouped.setdefault(label.category, set()).add(label.name)
        scope = "both" if source == target else ("source" if jur == source else "target")
        seed = f"{version}|{category}|{source}|{target}|{jur}|{''.join(map(str, vector))}"
        policies.append(
            Policy(
                policy_name=f"{jur} compliance policy ({scope})",
                policy_id=str(uuid.uuid5(_POLICY_ID_NAMESPACE, seed)),
                condition=Condition(
                    roles=frozenset({"controller", "processor"}),
                    data_categories=frozenset({category}),
                    legal_basis=LegalBasis(law=jur),
                    jurisdiction_scope=scope,
                ),
                action=ActionSet(**{cat: frozenset(v) for cat, v in grouped.items()}),
            )
        )
    return policies
