"""Fixed rule-based reference method.

Two editable tables drive it: a sensitivity tier table (level -> activation
vector, nested so higher levels activate supersets) and a jurisdiction role
table ((jurisdiction, transfer role) -> activation vector over that
jurisdiction's own block).  A prediction starts all-zero, takes the tier
vector for the entry's sensitivity and the OR of the two role vectors for
its pair, and keeps exactly the bits active in both (element-wise AND).
The tables are a fixed reference, deliberately coarser than the dataset
oracle; they are not tuned."""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .dataset import Dataset, DatasetEntry
from .labels import ACTION_CATEGORIES, JURISDICTIONS, LABEL_SPACE, SENSITIVITY_LEVELS


class BaselineError(ValueError):
    pass


def _vector_from_qualified(names: list[str], context: str) -> np.ndarray:
    vector = np.zeros(len(LABEL_SPACE), dtype=np.uint8)
    for qualified in names:
        jur, _, name = qualified.partition(":")
        if jur not in JURISDICTIONS or not LABEL_SPACE.contains(jur, name):
            raise BaselineError(f"{context}: unknown label {qualified!r}")
        vector[LABEL_SPACE.index(jur, name)] = 1
    return vector


@dataclass(frozen=True)
class TierTable:
    """sensitivity level -> 51-bit activation vector, nested by level."""

    vectors: tuple[np.ndarray, ...]

    @classmethod
    def from_config(cls, config: dict[str, list[str]]) -> "TierTable":
        vectors = []
        for level in SENSITIVITY_LEVELS:
            key = str(level)
            if key not in config:
                raise BaselineError(f"tier table missing level {key!r}")
            vectors.append(_vector_from_qualified(config[key], f"tier {key}"))
        for level in SENSITIVITY_LEVELS[:-1]:
            if (vectors[level] & ~vectors[level + 1]).any():
                raise BaselineError(f"tier {level} not contained in tier {level + 1}")
        top = vectors[-1]
        for category in ACTION_CATEGORIES:
            idx = [i for i, lab in enumerate(LABEL_SPACE.labels) if lab.category == category]
            if not top[idx].any():
                raise BaselineError(f"top tier activates nothing in {category}")
        return cls(tuple(v for v in vectors))

    def vector(self, level: int) -> np.ndarray:
        if level not in SENSITIVITY_LEVELS:
            raise BaselineError(f"sensitivity level {level!r} out of range")
        return self.vectors[level].copy()


@dataclass(frozen=True)
class RoleTable:
    """(jurisdiction, source|target) -> activation vector over own block."""

    vectors: dict[tuple[str, str], np.ndarray]

    @classmethod
    def from_config(cls, config: dict[str, list[str]]) -> "RoleTable":
        vectors: dict[tuple[str, str], np.ndarray] = {}
        for jur in JURISDICTIONS:
            for role in ("source", "target"):
                key = f"{jur}/{role}"
                if key not in config:
                    raise BaselineError(f"role table missing key {key!r}")
                vector = _vector_from_qualified(
                    [f"{jur}:{name}" for name in config[key]], f"role {key}"
                )
                block = np.zeros(len(LABEL_SPACE), dtype=np.uint8)
                block[LABEL_SPACE.block(jur)] = 1
                if (vector & ~block).any():
                    raise BaselineError(f"role {key!r} sets bits outside its own block")
                vectors[(jur, role)] = vector
        return cls(vectors)

    def vector(self, jurisdiction: str, role: str) -> np.ndarray:
        try:
            return self.vectors[(jurisdiction, role)].copy()
        except KeyError:
            raise BaselineError(f"unknown jurisdiction/role ({jurisdiction}, {role})") from None


@dataclass(frozen=True)
class RuleBasedModel:
    tiers: TierTable
    roles: RoleTable

    def sensitivity_policy_set(self, level: int) -> np.ndarray:
        return self.tiers.vector(level)

    def jurisdiction_policy_set(self, source: str, target: str) -> np.ndarray:
        return self.roles.vector(source, "source") | self.roles.vector(target, "target")

    def predict_entry(self, entry: DatasetEntry) -> np.ndarray:
        return self.predict(
            entry.sensitivity_level, entry.source_jurisdiction, entry.target_jurisdiction
        )

    def predict(self, sensitivity: int, source: str, target: str) -> np.ndarray:
        by_sensitivity = self.sensitivity_policy_set(sensitivity)
        by_jurisdiction = self.jurisdiction_policy_set(source, target)
        return by_sensitivity & by_jurisdiction

    def predict_dataset(self, dataset: Dataset) -> np.ndarray:
        return np.vstack([self.predict_entry(e) for e in dataset.entries])


def load_rule_based_model(
    tiers_path: str | Path | None = None, roles_path: str | Path | None = None
) -> RuleBasedModel:
    if tiers_path is None:
        tiers_doc = json.loads(
            resources.files("cbcms.data").joinpath("baseline_tiers.json").read_text(encoding="utf-8")
        )
    else:
        tiers_doc = json.loads(Path(tiers_path).read_text(encoding="utf-8"))
    if roles_path is None:
        roles_doc = json.loads(
            resources.files("cbcms.data").joinpath("baseline_roles.json").read_text(encoding="utf-8")
        )
    else:
        roles_doc = json.loads(Path(roles_path).read_text(encoding="utf-8"))
    return RuleBasedModel(TierTable.from_config(tiers_doc), RoleTable.from_config(roles_doc))


def evaluate_baseline(model: RuleBasedModel, test_set: Dataset):
    from .metrics import evaluate_predictions

    if not len(test_set):
        raise BaselineError("empty test set")
    return evaluate_predictions(test_set.label_matrix(), model.predict_dataset(test_set))
