"""Synthetic annotated-corpus generator with an explicit rule-table oracle.

The oracle is a deterministic map (jurisdiction, transfer role, data
category, sensitivity level) -> required labels.  Every generated entry's
ground truth is the union of the source jurisdiction's source-role lookup
and the target jurisdiction's target-role lookup, with every other
jurisdiction's block forced to zero (involvement masking).  Optional label
noise flips each bit independently.  Everything is reproducible from
(config, seed).
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .labels import (
    DATA_CATEGORIES,
    JURISDICTIONS,
    LABEL_SPACE,
    SECURITY_MEASURES,
    SENSITIVITY_LEVELS,
)

TRANSFER_ROLES = ("source", "target")

# per-law entry shares used for the default jurisdiction-pair weights
_LAW_SHARES = {"GDPR": 1928, "CCPA": 1598, "PIPL": 1397}


class RuleTableError(ValueError):
    pass


def _key(jurisdiction: str, role: str, category: str, level: int) -> str:
    return f"{jurisdiction}/{role}/{category}/{level}"


@dataclass(frozen=True)
class RuleTable:
    """Validated oracle table; lookup returns a frozenset of label names."""

    rules: dict[str, frozenset[str]]

    def lookup(self, jurisdiction: str, role: str, category: str, level: int) -> frozenset[str]:
        try:
            return self.rules[_key(jurisdiction, role, category, level)]
        except KeyError:
            raise RuleTableError(f"no rule for key {_key(jurisdiction, role, category, level)!r}") from None

    def digest(self) -> str:
        canon = json.dumps({k: sorted(v) for k, v in sorted(self.rules.items())}, sort_keys=True)
        return hashlib.sha256(canon.encode()).hexdigest()[:16]


def build_rule_table(config: dict[str, list[str]]) -> RuleTable:
    """Validate and freeze a rule-table config.

    Rejected with the offending key: unknown jurisdictions/roles/categories/
    levels, labels outside the keyed jurisdiction's vocabulary, and
    security-measure sets that are not monotone in the sensitivity level.
    """
    rules: dict[str, frozenset[str]] = {}
    for key, labels in config.items():
        parts = key.split("/")
        if len(parts) != 4:
            raise RuleTableError(f"malformed key {key!r}")
        jur, role, category, level_text = parts
        if jur not in JURISDICTIONS:
            raise RuleTableError(f"unknown jurisdiction in key {key!r}")
        if role not in TRANSFER_ROLES:
            raise RuleTableError(f"unknown role in key {key!r}")
        if category not in DATA_CATEGORIES:
            raise RuleTableError(f"unknown category in key {key!r}")
        try:
            level = int(level_text)
        except ValueError:
            raise RuleTableError(f"malformed level in key {key!r}") from None
        if level not in SENSITIVITY_LEVELS:
            raise RuleTableError(f"out-of-range level in key {key!r}")
        vocab = set(LABEL_SPACE.vocabulary(jur))
        foreign = set(labels) - vocab
        if foreign:
            raise RuleTableError(f"key {key!r} maps to foreign label {sorted(foreign)[0]!r}")
        rules[key] = frozenset(labels)

    expected = {
        _key(j, r, c, l)
        for j in JURISDICTIONS
        for r in TRANSFER_ROLES
        for c in DATA_CATEGORIES
        for l in SENSITIVITY_LEVELS
    }
    missing = expected - set(rules)
    if missing:
        raise RuleTableError(f"missing rule for key {sorted(missing)[0]!r}")

    for jur in JURISDICTIONS:
        for role in TRANSFER_ROLES:
            for category in DATA_CATEGORIES:
                for level in SENSITIVITY_LEVELS[:-1]:
                    low = {
                        n for n in rules[_key(jur, role, category, level)]
                        if LABEL_SPACE.category_of(jur, n) == SECURITY_MEASURES
                    }
                    high = {
                        n for n in rules[_key(jur, role, category, level + 1)]
                        if LABEL_SPACE.category_of(jur, n) == SECURITY_MEASURES
                    }
                    if not low <= high:
                        raise RuleTableError(
                            f"security measures not monotone at key {_key(jur, role, category, level + 1)!r}"
                        )
    return RuleTable(rules)


def load_rule_table(path: str | Path) -> RuleTable:
    return build_rule_table(json.loads(Path(path).read_text(encoding="utf-8")))


_DEFAULT_TABLE: RuleTable | None = None


def default_rule_table() -> RuleTable:
    global _DEFAULT_TABLE
    if _DEFAULT_TABLE is None:
        text = resources.files("cbcms.data").joinpath("rule_table.json").read_text(encoding="utf-8")
        _DEFAULT_TABLE = build_rule_table(json.loads(text))
    return _DEFAULT_TABLE


def oracle_labels(
    table: RuleTable, category: str, sensitivity: int, source: str, target: str
) -> np.ndarray:
    """Ground-truth 51-bit vector for one transfer scenario."""
    if category not in DATA_CATEGORIES:
        raise RuleTableError(f"unknown category {category!r}")
    if sensitivity not in SENSITIVITY_LEVELS:
        raise RuleTableError(f"unknown sensitivity level {sensitivity!r}")
    vector = np.zeros(len(LABEL_SPACE), dtype=np.uint8)
    for name in table.lookup(source, "source", category, sensitivity):
        vector[LABEL_SPACE.index(source, name)] = 1
    for name in table.lookup(target, "target", category, sensitivity):
        vector[LABEL_SPACE.index(target, name)] = 1
    return vector


@dataclass(frozen=True)
class DatasetEntry:
    data_category: str
    sensitivity_level: int
    source_jurisdiction: str
    target_jurisdiction: str
    labels: bytes  # 51 bytes of 0/1 in label-space order

    def label_vector(self) -> np.ndarray:
        return np.frombuffer(self.labels, dtype=np.uint8).copy()


@dataclass(frozen=True)
class Dataset:
    entries: tuple[DatasetEntry, ...]
    seed: int
    noise_rate: float
    metadata: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.entries)

    def label_matrix(self) -> np.ndarray:
        return np.vstack([e.label_vector() for e in self.entries]) if self.entries else np.zeros(
            (0, len(LABEL_SPACE)), dtype=np.uint8
        )


def default_pair_weights() -> dict[tuple[str, str], float]:
    """Ordered-pair weights whose source marginals match the per-law shares."""
    total = sum(_LAW_SHARES.values())
    share = {j: _LAW_SHARES[j] / total for j in JURISDICTIONS}
    return {
        (src, tgt): share[src] * share[tgt]
        for src in JURISDICTIONS
        for tgt in JURISDICTIONS
    }


def _pair_quotas(n: int, weights: dict[tuple[str, str], float]) -> dict[tuple[str, str], int]:
    # largest-remainder apportionment keeps realized shares within rounding
    # of the requested weights instead of leaving them to sampling noise
    total_w = sum(weights.values())
    if total_w <= 0:
        raise ValueError("pair weights must sum to a positive value")
    shares = {pair: n * w / total_w for pair, w in weights.items()}
    quotas = {pair: int(s) for pair, s in shares.items()}
    leftover = n - sum(quotas.values())
    by_remainder = sorted(shares.items(), key=lambda kv: (kv[1] - int(kv[1]), kv[0]), reverse=True)
    for pair, _ in by_remainder[:leftover]:
        quotas[pair] += 1
    return quotas


def generate_dataset(
    table: RuleTable,
    n: int,
    pair_weights: dict[tuple[str, str], float] | None = None,
    noise_rate: float = 0.0,
    seed: int = 0,
) -> Dataset:
    """Sample n entries; labels are oracle truth with iid bit flips at noise_rate."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 0 <= noise_rate < 0.5:
        raise ValueError("noise rate must be in [0, 0.5)")
    weights = pair_weights if pair_weights is not None else default_pair_weights()
    if not weights:
        raise ValueError("pair weights must be non-empty")
    for src, tgt in weights:
        if src not in JURISDICTIONS or tgt not in JURISDICTIONS:
            raise ValueError(f"unknown jurisdiction in pair {(src, tgt)!r}")

    rng = np.random.default_rng(seed)
    quotas = _pair_quotas(n, weights)
    entries: list[DatasetEntry] = []
    for pair in sorted(quotas):
        src, tgt = pair
        for _ in range(quotas[pair]):
            category = DATA_CATEGORIES[rng.integers(0, len(DATA_CATEGORIES))]
            level = int(rng.integers(0, len(SENSITIVITY_LEVELS)))
            vector = oracle_labels(table, category, level, src, tgt)
            if noise_rate > 0:
                flips = rng.random(len(vector)) < noise_rate
                vector = np.where(flips, 1 - vector, vector).astype(np.uint8)
            entries.append(
                DatasetEntry(category, level, src, tgt, vector.tobytes())
            )
    order = rng.permutation(len(entries))
    entries = [entries[i] for i in order]
    return Dataset(
        entries=tuple(entries),
        seed=seed,
        noise_rate=noise_rate,
        metadata={"n": n, "rule_table": table.digest(), "label_space": LABEL_SPACE.version()},
    )


def split_dataset(dataset: Dataset, ratio: float, seed: int = 0) -> tuple[Dataset, Dataset]:
    """Seeded shuffle then split; train gets floor(n * ratio) entries."""
    if not 0 < ratio < 1:
        raise ValueError("ratio must be in (0, 1)")
    n = len(dataset)
    if n < 2:
        raise ValueError("need at least 2 entries to split")
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    cut = int(n * ratio)
    train_idx, test_idx = order[:cut], order[cut:]
    meta = dict(dataset.metadata)
    train = Dataset(
        tuple(dataset.entries[i] for i in train_idx), dataset.seed, dataset.noise_rate,
        {**meta, "split": "train", "ratio": ratio},
    )
    test = Dataset(
        tuple(dataset.entries[i] for i in test_idx), dataset.seed, dataset.noise_rate,
        {**meta, "split": "test", "ratio": ratio},
    )
    return train, test


def apply_label_noise(dataset: Dataset, noise_rate: float, seed: int = 0) -> Dataset:
    """Flip each label bit independently with the given probability."""
    if not 0 <= noise_rate < 0.5:
        raise ValueError("noise rate must be in [0, 0.5)")
    rng = np.random.default_rng(seed)
    entries = []
    for entry in dataset.entries:
        vector = entry.label_vector()
        flips = rng.random(len(vector)) < noise_rate
        vector = np.where(flips, 1 - vector, vector).astype(np.uint8)
        entries.append(
            DatasetEntry(
                entry.data_category,
                entry.sensitivity_level,
                entry.source_jurisdiction,
                entry.target_jurisdiction,
                vector.tobytes(),
            )
        )
    return Dataset(
        tuple(entries), dataset.seed, noise_rate, {**dataset.metadata, "noise": noise_rate, "noise_seed": seed}
    )


def generate_split_dataset(
    table: RuleTable,
    n: int,
    ratio: float = 0.7,
    noise_rate: float = 0.0,
    seed: int = 0,
    pair_weights: dict[tuple[str, str], float] | None = None,
) -> tuple[Dataset, Dataset]:
    """Generate clean entries, split, then noise the training side only.

    Keeping the test side clean makes oracle-equivalence checks well
    defined; the returned train set carries the requested noise rate.
    """
    clean = generate_dataset(table, n, pair_weights, noise_rate=0.0, seed=seed)
    train, test = split_dataset(clean, ratio, seed=seed + 1)
    if noise_rate > 0:
        train = apply_label_noise(train, noise_rate, seed=seed + 2)
    return train, test


CSV_HEADER = ["category", "sensitivity", "source", "target", "labels"]


def save_csv(dataset: Dataset, path: str | Path) -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for e in dataset.entries:
            bits = "".join(str(b) for b in e.label_vector())
            writer.writerow(
                [e.data_category, e.sensitivity_level, e.source_jurisdiction, e.target_jurisdiction, bits]
            )
    return path


def load_csv(path: str | Path) -> Dataset:
    entries = []
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != CSV_HEADER:
            raise ValueError(f"unexpected header {header!r}")
        for row in reader:
            category, level, src, tgt, bits = row
            if len(bits) != len(LABEL_SPACE) or set(bits) - {"0", "1"}:
                raise ValueError(f"bad label string in row {row!r}")
            entries.append(
                DatasetEntry(category, int(level), src, tgt, bytes(int(b) for b in bits))
            )
    return Dataset(tuple(entries), seed=-1, noise_rate=float("nan"), metadata={"loaded_from": str(path)})
