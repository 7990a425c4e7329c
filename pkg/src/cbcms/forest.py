"""Multi-output random forest trained on transfer scenarios.

One forest, vector leaves: every tree predicts all 51 labels at once and
the forest score for a label is the mean of the leaf fractions across
trees.  A bit is predicted when its score reaches 0.5 (ties predict the
action, the safe direction for compliance).  Involvement masking is an
unconditional postcondition of prediction: the jurisdiction pair is read
back from the query's one-hot blocks and bits outside the pair are forced
to zero.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _kernels
from .dataset import Dataset
from .encoding import N_FEATURES, decode_query, encode_dataset, feature_schema_hash
from .labels import LABEL_SPACE


class ForestError(ValueError):
    pass


class SchemaMismatchError(ForestError):
    pass


class LabelSpaceMismatchError(ForestError):
    pass


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 100
    max_depth: int = 15
    min_samples_split: int = 5
    min_samples_leaf: int = 2
    features_per_split: int | None = None  # default: ceil(sqrt(d))
    seed: int = 0
    bootstrap: bool = True

    def __post_init__(self):
        for name in ("n_trees", "max_depth", "min_samples_split", "min_samples_leaf"):
            if getattr(self, name) < 1:
                raise ForestError(f"{name} must be positive")
        if self.features_per_split is not None and self.features_per_split < 1:
            raise ForestError("features_per_split must be positive")
        # min_samples_leaf may exceed min_samples_split: the leaf constraint
        # then dominates (a node only splits when both children can reach
        # min_samples_leaf), which standard grids rely on

    def resolved_features_per_split(self, n_features: int = N_FEATURES) -> int:
        if self.features_per_split is not None:
            return min(self.features_per_split, n_features)
        return math.ceil(math.sqrt(n_features))

    def to_dict(self) -> dict:
        return {
            "n_trees": self.n_trees,
            "max_depth": self.max_depth,
            "min_samples_split": self.min_samples_split,
            "min_samples_leaf": self.min_samples_leaf,
            "features_per_split": self.features_per_split,
            "seed": self.seed,
            "bootstrap": self.bootstrap,
        }


@dataclass
class ForestModel:
    params: ForestParams
    features: np.ndarray  # int32, concatenated nodes of all trees
    thresholds: np.ndarray  # float64
    lefts: np.ndarray  # int32, global indices
    rights: np.ndarray  # int32
    leaf_ids: np.ndarray  # int32, global leaf rows (-1 internal)
    leaf_values: np.ndarray  # float64 (total_leaves, n_labels)
    leaf_counts: np.ndarray  # int64, in-bag rows per leaf
    roots: np.ndarray  # int64 (n_trees,)
    schema_hash: str = field(default_factory=feature_schema_hash)
    label_space_version: str = field(default_factory=LABEL_SPACE.version)

    @property
    def n_trees(self) -> int:
        return len(self.roots)

    def version(self) -> str:
        return f"{self.label_space_version}:{self.schema_hash}:{self.params.seed}:{self.n_trees}"

    def scores(self, X: np.ndarray) -> np.ndarray:
        X = np.ascontiguousarray(np.atleast_2d(np.asarray(X, dtype=np.float64)))
        if X.shape[1] != N_FEATURES:
            raise SchemaMismatchError(f"expected {N_FEATURES}-dim features")
        out = np.zeros((X.shape[0], self.leaf_values.shape[1]), dtype=np.float64)
        _kernels.forest_scores(
            X, self.features, self.thresholds, self.lefts, self.rights,
            self.leaf_ids, self.leaf_values, self.roots, out,
        )
        return out


def _tree_worker(args):
    X, Y, seed, bootstrap, max_depth, min_split, min_leaf, max_features = args
    n = X.shape[0]
    cap = 2 * n + 1
    feature_arr = np.empty(cap, np.int32)
    thresh_arr = np.zeros(cap, np.float64)
    left_arr = np.zeros(cap, np.int32)
    right_arr = np.zeros(cap, np.int32)
    leaf_idx_arr = np.empty(cap, np.int32)
    leaf_values = np.zeros((n + 1, Y.shape[1]), np.float64)
    leaf_counts = np.zeros(n + 1, np.int64)
    n_nodes, n_leaves = _kernels.build_tree(
        X, Y, seed, bootstrap, max_depth, min_split, min_leaf, max_features,
        feature_arr, thresh_arr, left_arr, right_arr, leaf_idx_arr, leaf_values,
        leaf_counts,
    )
    return (
        feature_arr[:n_nodes].copy(),
        thresh_arr[:n_nodes].copy(),
        left_arr[:n_nodes].copy(),
        right_arr[:n_nodes].copy(),
        leaf_idx_arr[:n_nodes].copy(),
        leaf_values[:n_leaves].copy(),
        leaf_counts[:n_leaves].copy(),
    )


def train_forest_xy(
    X: np.ndarray, Y: np.ndarray, params: ForestParams, n_jobs: int = 1
) -> ForestModel:
    """Train on raw arrays; deterministic in (data, params) for any n_jobs."""
    X = np.ascontiguousarray(np.asarray(X, dtype=np.float64))
    Y = np.ascontiguousarray(np.asarray(Y, dtype=np.uint8))
    if X.ndim != 2 or Y.ndim != 2 or X.shape[0] != Y.shape[0]:
        raise ForestError("X and Y must be matching 2-d arrays")
    if X.shape[0] == 0:
        raise ForestError("empty training set")
    if X.shape[0] < params.min_samples_split and X.shape[0] < 1:
        raise ForestError("training set smaller than min_samples_split")

    max_features = params.resolved_features_per_split(X.shape[1])
    jobs = [
        (X, Y, params.seed + t, params.bootstrap, params.max_depth,
         params.min_samples_split, params.min_samples_leaf, max_features)
        for t in range(params.n_trees)
    ]
    if n_jobs > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            trees = list(pool.map(_tree_worker, jobs, chunksize=max(1, len(jobs) // (4 * n_jobs))))
    else:
        trees = [_tree_worker(job) for job in jobs]

    features, thresholds, lefts, rights, leaf_ids = [], [], [], [], []
    leaf_values, leaf_counts, roots = [], [], []
    node_offset = 0
    leaf_offset = 0
    for feat, thr, left, right, leaf_idx, leaves, counts in trees:
        n_nodes = len(feat)
        roots.append(node_offset)
        features.append(feat)
        thresholds.append(thr)
        internal = leaf_idx < 0
        lefts.append(np.where(internal, left + node_offset, 0).astype(np.int32))
        rights.append(np.where(internal, right + node_offset, 0).astype(np.int32))
        leaf_ids.append(np.where(internal, -1, leaf_idx + leaf_offset).astype(np.int32))
        leaf_values.append(leaves)
        leaf_counts.append(counts)
        node_offset += n_nodes
        leaf_offset += len(leaves)

    return ForestModel(
        params=params,
        features=np.concatenate(features),
        thresholds=np.concatenate(thresholds),
        lefts=np.concatenate(lefts),
        rights=np.concatenate(rights),
        leaf_ids=np.concatenate(leaf_ids),
        leaf_values=np.vstack(leaf_values),
        leaf_counts=np.concatenate(leaf_counts),
        roots=np.asarray(roots, dtype=np.int64),
    )


def train_forest(dataset: Dataset, params: ForestParams, n_jobs: int = 1) -> ForestModel:
    X, Y = encode_dataset(dataset)
    return train_forest_xy(X, Y, params, n_jobs=n_jobs)


def predict(model: ForestModel, fv: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Predict one query: (masked 0/1 label vector, raw per-label scores).

    score_i is the mean leaf fraction over trees; bit_i = 1 iff
    score_i >= 0.5; the involvement mask of the pair encoded in `fv` is
    then applied to the bits.
    """
    if model.schema_hash != feature_schema_hash():
        raise SchemaMismatchError("model was trained under a different feature schema")
    _, _, source, target = decode_query(np.asarray(fv, dtype=np.float64))
    scores = model.scores(fv)[0]
    bits = (scores >= 0.5).astype(np.uint8)
    bits &= LABEL_SPACE.involvement_mask(source, target)
    return bits, scores


def predict_matrix(model: ForestModel, X: np.ndarray) -> np.ndarray:
    """Masked 0/1 predictions for a feature matrix (one row per query)."""
    if model.schema_hash != feature_schema_hash():
        raise SchemaMismatchError("model was trained under a different feature schema")
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    scores = model.scores(X)
    bits = (scores >= 0.5).astype(np.uint8)
    for i in range(X.shape[0]):
        _, _, source, target = decode_query(X[i])
        bits[i] &= LABEL_SPACE.involvement_mask(source, target)
    return bits


def evaluate_model(model: ForestModel, test_set: Dataset):
    """Per-label and macro precision/recall/F1 of masked predictions."""
    from .metrics import evaluate_predictions

    if not len(test_set):
        raise ForestError("empty test set")
    X, Y = encode_dataset(test_set)
    predictions = predict_matrix(model, X)
    return evaluate_predictions(Y, predictions)


MODEL_FORMAT = "cbcms-forest-v1"


def save_model(model: ForestModel, path: str | Path) -> Path:
    path = Path(path)
    meta = {
        "format": MODEL_FORMAT,
        "params": model.params.to_dict(),
        "schema_hash": model.schema_hash,
        "label_space_version": model.label_space_version,
    }
    np.savez_compressed(
        path,
        meta=np.frombuffer(json.dumps(meta).encode("utf-8"), dtype=np.uint8),
        features=model.features,
        thresholds=model.thresholds,
        lefts=model.lefts,
        rights=model.rights,
        leaf_ids=model.leaf_ids,
        leaf_values=model.leaf_values,
        leaf_counts=model.leaf_counts,
        roots=model.roots,
    )
    # np.savez appends .npz unless present
    actual = path if path.suffix == ".npz" else path.with_name(path.name + ".npz")
    return actual


def load_model(path: str | Path) -> ForestModel:
    with np.load(Path(path)) as archive:
        meta = json.loads(bytes(archive["meta"]).decode("utf-8"))
        if meta.get("format") != MODEL_FORMAT:
            raise ForestError(f"unsupported model format {meta.get('format')!r}")
        if meta["label_space_version"] != LABEL_SPACE.version():
            raise LabelSpaceMismatchError(
                f"model label space {meta['label_space_version']} != current {LABEL_SPACE.version()}"
            )
        params = ForestParams(**meta["params"])
        return ForestModel(
            params=params,
            features=archive["features"],
            thresholds=archive["thresholds"],
            lefts=archive["lefts"],
            rights=archive["rights"],
            leaf_ids=archive["leaf_ids"],
            leaf_values=archive["leaf_values"],
            leaf_counts=archive["leaf_counts"],
            roots=archive["roots"],
            schema_hash=meta["schema_hash"],
            label_space_version=meta["label_space_version"],
        )
