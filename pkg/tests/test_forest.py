import numpy as np
import pytest

from cbcms.dataset import Dataset, DatasetEntry, default_rule_table, generate_split_dataset, oracle_labels
from cbcms.encoding import encode_query
from cbcms.forest import (
    ForestError,
    ForestParams,
    LabelSpaceMismatchError,
    evaluate_model,
    load_model,
    predict,
    predict_matrix,
    save_model,
    train_forest,
    train_forest_xy,
)
from cbcms.labels import CCPA, GDPR, LABEL_SPACE, PIPL


def tiny_dataset() -> Dataset:
    table = default_rule_table()
    entries = []
    for category, level, src, tgt in [
        ("personal_data", 0, GDPR, CCPA),
        ("personal_data", 3, GDPR, CCPA),
        ("health_data", 1, PIPL, GDPR),
        ("financial_data", 2, CCPA, CCPA),
    ]:
        labels = oracle_labels(table, category, level, src, tgt)
        entries.append(DatasetEntry(category, level, src, tgt, labels.tobytes()))
    return Dataset(tuple(entries), seed=0, noise_rate=0.0)


class TestParams:
    def test_defaults(self):
        params = ForestParams()
        assert params.resolved_features_per_split(15) == 4  # ceil(sqrt(15))

    def test_leaf_constraint_dominates_small_split_gate(self):
        # split=2 with leaf=4 is legal: nodes split only when both children
        # can reach four rows
        table = default_rule_table()
        train, _ = generate_split_dataset(table, 300, noise_rate=0.1, seed=12)
        params = ForestParams(n_trees=3, min_samples_split=2, min_samples_leaf=4, seed=1)
        model = train_forest(train, params)
        assert (model.leaf_counts >= 4).all()

    def test_positive_required(self):
        with pytest.raises(ForestError):
            ForestParams(n_trees=0)


class TestTraining:
    def test_single_tree_memorizes_without_bootstrap(self):
        dataset = tiny_dataset()
        params = ForestParams(
            n_trees=1, max_depth=64, min_samples_split=2, min_samples_leaf=1,
            bootstrap=False, seed=5,
        )
        model = train_forest(dataset, params)
        for entry in dataset.entries:
            fv = encode_query(
                entry.data_category, entry.sensitivity_level,
                entry.source_jurisdiction, entry.target_jurisdiction,
            )
            bits, _ = predict(model, fv)
            assert (bits == entry.label_vector()).all()

    def test_same_seed_identical_predictions(self):
        table = default_rule_table()
        train, test = generate_split_dataset(table, 300, noise_rate=0.1, seed=21)
        params = ForestParams(n_trees=10, seed=13)
        a = train_forest(train, params)
        b = train_forest(train, params)
        Xt = np.vstack([
            encode_query(e.data_category, e.sensitivity_level, e.source_jurisdiction, e.target_jurisdiction)
            for e in test.entries
        ])
        assert (predict_matrix(a, Xt) == predict_matrix(b, Xt)).all()
        assert (a.scores(Xt) == b.scores(Xt)).all()

    def test_worker_count_does_not_change_model(self):
        table = default_rule_table()
        train, _ = generate_split_dataset(table, 200, noise_rate=0.05, seed=31)
        params = ForestParams(n_trees=6, seed=3)
        serial = train_forest(train, params, n_jobs=1)
        parallel = train_forest(train, params, n_jobs=2)
        assert (serial.features == parallel.features).all()
        assert (serial.thresholds == parallel.thresholds).all()
        assert (serial.leaf_values == parallel.leaf_values).all()

    def test_duplicate_trees_do_not_change_bits(self):
        # voting is a mean of identical leaf distributions: duplicating every
        # tree leaves each score unchanged
        dataset = tiny_dataset()
        params = ForestParams(n_trees=3, min_samples_split=2, min_samples_leaf=1, seed=9)
        model = train_forest(dataset, params)
        doubled = ForestParams(n_trees=6, min_samples_split=2, min_samples_leaf=1, seed=9)
        import dataclasses

        base = train_forest(dataset, params)
        fv = encode_query("personal_data", 3, GDPR, CCPA)
        bits_once, scores_once = predict(model, fv)

        # stack the same trees twice explicitly
        stacked = dataclasses.replace(
            base,
            features=np.concatenate([base.features, base.features]),
            thresholds=np.concatenate([base.thresholds, base.thresholds]),
            lefts=np.concatenate([base.lefts, (base.lefts + len(base.features)).astype(np.int32)]),
            rights=np.concatenate([base.rights, (base.rights + len(base.features)).astype(np.int32)]),
            leaf_ids=np.concatenate([
                base.leaf_ids,
                np.where(base.leaf_ids < 0, -1, base.leaf_ids + len(base.leaf_values)).astype(np.int32),
            ]),
            leaf_values=np.vstack([base.leaf_values, base.leaf_values]),
            roots=np.concatenate([base.roots, base.roots + len(base.features)]),
        )
        bits_twice, scores_twice = predict(stacked, fv)
        assert (bits_once == bits_twice).all()
        assert scores_once == pytest.approx(list(scores_twice))

    def test_empty_training_set_rejected(self):
        with pytest.raises(ForestError):
            train_forest_xy(np.zeros((0, 15)), np.zeros((0, 51)), ForestParams())

    def test_leaf_sizes_respect_min_samples_leaf(self):
        table = default_rule_table()
        train, _ = generate_split_dataset(table, 400, noise_rate=0.2, seed=8)
        params = ForestParams(n_trees=4, min_samples_leaf=5, min_samples_split=10, seed=2)
        model = train_forest(train, params)
        assert (model.leaf_counts >= 5).all()

    def test_depth_bound_respected(self):
        table = default_rule_table()
        train, _ = generate_split_dataset(table, 400, noise_rate=0.2, seed=8)
        model = train_forest(train, ForestParams(n_trees=3, max_depth=4, seed=2))

        def depth(root, node, d):
            if model.leaf_ids[node] >= 0:
                return d
            return max(
                depth(root, model.lefts[node], d + 1), depth(root, model.rights[node], d + 1)
            )

        for root in model.roots:
            assert depth(root, int(root), 0) <= 4


class TestPredict:
    def test_masking_postcondition(self):
        table = default_rule_table()
        train, _ = generate_split_dataset(table, 300, seed=17)
        model = train_forest(train, ForestParams(n_trees=5, seed=1))
        fv = encode_query("personal_data", 3, GDPR, CCPA)
        bits, _ = predict(model, fv)
        assert not bits[LABEL_SPACE.block(PIPL)].any()

    def test_tie_predicts_positive(self):
        # two memorizing trees disagreeing 0/1 average to exactly 0.5
        table = default_rule_table()
        entries = [
            DatasetEntry("personal_data", 0, GDPR, GDPR, bytes([1] + [0] * 50)),
            DatasetEntry("personal_data", 0, GDPR, GDPR, bytes([0] * 51)),
        ]
        dataset = Dataset(tuple(entries), seed=0, noise_rate=0.0)
        params = ForestParams(
            n_trees=1, min_samples_split=2, min_samples_leaf=2, bootstrap=False, seed=0
        )
        model = train_forest(dataset, params)
        fv = encode_query("personal_data", 0, GDPR, GDPR)
        bits, scores = predict(model, fv)
        assert scores[0] == pytest.approx(0.5)
        assert bits[0] == 1

    def test_wrong_width_rejected(self):
        dataset = tiny_dataset()
        model = train_forest(dataset, ForestParams(n_trees=2, min_samples_split=2, min_samples_leaf=1, seed=1))
        with pytest.raises(Exception):
            model.scores(np.zeros((1, 7)))


class TestPersistence:
    def test_save_load_round_trip(self, tmp_path):
        dataset = tiny_dataset()
        params = ForestParams(n_trees=3, min_samples_split=2, min_samples_leaf=1, seed=4)
        model = train_forest(dataset, params)
        path = save_model(model, tmp_path / "model.npz")
        loaded = load_model(path)
        assert loaded.params == params
        fv = encode_query("health_data", 1, PIPL, GDPR)
        assert (predict(loaded, fv)[0] == predict(model, fv)[0]).all()

    def test_label_space_version_pinned(self, tmp_path):
        dataset = tiny_dataset()
        model = train_forest(dataset, ForestParams(n_trees=1, min_samples_split=2, min_samples_leaf=1))
        model.label_space_version = "0000000000000000"
        path = save_model(model, tmp_path / "stale.npz")
        with pytest.raises(LabelSpaceMismatchError):
            load_model(path)


class TestEvaluate:
    def test_oracle_equivalence_small(self):
        table = default_rule_table()
        train, test = generate_split_dataset(table, 1200, noise_rate=0.0, seed=41)
        model = train_forest(train, ForestParams(n_trees=30, seed=6))
        report = evaluate_model(model, test)
        assert report.macro_overall.f1 >= 0.98

    def test_empty_test_set_rejected(self):
        dataset = tiny_dataset()
        model = train_forest(dataset, ForestParams(n_trees=1, min_samples_split=2, min_samples_leaf=1))
        with pytest.raises(ForestError):
            evaluate_model(model, Dataset((), seed=0, noise_rate=0.0))
