import numpy as np
import pytest

from cbcms.dataset import (
    RuleTableError,
    apply_label_noise,
    build_rule_table,
    default_pair_weights,
    default_rule_table,
    generate_dataset,
    generate_split_dataset,
    load_csv,
    oracle_labels,
    save_csv,
    split_dataset,
)
from cbcms.labels import (
    DATA_CATEGORIES,
    GDPR,
    CCPA,
    JURISDICTIONS,
    LABEL_SPACE,
    PIPL,
    SECURITY_MEASURES,
)


@pytest.fixture(scope="module")
def table():
    return default_rule_table()


class TestRuleTable:
    def test_default_covers_full_grid(self, table):
        assert len(table.rules) == 3 * 2 * 8 * 4

    def test_security_monotone_by_construction(self, table):
        for jur in JURISDICTIONS:
            for role in ("source", "target"):
                for category in DATA_CATEGORIES:
                    prev: frozenset = frozenset()
                    for level in range(4):
                        sec = {
                            n
                            for n in table.lookup(jur, role, category, level)
                            if LABEL_SPACE.category_of(jur, n) == SECURITY_MEASURES
                        }
                        assert prev <= sec
                        prev = sec

    def test_ccpa_target_low_level_nonempty(self, table):
        for category in DATA_CATEGORIES:
            assert table.lookup(CCPA, "target", category, 0)

    def test_foreign_label_rejected(self, table):
        config = {k: sorted(v) for k, v in table.rules.items()}
        config["PIPL/source/personal_data/2"] = ["End-to-end Encryption"]
        with pytest.raises(RuleTableError) as exc:
            build_rule_table(config)
        assert "PIPL/source/personal_data/2" in str(exc.value)

    def test_breaking_monotonicity_rejected(self, table):
        config = {k: sorted(v) for k, v in table.rules.items()}
        config["GDPR/source/personal_data/3"] = ["Encrypt In Storage"]  # drops level-2 measures
        with pytest.raises(RuleTableError) as exc:
            build_rule_table(config)
        assert "monotone" in str(exc.value)

    def test_missing_key_rejected(self, table):
        config = {k: sorted(v) for k, v in table.rules.items()}
        del config["PIPL/target/health_data/1"]
        with pytest.raises(RuleTableError):
            build_rule_table(config)


class TestOracle:
    def test_masking_gdpr_ccpa(self, table):
        vector = oracle_labels(table, "personal_data", 1, GDPR, CCPA)
        assert not vector[LABEL_SPACE.block(PIPL)].any()

    def test_bits_only_in_involved_blocks(self, table):
        vector = oracle_labels(table, "health_data", 3, GDPR, CCPA)
        outside = np.ones(len(LABEL_SPACE), dtype=bool)
        outside[LABEL_SPACE.block(GDPR)] = False
        outside[LABEL_SPACE.block(CCPA)] = False
        assert not vector[outside].any()
        assert vector.any()

    def test_domestic_transfer_single_block(self, table):
        vector = oracle_labels(table, "financial_data", 2, PIPL, PIPL)
        assert vector[LABEL_SPACE.block(PIPL)].any()
        assert not vector[LABEL_SPACE.block(GDPR)].any()
        assert not vector[LABEL_SPACE.block(CCPA)].any()

    def test_sensitivity_never_clears_security_bits(self, table):
        sec_idx = np.array(
            [i for i, lab in enumerate(LABEL_SPACE.labels) if lab.category == SECURITY_MEASURES]
        )
        for category in DATA_CATEGORIES:
            for src in JURISDICTIONS:
                for tgt in JURISDICTIONS:
                    prev = np.zeros(len(sec_idx), dtype=np.uint8)
                    for level in range(4):
                        cur = oracle_labels(table, category, level, src, tgt)[sec_idx]
                        assert ((prev == 1) <= (cur == 1)).all()
                        prev = cur

    def test_unknown_category(self, table):
        with pytest.raises(RuleTableError):
            oracle_labels(table, "telemetry", 1, GDPR, CCPA)


class TestGenerate:
    def test_per_law_shares(self, table):
        dataset = generate_dataset(table, 4923, seed=11)
        counts = {j: 0 for j in JURISDICTIONS}
        for e in dataset.entries:
            counts[e.source_jurisdiction] += 1
        for jur, target in [(GDPR, 1928), (CCPA, 1598), (PIPL, 1397)]:
            assert abs(counts[jur] - target) <= 0.03 * target

    def test_zero_noise_matches_oracle_exactly(self, table):
        dataset = generate_dataset(table, 200, noise_rate=0.0, seed=3)
        for e in dataset.entries:
            expected = oracle_labels(
                table, e.data_category, e.sensitivity_level, e.source_jurisdiction, e.target_jurisdiction
            )
            assert (e.label_vector() == expected).all()

    def test_same_seed_byte_identical(self, table):
        a = generate_dataset(table, 300, noise_rate=0.05, seed=42)
        b = generate_dataset(table, 300, noise_rate=0.05, seed=42)
        assert a.entries == b.entries

    def test_different_seed_differs(self, table):
        a = generate_dataset(table, 300, noise_rate=0.05, seed=42)
        b = generate_dataset(table, 300, noise_rate=0.05, seed=43)
        assert a.entries != b.entries

    def test_masking_holds_under_noiseless_generation(self, table):
        dataset = generate_dataset(table, 500, seed=5)
        for e in dataset.entries:
            mask = LABEL_SPACE.involvement_mask(e.source_jurisdiction, e.target_jurisdiction)
            assert not (e.label_vector() & (1 - mask)).any()

    def test_invalid_noise_rejected(self, table):
        with pytest.raises(ValueError):
            generate_dataset(table, 10, noise_rate=0.5)

    def test_empty_weights_rejected(self, table):
        with pytest.raises(ValueError):
            generate_dataset(table, 10, pair_weights={})


class TestSplit:
    def test_4923_70_30(self, table):
        dataset = generate_dataset(table, 4923, seed=1)
        train, test = split_dataset(dataset, 0.7, seed=2)
        assert (len(train), len(test)) == (3446, 1477)

    def test_small_split(self, table):
        dataset = generate_dataset(table, 10, seed=1)
        train, test = split_dataset(dataset, 0.7, seed=2)
        assert (len(train), len(test)) == (7, 3)

    def test_partition(self, table):
        dataset = generate_dataset(table, 101, seed=1)
        train, test = split_dataset(dataset, 0.7, seed=2)
        combined = sorted(train.entries + test.entries, key=lambda e: (
            e.data_category, e.sensitivity_level, e.source_jurisdiction, e.target_jurisdiction, e.labels))
        original = sorted(dataset.entries, key=lambda e: (
            e.data_category, e.sensitivity_level, e.source_jurisdiction, e.target_jurisdiction, e.labels))
        assert combined == original

    def test_split_too_small(self, table):
        dataset = generate_dataset(table, 1, seed=1)
        with pytest.raises(ValueError):
            split_dataset(dataset, 0.7)


class TestNoisePipeline:
    def test_train_noisy_test_clean(self, table):
        train, test = generate_split_dataset(table, 400, ratio=0.7, noise_rate=0.2, seed=9)
        mismatches = 0
        for e in train.entries:
            expected = oracle_labels(
                table, e.data_category, e.sensitivity_level, e.source_jurisdiction, e.target_jurisdiction
            )
            mismatches += int((e.label_vector() != expected).any())
        assert mismatches > 0
        for e in test.entries:
            expected = oracle_labels(
                table, e.data_category, e.sensitivity_level, e.source_jurisdiction, e.target_jurisdiction
            )
            assert (e.label_vector() == expected).all()

    def test_apply_noise_rate_sane(self, table):
        dataset = generate_dataset(table, 500, seed=4)
        noisy = apply_label_noise(dataset, 0.1, seed=5)
        flips = sum(
            (a.label_vector() != b.label_vector()).sum()
            for a, b in zip(dataset.entries, noisy.entries)
        )
        total = 500 * len(LABEL_SPACE)
        assert 0.07 < flips / total < 0.13


class TestCsv:
    def test_round_trip(self, tmp_path, table):
        dataset = generate_dataset(table, 50, noise_rate=0.1, seed=8)
        path = save_csv(dataset, tmp_path / "data.csv")
        loaded = load_csv(path)
        assert loaded.entries == dataset.entries

    def test_default_weights_cover_all_pairs(self):
        weights = default_pair_weights()
        assert len(weights) == 9
        assert abs(sum(weights.values()) - 1.0) < 1e-9
