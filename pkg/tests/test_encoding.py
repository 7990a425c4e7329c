import numpy as np
import pytest

from cbcms.dataset import DatasetEntry, default_rule_table, generate_dataset
from cbcms.encoding import (
    EncodingError,
    MaskingError,
    N_FEATURES,
    decode_labels,
    decode_query,
    encode_features,
    encode_labels,
    encode_query,
    feature_schema_hash,
)
from cbcms.labels import CCPA, GDPR, LABEL_SPACE, PIPL
from cbcms.policy import validate_policy


class TestFeatures:
    def test_layout(self):
        fv = encode_query("personal_data", 1, GDPR, CCPA)
        assert fv.shape == (N_FEATURES,) == (15,)
        assert fv[0] == 1.0  # personal_data is the first category
        assert fv[8] == 1.0  # sensitivity slot
        assert fv[9] == 1.0  # source GDPR
        assert fv[13] == 1.0  # target CCPA

    def test_one_hot_invariants(self):
        fv = encode_query("biometric_data", 3, PIPL, PIPL)
        assert fv[:8].sum() == 1
        assert fv[9:12].sum() == 1
        assert fv[12:15].sum() == 1

    def test_equal_entries_equal_vectors(self):
        a = DatasetEntry("health_data", 2, GDPR, PIPL, bytes(51))
        b = DatasetEntry("health_data", 2, GDPR, PIPL, bytes(51))
        assert (encode_features(a) == encode_features(b)).all()

    def test_unknown_category(self):
        with pytest.raises(EncodingError, match="UNKNOWN_CATEGORY"):
            encode_query("foo", 1, GDPR, CCPA)

    def test_round_trip_query(self):
        fv = encode_query("location_data", 2, CCPA, PIPL)
        assert decode_query(fv) == ("location_data", 2, CCPA, PIPL)

    def test_schema_hash_stable(self):
        assert feature_schema_hash() == feature_schema_hash()


class TestLabelCodec:
    def test_empty_actions_all_zero(self):
        policies = decode_labels(np.zeros(51, dtype=np.uint8), GDPR, CCPA)
        vector = encode_labels(policies, GDPR, CCPA)
        assert not vector.any()

    def test_single_gdpr_label(self):
        vector = np.zeros(51, dtype=np.uint8)
        vector[LABEL_SPACE.index(GDPR, "Pseudonymisation")] = 1
        policies = decode_labels(vector, GDPR, CCPA)
        back = encode_labels(policies, GDPR, CCPA)
        assert (back == vector).all()

    def test_decode_encode_inverse_on_generated(self):
        table = default_rule_table()
        dataset = generate_dataset(table, 100, seed=77)
        for e in dataset.entries:
            vector = e.label_vector()
            policies = decode_labels(
                vector, e.source_jurisdiction, e.target_jurisdiction, e.data_category
            )
            back = encode_labels(policies, e.source_jurisdiction, e.target_jurisdiction)
            assert (back == vector).all()

    def test_decoded_policies_validate(self):
        vector = np.zeros(51, dtype=np.uint8)
        vector[LABEL_SPACE.index(GDPR, "Access")] = 1
        vector[LABEL_SPACE.index(CCPA, "Deletion")] = 1
        for policy in decode_labels(vector, GDPR, CCPA, "health_data"):
            assert validate_policy(policy).valid

    def test_all_zero_vector_decodes_to_empty_policies(self):
        policies = decode_labels(np.zeros(51, dtype=np.uint8), GDPR, CCPA)
        assert len(policies) == 2
        assert all(p.action.is_empty() for p in policies)

    def test_uninvolved_block_gets_empty_policy(self):
        vector = np.zeros(51, dtype=np.uint8)
        vector[LABEL_SPACE.index(GDPR, "Access")] = 1
        policies = decode_labels(vector, GDPR, CCPA)
        ccpa_policy = [p for p in policies if p.condition.legal_basis.law == CCPA][0]
        assert ccpa_policy.action.is_empty()

    def test_masking_violation_rejected_on_decode(self):
        vector = np.zeros(51, dtype=np.uint8)
        vector[LABEL_SPACE.index(PIPL, "Data Encryption")] = 1
        with pytest.raises(MaskingError):
            decode_labels(vector, GDPR, CCPA)

    def test_masking_violation_rejected_on_encode(self):
        vector = np.zeros(51, dtype=np.uint8)
        vector[LABEL_SPACE.index(PIPL, "Data Encryption")] = 1
        policies = decode_labels(vector, PIPL, PIPL)
        with pytest.raises(MaskingError):
            encode_labels(policies, GDPR, CCPA)

    def test_decode_deterministic_ids(self):
        vector = np.zeros(51, dtype=np.uint8)
        vector[LABEL_SPACE.index(GDPR, "Access")] = 1
        a = decode_labels(vector, GDPR, CCPA, version="m1")
        b = decode_labels(vector, GDPR, CCPA, version="m1")
        assert [p.policy_id for p in a] == [p.policy_id for p in b]
        c = decode_labels(vector, GDPR, CCPA, version="m2")
        assert [p.policy_id for p in a] != [p.policy_id for p in c]

    def test_domestic_transfer_single_policy(self):
        vector = np.zeros(51, dtype=np.uint8)
        vector[LABEL_SPACE.index(PIPL, "Data Encryption")] = 1
        policies = decode_labels(vector, PIPL, PIPL)
        assert len(policies) == 1
        assert policies[0].condition.jurisdiction_scope == "both"
