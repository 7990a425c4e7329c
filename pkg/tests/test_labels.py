import pytest

from cbcms.labels import (
    CCPA,
    GDPR,
    JURISDICTIONS,
    LABEL_SPACE,
    PIPL,
    UnknownJurisdictionError,
    label_vocabulary,
)


def test_vocabulary_sizes():
    assert len(label_vocabulary(GDPR)) == 24
    assert len(label_vocabulary(CCPA)) == 12
    assert len(label_vocabulary(PIPL)) == 15
    assert len(LABEL_SPACE) == 51


def test_gdpr_first_and_last():
    vocab = label_vocabulary(GDPR)
    assert vocab[0] == "End-to-end Encryption"
    assert vocab[-1] == "Management and Notification"


def test_ccpa_contents():
    vocab = label_vocabulary(CCPA)
    assert vocab[0] == "Access"
    assert "Non-discrimination" in vocab


def test_pipl_contents():
    vocab = label_vocabulary(PIPL)
    assert "Data De-identification" in vocab
    assert "Right to Withdraw Consent" in vocab


def test_unknown_jurisdiction_rejected():
    with pytest.raises(UnknownJurisdictionError):
        label_vocabulary("LGPD")


def test_blocks_partition_the_space():
    seen = set()
    total = 0
    for jur in JURISDICTIONS:
        block = LABEL_SPACE.block(jur)
        indices = set(range(block.start, block.stop))
        assert not indices & seen
        seen |= indices
        total += len(indices)
    assert total == 51
    assert seen == set(range(51))


def test_same_name_different_jurisdiction_distinct_indices():
    gdpr_port = LABEL_SPACE.index(GDPR, "Portability")
    ccpa_port = LABEL_SPACE.index(CCPA, "Portability")
    pipl_port = LABEL_SPACE.index(PIPL, "Portability")
    assert len({gdpr_port, ccpa_port, pipl_port}) == 3


def test_index_order_is_stable():
    assert LABEL_SPACE.index(GDPR, "End-to-end Encryption") == 0
    assert LABEL_SPACE.index(CCPA, "Access") == 24
    assert LABEL_SPACE.index(PIPL, "Data Encryption") == 36
    assert LABEL_SPACE.index(PIPL, "Management and Notification") == 50


def test_involvement_mask():
    mask = LABEL_SPACE.involvement_mask(GDPR, CCPA)
    assert mask[:36].all()
    assert not mask[36:].any()
    domestic = LABEL_SPACE.involvement_mask(PIPL, PIPL)
    assert domestic[36:].all()
    assert not domestic[:36].any()


def test_canonical_name_case_insensitive():
    assert LABEL_SPACE.canonical_name(GDPR, "access control") == "Access Control"
    assert LABEL_SPACE.canonical_name(GDPR, "ACCESS CONTROL") == "Access Control"
    assert LABEL_SPACE.canonical_name(GDPR, "Nonexistent") is None


def test_version_digest_stable():
    assert LABEL_SPACE.version() == LABEL_SPACE.version()
    assert len(LABEL_SPACE.version()) == 16
