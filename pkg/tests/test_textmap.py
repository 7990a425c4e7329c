"""Pipeline tests, including the golden clause-to-policy conformance fixture."""

from importlib import resources

import pytest

from cbcms.labels import GDPR
from cbcms.policy import load_policy, validate_policy
from cbcms.textmap import (
    Lexicon,
    analyze,
    default_lexicon,
    extract_relations,
    lemmatize,
    map_text,
    recognize_entities,
    remove_stop_words,
    tokenize,
)


def fixture_text() -> str:
    return (
        resources.files("cbcms.data")
        .joinpath("fixtures/gdpr_art32_1.txt")
        .read_text(encoding="utf-8")
    )


# expected entity surfaces per type for the GDPR Art.32(1) clause
EXPECTED_ROLES = {"controller", "processor"}
EXPECTED_LEGAL = {"GDPR", "Article 32(1)"}
EXPECTED_DATA_CATEGORIES = {"personal data"}
EXPECTED_DATA_MEDIA = {"processing systems", "services"}
EXPECTED_CONSTRAINTS: set[str] = set()
EXPECTED_ACTIONS = {
    "pseudonymisation",
    "encryption",
    "confidentiality",
    "integrity",
    "availability",
    "resilience",
    "access",
    "physical",
    "technical",
    "incident",
    "testing",
    "assessing",
    "evaluating",
    "effectiveness",
    "technical measures",
    "organisational measures",
}

# expected relation rows: (action surfaces in order, modifier)
EXPECTED_RELATIONS = [
    (("pseudonymisation", "encryption"), "personal data"),
    (("confidentiality", "integrity", "availability", "resilience"), "processing systems and services"),
    (("availability", "access"), "personal data"),
    (("physical", "technical"), "incident"),
    (("testing", "assessing", "evaluating", "effectiveness"), "technical and organisational measures"),
]


class TestTokenize:
    def test_small_sentence(self):
        stream = tokenize("pseudonymisation and encryption.")
        assert len(stream) == 4
        assert stream.n_sentences == 1

    def test_empty_text(self):
        stream = tokenize("")
        assert len(stream) == 0
        assert stream.n_sentences == 0

    def test_clause_reference_kept_intact(self):
        stream = tokenize("Article 32(1) of GDPR")
        surfaces = [t.surface for t in stream.tokens]
        assert "32(1)" in surfaces

    def test_fixture_clause_reference_survives(self):
        stream = tokenize(fixture_text())
        assert any(t.surface == "32(1)" for t in stream.tokens)
        assert stream.n_sentences == 1

    def test_sentence_split(self):
        stream = tokenize("First clause. Second clause.")
        assert stream.n_sentences == 2
        assert {t.sentence for t in stream.tokens} == {0, 1}


class TestLemmatize:
    @pytest.mark.parametrize(
        "surface,lemma",
        [
            ("measures", "measure"),
            ("assessing", "assess"),
            ("data", "data"),
            ("testing", "test"),
            ("evaluating", "evaluate"),
            ("services", "service"),
            ("categories", "category"),
            ("processing", "processing"),
            ("access", "access"),
        ],
    )
    def test_rules(self, surface, lemma):
        stream = lemmatize(tokenize(surface))
        assert stream.tokens[0].lemma == lemma

    def test_surfaces_preserved(self):
        stream = lemmatize(tokenize("Assessing MEASURES"))
        assert [t.surface for t in stream.tokens] == ["Assessing", "MEASURES"]


class TestRemoveStopWords:
    def test_protected_prepositions_survive(self):
        stream = remove_stop_words(lemmatize(tokenize("the encryption of the data")))
        assert [t.lemma for t in stream.tokens] == ["encryption", "of", "data"]

    def test_all_stop_sentence_keeps_boundary(self):
        stream = remove_stop_words(lemmatize(tokenize("It is. encryption.")))
        assert stream.n_sentences == 2
        assert [t.lemma for t in stream.tokens if t.sentence == 0] == ["."]

    def test_fixed_point(self):
        cleaned = remove_stop_words(lemmatize(tokenize("encryption of data")))
        again = remove_stop_words(cleaned)
        assert cleaned == again

    def test_never_increases_token_count(self):
        stream = lemmatize(tokenize(fixture_text()))
        cleaned = remove_stop_words(stream)
        assert len(cleaned) <= len(stream)

    def test_original_indices_retained(self):
        stream = remove_stop_words(lemmatize(tokenize("the encryption of the data")))
        assert [t.index for t in stream.tokens] == [1, 2, 4]


@pytest.fixture(scope="module")
def fixture_entities():
    stream = remove_stop_words(lemmatize(tokenize(fixture_text())))
    return stream, recognize_entities(stream)


class TestRecognizeEntities:
    def surfaces(self, entities, entity_type):
        return {e.surface for e in entities if e.entity_type == entity_type}

    def test_roles(self, fixture_entities):
        _, entities = fixture_entities
        assert self.surfaces(entities, "Role") == EXPECTED_ROLES

    def test_legal(self, fixture_entities):
        _, entities = fixture_entities
        assert self.surfaces(entities, "Legal") == EXPECTED_LEGAL

    def test_data_entities(self, fixture_entities):
        _, entities = fixture_entities
        assert self.surfaces(entities, "DataCategory") == EXPECTED_DATA_CATEGORIES
        assert self.surfaces(entities, "DataMedia") == EXPECTED_DATA_MEDIA

    def test_actions(self, fixture_entities):
        _, entities = fixture_entities
        assert self.surfaces(entities, "Action") == EXPECTED_ACTIONS

    def test_no_constraints_in_fixture(self, fixture_entities):
        _, entities = fixture_entities
        assert self.surfaces(entities, "Constraint") == EXPECTED_CONSTRAINTS

    def test_spans_never_overlap(self, fixture_entities):
        _, entities = fixture_entities
        seen: set[tuple[int, int]] = set()
        for e in entities:
            sent, start, end = e.span
            assert start <= end
            positions = {(sent, i) for i in range(start, end + 1)}
            assert not positions & seen
            seen |= positions

    def test_spans_within_stream(self, fixture_entities):
        stream, entities = fixture_entities
        indices = {t.index for t in stream.tokens}
        for e in entities:
            assert e.span[1] in indices and e.span[2] in indices


class TestExtractRelations:
    def test_fixture_rows_exact(self, fixture_entities):
        stream, entities = fixture_entities
        relations = extract_relations(entities, stream)
        rows = [(tuple(e.surface for e in r.action_group), r.modifier) for r in relations]
        assert rows == EXPECTED_RELATIONS

    def test_groups_are_single_sentence(self, fixture_entities):
        stream, entities = fixture_entities
        for rel in extract_relations(entities, stream):
            assert len({e.span[0] for e in rel.action_group}) == 1


class TestMapText:
    def test_fixture_maps_to_golden_policy(self):
        policies = map_text(fixture_text())
        assert len(policies) == 1
        mapped = policies[0]
        assert validate_policy(mapped).valid

        golden = load_policy(
            resources.files("cbcms.data").joinpath("fixtures/gdpr_art32_1.pdl.json")
        )
        assert mapped.policy_name == golden.policy_name
        assert mapped.condition == golden.condition
        assert mapped.action == golden.action

    def test_empty_text(self):
        assert map_text("") == []

    def test_repeated_text_two_policies_distinct_ids(self):
        text = fixture_text().strip()
        policies = map_text(text + " " + text)
        assert len(policies) == 2
        a, b = policies
        assert a.policy_id != b.policy_id
        assert a.policy_name == b.policy_name
        assert a.condition == b.condition
        assert a.action == b.action

    def test_determinism_modulo_ids(self):
        first = map_text(fixture_text())
        second = map_text(fixture_text())
        assert [(p.policy_name, p.condition, p.action) for p in first] == [
            (p.policy_name, p.condition, p.action) for p in second
        ]

    def test_no_issues_on_fixture(self):
        result = analyze(fixture_text())
        assert result.issues == []

    def test_stipulation_when_no_law(self):
        policies = map_text("The owner requires encryption of personal data.")
        assert len(policies) == 1
        basis = policies[0].condition.legal_basis
        assert basis.owner_stipulation is not None
        assert basis.law is None

    def test_pipl_text_maps_to_pipl_labels(self):
        policies = map_text(
            "Under PIPL the processor shall apply encryption and pseudonymisation to personal information."
        )
        assert len(policies) == 1
        p = policies[0]
        assert p.condition.legal_basis.law == "PIPL"
        assert "Data Encryption" in p.action.security_measures
        assert "Data De-identification" in p.action.security_measures


class TestLexicon:
    def test_default_loads(self):
        lex = default_lexicon()
        assert "of" in lex.protected_prepositions
        assert lex.max_term_len >= 3

    def test_duplicate_terms_rejected(self):
        with pytest.raises(Exception):
            Lexicon({"roles": {"controller": "controller"}, "laws": {"controller": "GDPR"}})

    def test_unknown_jurisdiction_in_actions_rejected(self):
        with pytest.raises(Exception):
            Lexicon({"actions": {"foo": ["LGPD:Something"]}})
