"""Deterministic text-to-policy mapping pipeline.

Stages: tokenize -> lemmatize -> remove stop words -> lexicon NER ->
relation extraction -> field mapping -> validate/adjust.  Entity
recognition is longest-match over an editable lexicon of lemma-form terms;
relation extraction groups coordinated action terms and resolves each
group's modifier from the surrounding prepositional structure.  No
statistical models: identical input text always maps to structurally
identical policies (policy ids are freshly generated).

Tie-break rules for relation extraction, chosen so that coordinated legal
prose resolves the way a human reader groups it:

1. Two action terms merge into one group when joined by coordinators
   (comma / "and" / "or"), or when they became adjacent only because stop
   words between them were removed ("evaluating the effectiveness").
   Directly adjacent action terms do not merge ("technical incident"):
   the trailing noun is the group's modifier instead.
2. A group's modifier is, in order: the entity run of the first following
   protected preposition ("of personal data"), the immediately following
   unmerged action noun, or the nearest preceding data-category/media
   entity in the same clause segment.  Groups with no resolvable modifier
   contribute their actions to the policy but emit no relation.
"""

from __future__ import annotations

import json
import re
import uuid
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .labels import JURISDICTIONS, LABEL_SPACE
from .policy import (
    ActionSet,
    Condition,
    Issue,
    LegalBasis,
    Policy,
    adjust_policy,
    validate_policy,
)

ENTITY_TYPES = ("Role", "Legal", "DataCategory", "DataMedia", "Constraint", "Action")

UNMAPPED_ACTION = "UNMAPPED_ACTION"
DROPPED_POLICY = "DROPPED_POLICY"

_COORDINATORS = {",", "and", "or"}
_TERMINALS = {".", "!", "?"}
_SEGMENT_BREAKS = {";", ":"}
_ENUM_RE = re.compile(r"^\([A-Za-z0-9]\)$")
_CLAUSE_REF_RE = re.compile(r"^\d+(\(\d+\))*$")

_TOKEN_RE = re.compile(
    r"""
    \w+\([\w.]+\)          # clause references like 32(1)
  | \([A-Za-z0-9]\)        # enumeration markers like (a)
  | \w+(?:[-']\w+)*        # words, including hyphenated compounds
  | [^\w\s]                # any other punctuation, one char at a time
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    surface: str
    lemma: str
    sentence: int
    index: int


@dataclass(frozen=True)
class TokenStream:
    tokens: tuple[Token, ...]
    n_sentences: int

    def __len__(self) -> int:
        return len(self.tokens)

    def sentence_tokens(self, sentence: int) -> list[Token]:
        return [t for t in self.tokens if t.sentence == sentence]

    def sentence_text(self, sentence: int) -> str:
        return " ".join(t.surface for t in self.sentence_tokens(sentence))


@dataclass(frozen=True)
class Entity:
    entity_type: str
    surface: str
    span: tuple[int, int, int]  # (sentence, first token index, last token index)
    norm: str  # canonical code / term key of the matched lexicon entry


@dataclass(frozen=True)
class Relation:
    action_group: tuple[Entity, ...]
    modifier: str


@dataclass(frozen=True)
class ActionRule:
    labels: dict[str, tuple[str, ...]]  # law -> label names
    modifier_any: tuple[str, ...] = ()

    def matches(self, modifier: str | None) -> bool:
        if not self.modifier_any:
            return True
        if modifier is None:
            return False
        folded = modifier.casefold()
        return any(term in folded for term in self.modifier_any)


class LexiconError(ValueError):
    pass


class Lexicon:
    """Per-entity-type term lists plus the action-to-label mapping table."""

    def __init__(self, doc: dict):
        self.stop_words = frozenset(doc.get("stop_words", ()))
        self.protected_prepositions = frozenset(doc.get("protected_prepositions", ()))
        self._terms: dict[str, dict[tuple[str, ...], str]] = {}
        for entity_type, key in [
            ("Role", "roles"),
            ("Legal", "laws"),
            ("DataCategory", "data_categories"),
            ("DataMedia", "data_media"),
            ("Constraint", "constraints"),
        ]:
            table = {}
            for term, norm in doc.get(key, {}).items():
                table[tuple(term.split())] = norm
            self._terms[entity_type] = table

        actions: dict[tuple[str, ...], str] = {}
        self.action_rules: dict[str, tuple[ActionRule, ...]] = {}
        for term, value in doc.get("actions", {}).items():
            actions[tuple(term.split())] = term
            self.action_rules[term] = self._parse_rules(term, value)
        self._terms["Action"] = actions

        self.max_term_len = max(
            (len(t) for table in self._terms.values() for t in table), default=1
        )
        seen: dict[tuple[str, ...], str] = {}
        for entity_type, table in self._terms.items():
            for term in table:
                if term in seen:
                    raise LexiconError(f"term {' '.join(term)!r} in both {seen[term]} and {entity_type}")
                seen[term] = entity_type

    @staticmethod
    def _parse_rules(term: str, value) -> tuple[ActionRule, ...]:
        if isinstance(value, list) and all(isinstance(v, str) for v in value):
            labels: dict[str, list[str]] = {}
            for qualified in value:
                jur, _, name = qualified.partition(":")
                if jur not in JURISDICTIONS or not name:
                    raise LexiconError(f"action {term!r}: bad qualified label {qualified!r}")
                labels.setdefault(jur, []).append(name)
            return (ActionRule({j: tuple(v) for j, v in labels.items()}),)
        rules = []
        for rule_doc in value:
            labels = {
                jur: tuple(names) for jur, names in rule_doc.get("labels", {}).items()
            }
            for jur in labels:
                if jur not in JURISDICTIONS:
                    raise LexiconError(f"action {term!r}: unknown jurisdiction {jur!r}")
            rules.append(ActionRule(labels, tuple(rule_doc.get("modifier_any", ()))))
        if not rules:
            raise LexiconError(f"action {term!r} has no rules")
        return tuple(rules)

    def term_match(self, lemmas: tuple[str, ...]) -> tuple[str, str] | None:
        """Return (entity_type, norm) for an exact lemma-sequence match."""
        for entity_type in ENTITY_TYPES:
            table = self._terms.get(entity_type)
            if table and lemmas in table:
                return entity_type, table[lemmas]
        return None

    def is_action_term(self, lemmas: tuple[str, ...]) -> bool:
        return lemmas in self._terms["Action"]

    @classmethod
    def from_file(cls, path: str | Path) -> "Lexicon":
        return cls(json.loads(Path(path).read_text(encoding="utf-8")))

    @classmethod
    def default(cls) -> "Lexicon":
        text = resources.files("cbcms.data").joinpath("lexicon.json").read_text(encoding="utf-8")
        return cls(json.loads(text))


_DEFAULT_LEXICON: Lexicon | None = None


def default_lexicon() -> Lexicon:
    global _DEFAULT_LEXICON
    if _DEFAULT_LEXICON is None:
        _DEFAULT_LEXICON = Lexicon.default()
    return _DEFAULT_LEXICON


def tokenize(text: str) -> TokenStream:
    """Split text into word/punctuation tokens with sentence indices.

    Sentences end at terminal punctuation; clause references like "32(1)"
    and enumeration markers like "(a)" stay single tokens.
    """
    tokens: list[Token] = []
    sentence = 0
    for match in _TOKEN_RE.finditer(text):
        surface = match.group()
        tokens.append(Token(surface=surface, lemma="", sentence=sentence, index=len(tokens)))
        if surface in _TERMINALS:
            sentence += 1
    n_sentences = tokens[-1].sentence + 1 if tokens else 0
    return TokenStream(tuple(tokens), n_sentences)


_LEMMA_EXCEPTIONS = {
    "data": "data",
    "processing": "processing",
    "media": "media",
    "analysis": "analysis",
    "basis": "basis",
    "children": "child",
    "men": "man",
    "women": "woman",
}

# -ing/-ed stems whose lemma restores a trailing "e"
_E_RESTORE = {
    "evaluat", "ensur", "includ", "tak", "mak", "stor", "shar", "delet",
    "us", "provid", "requir", "manag", "pseudonymis", "pseudonymiz",
    "anonymis", "anonymiz",
}


def _lemma_of(surface: str) -> str:
    w = surface.lower()
    if not w.isalpha() and "-" not in w:
        return w
    if w in _LEMMA_EXCEPTIONS:
        return _LEMMA_EXCEPTIONS[w]
    if w.endswith("'s"):
        w = w[:-2]
    if w.endswith("ies") and len(w) > 4:
        return w[:-3] + "y"
    if w.endswith("sses"):
        return w[:-2]
    if w.endswith(("xes", "zes", "ches", "shes")) and len(w) > 4:
        return w[:-2]
    if w.endswith("s") and not w.endswith(("ss", "us", "is")) and len(w) > 3:
        return w[:-1]
    for suffix in ("ing", "ed"):
        if w.endswith(suffix) and len(w) > len(suffix) + 2:
            stem = w[: -len(suffix)]
            if stem in _E_RESTORE:
                return stem + "e"
            if len(stem) > 2 and stem[-1] == stem[-2] and stem[-1] not in "lsz":
                return stem[:-1]
            return stem
    return w


def lemmatize(stream: TokenStream) -> TokenStream:
    """Rule-based suffix stripping with an exception table; surfaces kept."""
    tokens = tuple(
        Token(t.surface, _lemma_of(t.surface), t.sentence, t.index) for t in stream.tokens
    )
    return TokenStream(tokens, stream.n_sentences)


def remove_stop_words(stream: TokenStream, lexicon: Lexicon | None = None) -> TokenStream:
    """Drop stop-word tokens, keeping protected prepositions and original indices."""
    lexicon = lexicon or default_lexicon()
    drop = lexicon.stop_words - lexicon.protected_prepositions
    tokens = tuple(t for t in stream.tokens if t.lemma not in drop)
    return TokenStream(tokens, stream.n_sentences)


def _is_word(token: Token) -> bool:
    return bool(token.surface) and (token.surface[0].isalnum() or token.surface[0] in "('")


def _is_coordinator(token: Token) -> bool:
    return token.surface == "," or token.lemma in ("and", "or")


def recognize_entities(stream: TokenStream, lexicon: Lexicon | None = None) -> list[Entity]:
    """Longest-match lexicon scan per sentence; matches never overlap.

    Two extra patterns beyond plain term lookup:
    - law clause references: "Article" followed by a numeric reference
      emits a Legal entity ("Article 32(1)")
    - shared-head coordination: "technical and organisational measures"
      emits one Action entity per coordinated modifier when each modifier
      plus the head is itself a lexicon term
    """
    lexicon = lexicon or default_lexicon()
    entities: list[Entity] = []
    for sentence in range(stream.n_sentences):
        tokens = stream.sentence_tokens(sentence)
        n = len(tokens)
        i = 0
        while i < n:
            tok = tokens[i]

            # clause reference pattern
            if tok.lemma == "article" and i + 1 < n and _CLAUSE_REF_RE.match(tokens[i + 1].surface):
                surface = f"{tok.surface} {tokens[i + 1].surface}"
                entities.append(
                    Entity("Legal", surface, (sentence, tok.index, tokens[i + 1].index), surface)
                )
                i += 2
                continue

            # shared-head coordination ("A and B H" where "A H" and "B H" are terms)
            expansion = _match_coordination(tokens, i, lexicon)
            if expansion is not None:
                new_entities, next_i = expansion
                entities.extend(new_entities)
                i = next_i
                continue

            # longest lexicon match at this position
            matched = False
            for length in range(min(lexicon.max_term_len, n - i), 0, -1):
                lemmas = tuple(t.lemma for t in tokens[i : i + length])
                hit = lexicon.term_match(lemmas)
                if hit is not None:
                    entity_type, norm = hit
                    surface = " ".join(t.surface for t in tokens[i : i + length])
                    entities.append(
                        Entity(entity_type, surface, (sentence, tok.index, tokens[i + length - 1].index), norm)
                    )
                    i += length
                    matched = True
                    break
            if not matched:
                i += 1
    return entities


def _match_coordination(tokens: list[Token], i: int, lexicon: Lexicon):
    if not _is_word(tokens[i]):
        return None
    n = len(tokens)
    modifiers = [i]
    k = i + 1
    while True:
        j = k
        while j < n and _is_coordinator(tokens[j]):
            j += 1
        if j == k or j >= n or not _is_word(tokens[j]):
            break
        modifiers.append(j)
        k = j + 1
    if len(modifiers) < 2 or k >= n or not _is_word(tokens[k]):
        return None
    head = tokens[k]
    for m in modifiers:
        if not lexicon.is_action_term((tokens[m].lemma, head.lemma)):
            return None
    sentence = tokens[i].sentence
    entities = []
    for pos, m in enumerate(modifiers):
        last = pos == len(modifiers) - 1
        span_end = head.index if last else tokens[m].index
        entities.append(
            Entity(
                "Action",
                f"{tokens[m].surface} {head.surface}",
                (sentence, tokens[m].index, span_end),
                f"{tokens[m].lemma} {head.lemma}",
            )
        )
    return entities, k + 1


def _segment_ids(tokens: list[Token]) -> list[int]:
    ids = []
    seg = 0
    for tok in tokens:
        if tok.surface in _SEGMENT_BREAKS or _ENUM_RE.match(tok.surface):
            seg += 1
        ids.append(seg)
    return ids


def extract_relations(
    entities: list[Entity], stream: TokenStream, lexicon: Lexicon | None = None
) -> list[Relation]:
    """Group coordinated action entities and resolve each group's modifier."""
    lexicon = lexicon or default_lexicon()
    relations: list[Relation] = []
    consumed: set[int] = set()  # ids of Action entities used up as modifiers

    for sentence in range(stream.n_sentences):
        tokens = stream.sentence_tokens(sentence)
        if not tokens:
            continue
        seg_ids = _segment_ids(tokens)
        pos_of = {tok.index: p for p, tok in enumerate(tokens)}

        ents = [e for e in entities if e.span[0] == sentence]
        cover: dict[int, Entity] = {}
        for e in ents:
            for p in range(pos_of[e.span[1]], pos_of[e.span[2]] + 1):
                cover[p] = e
        actions = sorted(
            (e for e in ents if e.entity_type == "Action"), key=lambda e: e.span[1]
        )

        def joinable(a: Entity, b: Entity) -> bool:
            pa, pb = pos_of[a.span[2]], pos_of[b.span[1]]
            if seg_ids[pa] != seg_ids[pb]:
                return False
            between = tokens[pa + 1 : pb]
            if between:
                return all(_is_coordinator(t) for t in between)
            # adjacent in the cleaned stream: merge only across removed stop words
            return b.span[1] - a.span[2] > 1

        def entity_run(start: int, seg: int) -> list[int] | None:
            run: list[int] = []
            q = start
            while q < len(tokens) and seg_ids[q] == seg and (q in cover or _is_coordinator(tokens[q])):
                run.append(q)
                q += 1
            while run and run[-1] not in cover:
                run.pop()
            return run if any(p in cover for p in run) else None

        def resolve(group: list[Entity]) -> str | None:
            seg = seg_ids[pos_of[group[0].span[1]]]
            p = pos_of[group[-1].span[2]] + 1
            # R1: first protected preposition whose entity run is non-empty
            q = p
            while q < len(tokens) and seg_ids[q] == seg:
                ent = cover.get(q)
                if ent is not None and ent.entity_type == "Action" and id(ent) not in consumed:
                    break
                if tokens[q].lemma in lexicon.protected_prepositions:
                    run = entity_run(q + 1, seg)
                    if run:
                        for pos in run:
                            ent = cover.get(pos)
                            if ent is not None and ent.entity_type == "Action":
                                consumed.add(id(ent))
                        return " ".join(tokens[pos].surface for pos in run)
                q += 1
            # R2: immediately following unmerged action noun
            if p < len(tokens) and seg_ids[p] == seg:
                ent = cover.get(p)
                if ent is not None and ent.entity_type == "Action" and id(ent) not in consumed:
                    consumed.add(id(ent))
                    return ent.surface
            # R3: nearest preceding data entity in the segment
            q = pos_of[group[0].span[1]] - 1
            while q >= 0 and seg_ids[q] == seg:
                ent = cover.get(q)
                if ent is not None and ent.entity_type in ("DataCategory", "DataMedia"):
                    return ent.surface
                q -= 1
            return None

        i = 0
        while i < len(actions):
            first = actions[i]
            if id(first) in consumed:
                i += 1
                continue
            group = [first]
            j = i + 1
            while j < len(actions) and id(actions[j]) not in consumed and joinable(group[-1], actions[j]):
                group.append(actions[j])
                j += 1
            modifier = resolve(group)
            if modifier is not None:
                relations.append(Relation(tuple(group), modifier))
            i = j

    return relations


@dataclass
class MapResult:
    stream: TokenStream
    entities: list[Entity]
    relations: list[Relation]
    policies: list[Policy]
    issues: list[Issue] = field(default_factory=list)


def map_to_pdl(
    entities: list[Entity],
    relations: list[Relation],
    lexicon: Lexicon | None = None,
    stream: TokenStream | None = None,
) -> tuple[list[Policy], list[Issue]]:
    """Map recognized entities and relations onto PDL policies, one per law
    per sentence (owner-stipulation basis when no law is recognized)."""
    lexicon = lexicon or default_lexicon()
    issues: list[Issue] = []
    policies: list[Policy] = []

    modifier_of: dict[int, str] = {}
    for rel in relations:
        for member in rel.action_group:
            modifier_of[id(member)] = rel.modifier

    sentences = sorted({e.span[0] for e in entities})
    for sentence in sentences:
        ents = [e for e in entities if e.span[0] == sentence]
        laws = [e.norm for e in ents if e.entity_type == "Legal" and e.norm in JURISDICTIONS]
        clauses = [e.surface for e in ents if e.entity_type == "Legal" and e.norm not in JURISDICTIONS]
        action_ents = [e for e in ents if e.entity_type == "Action"]
        if not laws and not action_ents:
            continue

        roles = {e.norm for e in ents if e.entity_type == "Role"} or {"controller", "processor"}
        categories = {e.norm for e in ents if e.entity_type == "DataCategory"} or {"personal_data"}
        constraints = {e.norm for e in ents if e.entity_type == "Constraint"}
        if not constraints or constraints == {"source", "target"} or "both" in constraints:
            scope = "both"
        else:
            scope = next(iter(constraints))

        if laws:
            bases = [
                (law, LegalBasis(law=law, clause="; ".join(dict.fromkeys(clauses)) or None))
                for law in dict.fromkeys(laws)
            ]
        else:
            text = stream.sentence_text(sentence) if stream is not None else "unspecified owner stipulation"
            bases = [(None, LegalBasis(owner_stipulation=text))]

        for law, basis in bases:
            allowed = (law,) if law else JURISDICTIONS
            grouped: dict[str, set[str]] = {}
            for ent in action_ents:
                rules = lexicon.action_rules.get(ent.norm)
                if rules is None:
                    issues.append(
                        Issue(
                            f"sentence[{sentence}]",
                            UNMAPPED_ACTION,
                            f"action term {ent.surface!r} has no mapping entry",
                        )
                    )
                    continue
                modifier = modifier_of.get(id(ent))
                rule = next((r for r in rules if r.matches(modifier)), None)
                if rule is None:
                    continue
                for jur in allowed:
                    for name in rule.labels.get(jur, ()):
                        grouped.setdefault(LABEL_SPACE.category_of(jur, name), set()).add(name)

            if law:
                name = f"{law} {basis.clause}" if basis.clause else f"{law} policy"
            else:
                name = "Owner stipulation"
            policies.append(
                Policy(
                    policy_name=name,
                    policy_id=str(uuid.uuid4()),
                    condition=Condition(
                        roles=frozenset(roles),
                        data_categories=frozenset(categories),
                        legal_basis=basis,
                        jurisdiction_scope=scope,
                    ),
                    action=ActionSet(**{cat: frozenset(v) for cat, v in grouped.items()}),
                )
            )

    return policies, issues


def analyze(text: str, lexicon: Lexicon | None = None) -> MapResult:
    """Run the full pipeline and keep every intermediate product."""
    lexicon = lexicon or default_lexicon()
    stream = remove_stop_words(lemmatize(tokenize(text)), lexicon)
    entities = recognize_entities(stream, lexicon)
    relations = extract_relations(entities, stream, lexicon)
    candidates, issues = map_to_pdl(entities, relations, lexicon, stream)

    policies: list[Policy] = []
    for policy in candidates:
        report = validate_policy(policy)
        if not report.valid:
            policy = adjust_policy(policy)
            report = validate_policy(policy)
        if report.valid:
            policies.append(policy)
        else:
            issues.extend(report.issues)
            issues.append(
                Issue("pipeline", DROPPED_POLICY, f"policy {policy.policy_name!r} failed validation")
            )
    return MapResult(stream, entities, relations, policies, issues)


def map_text(text: str, lexicon: Lexicon | None = None) -> list[Policy]:
    """Map natural-language policy text to validated PDL policies."""
    return analyze(text, lexicon).policies
