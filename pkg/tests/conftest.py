import random

import pytest

from cbcms.labels import DATA_CATEGORIES, JURISDICTIONS, LABEL_SPACE, ROLES, SCOPES
from cbcms.policy import ActionSet, Condition, LegalBasis, Policy


def make_random_policy(rng: random.Random, stipulation: bool | None = None) -> Policy:
    """Structurally valid random policy for round-trip / property tests."""
    if stipulation is None:
        stipulation = rng.random() < 0.3
    if stipulation:
        basis = LegalBasis(owner_stipulation=f"internal policy #{rng.randrange(10**6)}")
        allowed = JURISDICTIONS
    else:
        law = rng.choice(JURISDICTIONS)
        clause = rng.choice([None, f"Article {rng.randrange(1, 99)}({rng.randrange(1, 9)})"])
        basis = LegalBasis(law=law, clause=clause)
        allowed = (law,)

    actions: dict[str, set[str]] = {}
    for jur in allowed:
        for name in rng.sample(LABEL_SPACE.vocabulary(jur), k=rng.randrange(0, 5)):
            cat = LABEL_SPACE.category_of(jur, name)
            actions.setdefault(cat, set()).add(name)

    return Policy(
        policy_name=f"policy {rng.randrange(10**6)}",
        policy_id=f"{rng.randrange(16**32):032x}",
        condition=Condition(
            roles=frozenset(rng.sample(ROLES, k=rng.randrange(1, len(ROLES) + 1))),
            data_categories=frozenset(
                rng.sample(DATA_CATEGORIES, k=rng.randrange(1, 4))
            ),
            legal_basis=basis,
            jurisdiction_scope=rng.choice(SCOPES),
        ),
        action=ActionSet(**{cat: frozenset(v) for cat, v in actions.items()}),
    )


@pytest.fixture
def policy_factory():
    rng = random.Random(20240901)
    return lambda **kw: make_random_policy(rng, **kw)
