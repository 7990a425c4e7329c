"""Cross-border data-transfer compliance engine.

Subpackages by responsibility:

- labels / policy: policy definition language core (vocabulary, validation,
  canonical serialization)
- textmap: deterministic text-to-policy mapping pipeline
- dataset: synthetic annotated-corpus generator with a rule-table oracle
- encoding / forest / metrics / tuning: the compliance policy generation
  model (feature codecs, multi-output random forest, evaluation, CV/grid)
- baseline: the fixed rule-based reference method
- registry: identifier management, stores, conflicts, signatures, audit chain
- service: HTTP compliance-query service
- bench: inference-timing and load-generation harness
"""

__version__ = "0.1.0"

from .labels import LABEL_SPACE, JURISDICTIONS, label_vocabulary  # noqa: F401
from .policy import (  # noqa: F401
    ActionSet,
    Condition,
    LegalBasis,
    Policy,
    ValidationReport,
    adjust_policy,
    canonical_bytes,
    parse_policy,
    validate_policy,
)
