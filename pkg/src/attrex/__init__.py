"""attrex: attribute-based interpretation of adversarial examples.

Feature-space gradient-sign attacks and adversarial training against a small
softmax classifier, structured-joint-embedding attribute prediction, paired
attribute-distance analysis, and grounding of discriminative attributes
against detection records.
"""

__version__ = "0.1.0"

from attrex.backends import BACKEND_NAME

__all__ = ["BACKEND_NAME", "__version__"]
