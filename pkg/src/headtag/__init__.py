"""headtag: multi-domain BiGRU-CRF POS tagging for news headlines.

Builds silver-labeled headline corpora by projecting tags from lead
sentences, trains single- and multi-domain taggers over mixed registers,
and evaluates them with token/headline accuracy and paired bootstrap tests.
"""
from .tags import NUM_TAGS, PosTag

__version__ = "0.1.0"

__all__ = ["NUM_TAGS", "PosTag", "__version__"]
