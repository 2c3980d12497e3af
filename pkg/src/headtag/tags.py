"""The 17-tag universal POS vocabulary used as the label space everywhere."""
from __future__ import annotations

import enum


class PosTag(enum.IntEnum):
    """Universal POS tags with stable integer codes 0..16 (alphabetical order).

    The codes index every tag-dimensioned matrix in the package (emissions,
    transitions, confusion counts), so the ordering must never change.
    """

    ADJ = 0
    ADP = 1
    ADV = 2
    AUX = 3
    CCONJ = 4
    DET = 5
    INTJ = 6
    NOUN = 7
    NUM = 8
    PART = 9
    PRON = 10
    PROPN = 11
    PUNCT = 12
    SCONJ = 13
    SYM = 14
    VERB = 15
    X = 16

    @classmethod
    def parse(cls, text: str) -> "PosTag":
        try:
            return cls[text]
        except KeyError:
            raise ValueError(f"unknown POS tag {text!r}") from None


NUM_TAGS = len(PosTag)

TAG_NAMES = tuple(tag.name for tag in PosTag)
