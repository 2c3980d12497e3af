"""Align headlines to lead sentences and project tags onto them.

A headline qualifies when it is a (possibly non-contiguous) subsequence of
its lead sentence after lowercasing.  Tags predicted on the lead are copied
to the aligned headline positions, yielding silver training data.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Sequence

from .data import Corpus, DomainId, Sentence, split_corpus
from .tags import PosTag

if TYPE_CHECKING:
    from .model import TaggerModel


class EmptyResultError(RuntimeError):
    """An operation that must produce data produced none."""

    def __init__(self, message: str, report: "SilverCorpusReport | None" = None):
        super().__init__(message)
        self.report = report


@dataclass(frozen=True)
class Alignment:
    """One lead index per headline token, strictly increasing."""

    indices: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "indices", tuple(self.indices))
        for a, b in zip(self.indices, self.indices[1:]):
            if b <= a:
                raise ValueError(f"alignment indices not strictly increasing: {self.indices}")

    def __len__(self) -> int:
        return len(self.indices)


@dataclass(frozen=True)
class AlignedPair:
    headline: Sentence
    lead: Sentence
    alignment: Alignment

    def __post_init__(self):
        if len(self.alignment) != len(self.headline):
            raise ValueError(
                f"alignment length {len(self.alignment)} != headline length {len(self.headline)}"
            )
        if self.alignment.indices and self.alignment.indices[-1] >= len(self.lead):
            raise ValueError(
                f"alignment index {self.alignment.indices[-1]} out of range "
                f"for lead of length {len(self.lead)}"
            )
        for hi, li in enumerate(self.alignment.indices):
            h, l = self.headline.tokens[hi].form, self.lead.tokens[li].form
            if h.lower() != l.lower():
                raise ValueError(f"aligned tokens differ after lowercasing: {h!r} vs {l!r}")


@dataclass
class SilverCorpusReport:
    candidates: int
    aligned: int
    train_count: int
    val_count: int

    def to_dict(self) -> dict:
        return {
            "candidates": self.candidates,
            "aligned": self.aligned,
            "train_count": self.train_count,
            "val_count": self.val_count,
        }


def align_subsequence(
    headline: Sequence[str], lead: Sequence[str]
) -> Alignment | None:
    """Greedy leftmost subsequence match over lowercased forms.

    Greedy success is equivalent to subsequence existence, so None means the
    headline is not a subsequence of the lead.
    """
    if not headline or not lead:
        raise ValueError("align_subsequence requires non-empty token lists")
    lead_lower = [form.lower() for form in lead]
    indices: list[int] = []
    pos = 0
    for form in headline:
        target = form.lower()
        while pos < len(lead_lower) and lead_lower[pos] != target:
            pos += 1
        if pos == len(lead_lower):
            return None
        indices.append(pos)
        pos += 1
    return Alignment(tuple(indices))


def align_pair(headline: Sentence, lead: Sentence) -> AlignedPair | None:
    alignment = align_subsequence(headline.forms, lead.forms)
    if alignment is None:
        return None
    return AlignedPair(headline, lead, alignment)


def project_tags(pair: AlignedPair, lead_tags: Sequence[PosTag]) -> list[PosTag]:
    """Copy lead tags to headline positions through the alignment."""
    if len(lead_tags) != len(pair.lead):
        raise ValueError(
            f"{len(lead_tags)} lead tags for a lead of length {len(pair.lead)}"
        )
    for idx in pair.alignment.indices:
        if idx >= len(lead_tags):
            raise ValueError(f"alignment index {idx} out of range")
    return [lead_tags[idx] for idx in pair.alignment.indices]


SILVER_DOMAIN = DomainId("silver", 0)


def build_silver_corpus(
    pairs: Sequence[tuple[Sentence, Sentence]],
    tagger: "TaggerModel",
    tagger_domain: DomainId,
    train_frac: float,
    seed: int,
    out_domain: DomainId = SILVER_DOMAIN,
) -> tuple[Corpus, Corpus, SilverCorpusReport]:
    """Tag leads, project onto alignable headlines, split train/validation.

    Non-alignable pairs are dropped.  The split is a deterministic seeded
    shuffle; raises EmptyResultError when nothing aligns.
    """
    from .model import tag_sentence

    if not 0.0 < train_frac < 1.0:
        raise ValueError("train_frac must be strictly between 0 and 1")
    silver: list[Sentence] = []
    for headline, lead in pairs:
        pair = align_pair(headline, lead)
        if pair is None:
            continue
        lead_tags = tag_sentence(tagger, lead, tagger_domain)
        tags = project_tags(pair, lead_tags)
        silver.append(headline.with_tags(tags, domain=out_domain))
    report = SilverCorpusReport(
        candidates=len(pairs), aligned=len(silver), train_count=0, val_count=0
    )
    if not silver:
        raise EmptyResultError("no alignable pairs", report)
    corpus = Corpus(tuple(silver), out_domain)
    if len(corpus) == 1:
        # Too small to split; everything becomes training data.
        train, val = corpus, Corpus((), out_domain)
    else:
        train, val = split_corpus(corpus, [train_frac, 1.0 - train_frac], seed)
    report.train_count = len(train)
    report.val_count = len(val)
    return train, val, report
