"""Accuracy metrics, confusion analysis, the final-period inference shim,
and paired bootstrap significance testing."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .data import Corpus, CorpusStats, Sentence, Token
from .model import TaggerModel, tag_sentence
from .tags import NUM_TAGS, PosTag


class AlignmentMismatchError(ValueError):
    """Predictions do not line up with the gold corpus; names the first
    offending sentence."""

    def __init__(self, message: str, sentence_id: str | None = None):
        super().__init__(message)
        self.sentence_id = sentence_id


@dataclass
class EvalReport:
    token_accuracy: float
    sequence_accuracy: float
    confusion: np.ndarray  # (17, 17) counts, rows gold, columns predicted
    per_tag_precision_recall: dict[PosTag, tuple[float, float]]

    @property
    def token_count(self) -> int:
        return int(self.confusion.sum())

    def to_dict(self) -> dict:
        return {
            "token_accuracy": self.token_accuracy,
            "sequence_accuracy": self.sequence_accuracy,
            "confusion": self.confusion.tolist(),
            "per_tag_precision_recall": {
                tag.name: {"precision": p, "recall": r}
                for tag, (p, r) in self.per_tag_precision_recall.items()
            },
        }


def _check_aligned(gold: Corpus, pred: Sequence[Sequence[PosTag]], label: str) -> None:
    if len(pred) != len(gold):
        raise AlignmentMismatchError(
            f"{label}: {len(pred)} predicted sentences for {len(gold)} gold sentences"
        )
    for sentence, tags in zip(gold, pred):
        if len(tags) != len(sentence):
            raise AlignmentMismatchError(
                f"{label}: sentence {sentence.id!r} has {len(sentence)} tokens "
                f"but {len(tags)} predicted tags",
                sentence_id=sentence.id,
            )


def evaluate(gold: Corpus, pred: Sequence[Sequence[PosTag]]) -> EvalReport:
    """Token accuracy, sequence ("headline") accuracy, confusion counts, and
    per-tag precision/recall."""
    _check_aligned(gold, pred, "evaluate")
    confusion = np.zeros((NUM_TAGS, NUM_TAGS), dtype=np.int64)
    seq_correct = 0
    for sentence, tags in zip(gold, pred):
        ok = True
        for g, p in zip(sentence.tags, tags):
            confusion[int(g), int(p)] += 1
            ok = ok and g == p
        seq_correct += int(ok)
    total = int(confusion.sum())
    diag = int(np.trace(confusion))
    per_tag: dict[PosTag, tuple[float, float]] = {}
    col_sums = confusion.sum(axis=0)
    row_sums = confusion.sum(axis=1)
    for tag in PosTag:
        hits = confusion[int(tag), int(tag)]
        precision = hits / col_sums[int(tag)] if col_sums[int(tag)] else 0.0
        recall = hits / row_sums[int(tag)] if row_sums[int(tag)] else 0.0
        per_tag[tag] = (float(precision), float(recall))
    return EvalReport(
        token_accuracy=diag / total,
        sequence_accuracy=seq_correct / len(gold),
        confusion=confusion,
        per_tag_precision_recall=per_tag,
    )


def confusion_diff(a: EvalReport, b: EvalReport) -> np.ndarray:
    """Elementwise a.confusion - b.confusion; both reports must cover the
    same gold corpus (equal token totals).  Entries sum to zero."""
    if a.token_count != b.token_count:
        raise AlignmentMismatchError(
            f"confusion_diff: reports cover {a.token_count} vs {b.token_count} tokens"
        )
    return a.confusion.astype(np.int64) - b.confusion.astype(np.int64)


def with_final_period(sentence: Sentence) -> Sentence:
    """Append a final "." token (always; idempotence is not assumed).

    Mitigates the register mismatch when a body-trained tagger runs on
    headlines; the caller drops the final predicted tag.
    """
    tag = PosTag.PUNCT if sentence.is_tagged else None
    return replace(sentence, tokens=sentence.tokens + (Token(".", tag),))


def tag_with_final_period(
    model: TaggerModel, sentence: Sentence, domain
) -> list[PosTag]:
    """Tag with the final-period shim; output length matches the input."""
    pred = tag_sentence(model, with_final_period(sentence), domain)
    return pred[:-1]


@dataclass
class BootstrapConfig:
    batch_fraction: float = 0.2
    replications: int = 2000
    alpha: float = 0.01
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.batch_fraction <= 1.0:
            raise ValueError("batch_fraction must be in (0, 1]")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")

    def to_dict(self) -> dict:
        return {
            "batch_fraction": self.batch_fraction,
            "replications": self.replications,
            "alpha": self.alpha,
            "seed": self.seed,
        }


@dataclass
class BootstrapResult:
    p_value: float
    significant: bool
    observed_delta: float

    def to_dict(self) -> dict:
        return {
            "p_value": self.p_value,
            "significant": self.significant,
            "observed_delta": self.observed_delta,
        }


def bootstrap_compare(
    gold: Corpus,
    pred_a: Sequence[Sequence[PosTag]],
    pred_b: Sequence[Sequence[PosTag]],
    cfg: BootstrapConfig,
) -> BootstrapResult:
    """One-sided paired bootstrap on sentence resamples.

    observed_delta is tokenAcc(b) - tokenAcc(a) over the full corpus.  Each
    replication redraws ceil(batch_fraction * N) sentences with replacement
    (replication r uses the substream (seed, r)) and recomputes the delta;
    the add-one-smoothed p-value is (1 + #{delta <= 0}) / (1 + replications).
    """
    _check_aligned(gold, pred_a, "pred_a")
    _check_aligned(gold, pred_b, "pred_b")
    n = len(gold)
    tokens = np.empty(n, dtype=np.int64)
    correct_a = np.empty(n, dtype=np.int64)
    correct_b = np.empty(n, dtype=np.int64)
    for i, sentence in enumerate(gold):
        tokens[i] = len(sentence)
        correct_a[i] = sum(p == g for p, g in zip(pred_a[i], sentence.tags))
        correct_b[i] = sum(p == g for p, g in zip(pred_b[i], sentence.tags))
    observed = (correct_b.sum() - correct_a.sum()) / tokens.sum()
    sample_size = math.ceil(cfg.batch_fraction * n)
    not_better = 0
    for r in range(cfg.replications):
        rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, r]))
        idx = rng.integers(0, n, size=sample_size)
        # Both systems share the resample's token total, so the sign of the
        # accuracy delta is the sign of the correct-count delta.
        delta = correct_b[idx].sum() - correct_a[idx].sum()
        if delta <= 0:
            not_better += 1
    p_value = (1 + not_better) / (1 + cfg.replications)
    return BootstrapResult(
        p_value=p_value,
        significant=p_value < cfg.alpha,
        observed_delta=float(observed),
    )


def emit_tag_distribution(stats_list: Sequence[tuple[str, CorpusStats]]) -> str:
    """CSV of per-corpus tag unigram frequencies, tags in fixed code order."""
    if not stats_list:
        raise ValueError("emit_tag_distribution needs at least one corpus")
    names = [name for name, _ in stats_list]
    lines = ["tag," + ",".join(names)]
    for tag in PosTag:
        freqs = [stats.tag_unigram.get(tag, 0.0) for _, stats in stats_list]
        lines.append(tag.name + "," + ",".join(repr(f) for f in freqs))
    return "\n".join(lines) + "\n"
