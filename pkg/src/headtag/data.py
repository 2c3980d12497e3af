"""Treebank and headline-pair data: CoNLL-U I/O, vocabularies, register statistics."""
from __future__ import annotations

import json
import math
import re
from collections import Counter
from dataclasses import dataclass, replace
from typing import IO, Iterable, Sequence

from .rng import stream
from .tags import PosTag


class ConlluParseError(ValueError):
    """Malformed CoNLL-U input, with the offending line number."""

    def __init__(self, message: str, line_no: int):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class PairParseError(ValueError):
    """Malformed pair file (JSON lines), with the offending line number."""

    def __init__(self, message: str, line_no: int):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


@dataclass(frozen=True)
class DomainId:
    """A named training/evaluation register ("ewt", "gscproj", ...)."""

    name: str
    index: int


@dataclass(frozen=True)
class Token:
    form: str
    gold_tag: PosTag | None = None

    def __post_init__(self):
        if not self.form:
            raise ValueError("token form must be non-empty")
        if any(ch.isspace() for ch in self.form):
            raise ValueError(f"token form contains whitespace: {self.form!r}")


@dataclass(frozen=True)
class Sentence:
    """A pre-tokenized sentence; gold tags are all-or-none."""

    id: str
    tokens: tuple[Token, ...]
    domain: DomainId

    def __post_init__(self):
        if not self.tokens:
            raise ValueError(f"sentence {self.id!r} has no tokens")
        object.__setattr__(self, "tokens", tuple(self.tokens))
        tagged = [t.gold_tag is not None for t in self.tokens]
        if any(tagged) and not all(tagged):
            raise ValueError(f"sentence {self.id!r} is partially tagged")

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def forms(self) -> list[str]:
        return [t.form for t in self.tokens]

    @property
    def is_tagged(self) -> bool:
        return self.tokens[0].gold_tag is not None

    @property
    def tags(self) -> list[PosTag]:
        if not self.is_tagged:
            raise ValueError(f"sentence {self.id!r} is untagged")
        return [t.gold_tag for t in self.tokens]

    def with_tags(self, tags: Sequence[PosTag], domain: DomainId | None = None) -> "Sentence":
        """Copy of this sentence with gold tags replaced (and optionally re-homed)."""
        if len(tags) != len(self.tokens):
            raise ValueError(f"{len(tags)} tags for {len(self.tokens)} tokens in {self.id!r}")
        new_tokens = tuple(Token(t.form, tag) for t, tag in zip(self.tokens, tags))
        return Sentence(self.id, new_tokens, domain if domain is not None else self.domain)


@dataclass(frozen=True)
class Corpus:
    sentences: tuple[Sentence, ...]
    domain: DomainId

    def __post_init__(self):
        object.__setattr__(self, "sentences", tuple(self.sentences))
        for s in self.sentences:
            if s.domain != self.domain:
                raise ValueError(
                    f"sentence {s.id!r} has domain {s.domain.name!r}, "
                    f"corpus is {self.domain.name!r}"
                )

    def __len__(self) -> int:
        return len(self.sentences)

    def __iter__(self):
        return iter(self.sentences)

    @property
    def token_count(self) -> int:
        return sum(len(s) for s in self.sentences)


@dataclass
class Vocabulary:
    """Lowercased word ids and cased character ids; id 0 is UNK in both maps."""

    word_to_id: dict[str, int]
    char_to_id: dict[str, int]
    min_freq: int = 1

    UNK_ID = 0

    @property
    def n_words(self) -> int:
        return len(self.word_to_id) + 1

    @property
    def n_chars(self) -> int:
        return len(self.char_to_id) + 1

    def word_id(self, form: str) -> int:
        return self.word_to_id.get(form.lower(), self.UNK_ID)

    def char_ids(self, form: str) -> list[int]:
        return [self.char_to_id.get(ch, self.UNK_ID) for ch in form]


@dataclass
class CorpusStats:
    tag_unigram: dict[PosTag, float]
    type_token_ratio: float
    mean_length: float
    sentence_count: int
    token_count: int

    def to_dict(self) -> dict:
        return {
            "tag_unigram": {tag.name: freq for tag, freq in self.tag_unigram.items()},
            "type_token_ratio": self.type_token_ratio,
            "mean_length": self.mean_length,
            "sentence_count": self.sentence_count,
            "token_count": self.token_count,
        }


# CoNLL-U token lines: 10 tab-separated columns.  Multiword-token ranges
# ("3-4") and empty nodes ("5.1") carry no syntactic words of their own here
# and are skipped.
_RANGE_ID = re.compile(r"^\d+-\d+$")
_EMPTY_NODE_ID = re.compile(r"^\d+\.\d+$")
_WORD_ID = re.compile(r"^\d+$")
_SENT_ID_COMMENT = re.compile(r"^#\s*sent_id\s*=\s*(.*\S)\s*$")


def _iter_lines(source: str | IO[str] | Iterable[str]) -> Iterable[str]:
    if isinstance(source, str):
        return source.splitlines()
    return source


def parse_conllu(source: str | IO[str] | Iterable[str], domain: DomainId) -> Corpus:
    """Parse CoNLL-U text into a Corpus of `domain`.

    FORM comes from column 2, the gold tag from column 4 (UPOS, `_` meaning
    untagged).  `# sent_id = x` comments name the sentence; other comments are
    ignored.  Sentences without an id get sequential ones ("s1", "s2", ...).
    """
    sentences: list[Sentence] = []
    tokens: list[Token] = []
    sent_id: str | None = None

    def flush(line_no: int) -> None:
        nonlocal tokens, sent_id
        if not tokens:
            sent_id = None
            return
        sid = sent_id if sent_id is not None else f"s{len(sentences) + 1}"
        try:
            sentences.append(Sentence(sid, tuple(tokens), domain))
        except ValueError as err:
            raise ConlluParseError(str(err), line_no) from None
        tokens = []
        sent_id = None

    line_no = 0
    for line_no, raw in enumerate(_iter_lines(source), start=1):
        line = raw.rstrip("\n")
        if not line.strip():
            flush(line_no)
            continue
        if line.startswith("#"):
            match = _SENT_ID_COMMENT.match(line)
            if match:
                sent_id = match.group(1)
            continue
        cols = line.split("\t")
        if len(cols) != 10:
            raise ConlluParseError(
                f"expected 10 tab-separated columns, got {len(cols)}", line_no
            )
        tok_id = cols[0]
        if _RANGE_ID.match(tok_id) or _EMPTY_NODE_ID.match(tok_id):
            continue
        if not _WORD_ID.match(tok_id):
            raise ConlluParseError(f"bad token id {tok_id!r}", line_no)
        form, upos = cols[1], cols[3]
        tag = None
        if upos != "_":
            try:
                tag = PosTag.parse(upos)
            except ValueError as err:
                raise ConlluParseError(str(err), line_no) from None
        try:
            tokens.append(Token(form, tag))
        except ValueError as err:
            raise ConlluParseError(str(err), line_no) from None
    flush(line_no + 1)
    return Corpus(tuple(sentences), domain)


def write_conllu(corpus: Corpus) -> str:
    """Serialize a fully tagged corpus; round-trips through parse_conllu."""
    out: list[str] = []
    for sentence in corpus:
        if not sentence.is_tagged:
            raise ValueError(f"cannot write untagged sentence {sentence.id!r}")
        out.append(f"# sent_id = {sentence.id}")
        for i, token in enumerate(sentence.tokens, start=1):
            out.append(f"{i}\t{token.form}\t_\t{token.gold_tag.name}\t_\t_\t_\t_\t_\t_")
        out.append("")
    return "\n".join(out) + "\n" if out else ""


PAIRS_DOMAIN = DomainId("pairs", 0)


def parse_pairs(source: str | IO[str] | Iterable[str]) -> list[tuple[Sentence, Sentence]]:
    """Read candidate (headline, lead) pairs from a JSON-lines stream.

    Each line is an object with `id`, `headline_tokens`, and `lead_tokens`.
    No alignment filtering happens here; order is preserved.
    """
    pairs: list[tuple[Sentence, Sentence]] = []
    for line_no, raw in enumerate(_iter_lines(source), start=1):
        line = raw.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as err:
            raise PairParseError(f"invalid JSON: {err.msg}", line_no) from None
        if not isinstance(obj, dict):
            raise PairParseError("expected a JSON object", line_no)
        for key in ("id", "headline_tokens", "lead_tokens"):
            if key not in obj:
                raise PairParseError(f"missing field {key!r}", line_no)
        pid = str(obj["id"])
        for key in ("headline_tokens", "lead_tokens"):
            toks = obj[key]
            if not isinstance(toks, list) or not toks:
                raise PairParseError(f"{key!r} must be a non-empty array", line_no)
            if not all(isinstance(t, str) for t in toks):
                raise PairParseError(f"{key!r} must contain strings", line_no)
        try:
            headline = Sentence(
                pid, tuple(Token(t) for t in obj["headline_tokens"]), PAIRS_DOMAIN
            )
            lead = Sentence(
                f"{pid}.lead", tuple(Token(t) for t in obj["lead_tokens"]), PAIRS_DOMAIN
            )
        except ValueError as err:
            raise PairParseError(str(err), line_no) from None
        pairs.append((headline, lead))
    return pairs


def write_pairs(pairs: Sequence[tuple[Sentence, Sentence]]) -> str:
    lines = []
    for headline, lead in pairs:
        lines.append(
            json.dumps(
                {
                    "id": headline.id,
                    "headline_tokens": headline.forms,
                    "lead_tokens": lead.forms,
                },
                ensure_ascii=True,
            )
        )
    return "\n".join(lines) + "\n" if lines else ""


def build_vocab(corpora: Sequence[Corpus], min_freq: int = 1) -> Vocabulary:
    """Frequency-then-lexicographic ids; word keys lowercased, char keys cased."""
    if not corpora:
        raise ValueError("build_vocab needs at least one corpus")
    if min_freq < 1:
        raise ValueError("min_freq must be >= 1")
    word_counts: Counter[str] = Counter()
    char_counts: Counter[str] = Counter()
    for corpus in corpora:
        for sentence in corpus:
            for token in sentence.tokens:
                word_counts[token.form.lower()] += 1
                char_counts.update(token.form)
    words = sorted(
        (w for w, c in word_counts.items() if c >= min_freq),
        key=lambda w: (-word_counts[w], w),
    )
    chars = sorted(char_counts, key=lambda c: (-char_counts[c], c))
    return Vocabulary(
        word_to_id={w: i for i, w in enumerate(words, start=1)},
        char_to_id={c: i for i, c in enumerate(chars, start=1)},
        min_freq=min_freq,
    )


def corpus_stats(corpus: Corpus) -> CorpusStats:
    """Tag unigram distribution, type-token ratio, and mean sentence length."""
    if len(corpus) == 0:
        raise ValueError("corpus_stats on an empty corpus")
    n_tokens = corpus.token_count
    types = {t.form.lower() for s in corpus for t in s.tokens}
    tag_counts: Counter[PosTag] = Counter(
        t.gold_tag for s in corpus for t in s.tokens if t.gold_tag is not None
    )
    total_tagged = sum(tag_counts.values())
    unigram = (
        {tag: tag_counts[tag] / total_tagged for tag in sorted(tag_counts)}
        if total_tagged
        else {}
    )
    return CorpusStats(
        tag_unigram=unigram,
        type_token_ratio=len(types) / n_tokens,
        mean_length=n_tokens / len(corpus),
        sentence_count=len(corpus),
        token_count=n_tokens,
    )


def partition_sizes(n: int, fractions: Sequence[float]) -> list[int]:
    """Apportion n items over fractions: floor shares, leftovers by largest
    fractional part (ties to the earlier fold)."""
    if any(f <= 0 for f in fractions):
        raise ValueError("fractions must be positive")
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError(f"fractions sum to {sum(fractions)}, expected 1")
    raw = [f * n for f in fractions]
    sizes = [math.floor(r) for r in raw]
    leftover = n - sum(sizes)
    by_remainder = sorted(range(len(fractions)), key=lambda i: (-(raw[i] - sizes[i]), i))
    for i in by_remainder[:leftover]:
        sizes[i] += 1
    return sizes


def split_corpus(corpus: Corpus, fractions: Sequence[float], seed: int) -> list[Corpus]:
    """Deterministic seeded shuffle followed by a fraction-sized partition."""
    if len(corpus) < len(fractions):
        raise ValueError(
            f"cannot split {len(corpus)} sentences into {len(fractions)} folds"
        )
    sizes = partition_sizes(len(corpus), fractions)
    perm = stream(seed, "corpus-split").permutation(len(corpus))
    shuffled = [corpus.sentences[i] for i in perm]
    folds = []
    offset = 0
    for size in sizes:
        folds.append(Corpus(tuple(shuffled[offset : offset + size]), corpus.domain))
        offset += size
    return folds


def retag_corpus(corpus: Corpus, domain: DomainId) -> Corpus:
    """Re-home a corpus (and its sentences) under a different domain."""
    if corpus.domain == domain:
        return corpus
    return Corpus(tuple(replace(s, domain=domain) for s in corpus), domain)
