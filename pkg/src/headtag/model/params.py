"""Parameter layout and initialization for the BiGRU-CRF tagger.

All parameters live in one flat name -> float64 array mapping so the
optimizer, gradient checks, and serialization can treat them uniformly.
Decoder heads (emission projection + CRF scores) are per-domain; everything
else is shared.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import IO, Iterable, Mapping, Sequence

import numpy as np

from ..data import DomainId, Vocabulary


@dataclass(frozen=True)
class ModelDims:
    """Layer widths.  Defaults give the full-size tagger: 50-wide word
    vectors plus a 50-wide character summary (25 per direction) feeding a
    2-layer BiGRU with 100 units per direction."""

    word_dim: int = 50
    char_dim: int = 25
    char_hidden: int = 25
    enc_hidden: int = 100
    enc_layers: int = 2
    n_tags: int = 17

    @property
    def token_dim(self) -> int:
        return self.word_dim + 2 * self.char_hidden

    @property
    def state_dim(self) -> int:
        return 2 * self.enc_hidden

    def to_dict(self) -> dict:
        return {
            "word_dim": self.word_dim,
            "char_dim": self.char_dim,
            "char_hidden": self.char_hidden,
            "enc_hidden": self.enc_hidden,
            "enc_layers": self.enc_layers,
            "n_tags": self.n_tags,
        }


@dataclass
class DomainHead:
    """One domain's decoder: emission projection plus CRF scores (views
    into the model's parameter map)."""

    emission_w: np.ndarray  # (n_tags, state_dim)
    emission_b: np.ndarray  # (n_tags,)
    transitions: np.ndarray  # (n_tags, n_tags); [i, j] scores j following i
    start: np.ndarray  # (n_tags,)
    end: np.ndarray  # (n_tags,)


HEAD_FIELDS = ("emission_w", "emission_b", "transitions", "start", "end")


def head_param_names(domain_name: str) -> list[str]:
    return [f"head.{domain_name}.{f}" for f in HEAD_FIELDS]


def _gru_param_specs(prefix: str, in_dim: int, hidden: int) -> list[tuple[str, tuple[int, ...]]]:
    return [
        (f"{prefix}.w_ih", (3 * hidden, in_dim)),
        (f"{prefix}.w_hh", (3 * hidden, hidden)),
        (f"{prefix}.b_ih", (3 * hidden,)),
        (f"{prefix}.b_hh", (3 * hidden,)),
    ]


def param_specs(
    dims: ModelDims, vocab: Vocabulary, domain_names: Sequence[str]
) -> list[tuple[str, tuple[int, ...]]]:
    """Ordered (name, shape) list covering every trainable tensor."""
    specs: list[tuple[str, tuple[int, ...]]] = [
        ("word_emb", (vocab.n_words, dims.word_dim)),
        ("char_emb", (vocab.n_chars, dims.char_dim)),
    ]
    specs += _gru_param_specs("char_fwd", dims.char_dim, dims.char_hidden)
    specs += _gru_param_specs("char_bwd", dims.char_dim, dims.char_hidden)
    for layer in range(dims.enc_layers):
        in_dim = dims.token_dim if layer == 0 else dims.state_dim
        specs += _gru_param_specs(f"enc{layer}_fwd", in_dim, dims.enc_hidden)
        specs += _gru_param_specs(f"enc{layer}_bwd", in_dim, dims.enc_hidden)
    for name in domain_names:
        specs += [
            (f"head.{name}.emission_w", (dims.n_tags, dims.state_dim)),
            (f"head.{name}.emission_b", (dims.n_tags,)),
            (f"head.{name}.transitions", (dims.n_tags, dims.n_tags)),
            (f"head.{name}.start", (dims.n_tags,)),
            (f"head.{name}.end", (dims.n_tags,)),
        ]
    return specs


def init_params(
    dims: ModelDims,
    vocab: Vocabulary,
    domain_names: Sequence[str],
    rng: np.random.Generator,
) -> dict[str, np.ndarray]:
    """Embeddings U[-0.1, 0.1]; GRU weights U[-1/sqrt(H), 1/sqrt(H)];
    emission weights Glorot; CRF scores and biases zero."""
    params: dict[str, np.ndarray] = {}
    for name, shape in param_specs(dims, vocab, domain_names):
        if name in ("word_emb", "char_emb"):
            params[name] = rng.uniform(-0.1, 0.1, size=shape)
        elif ".w_ih" in name or ".w_hh" in name:
            hidden = shape[0] // 3
            k = 1.0 / math.sqrt(hidden)
            params[name] = rng.uniform(-k, k, size=shape)
        elif name.endswith(".emission_w"):
            limit = math.sqrt(6.0 / (shape[0] + shape[1]))
            params[name] = rng.uniform(-limit, limit, size=shape)
        else:
            params[name] = np.zeros(shape)
    return params


@dataclass
class TaggerModel:
    """Shared embeddings/encoder plus one decoder head per domain."""

    dims: ModelDims
    vocab: Vocabulary
    domains: dict[str, DomainId]
    params: dict[str, np.ndarray]
    use_crf: bool = True

    def __post_init__(self):
        if not self.domains:
            raise ValueError("a tagger needs at least one domain head")
        for name in self.domains:
            for pname in head_param_names(name):
                if pname not in self.params:
                    raise ValueError(f"missing head parameter {pname!r}")

    @property
    def domain_names(self) -> list[str]:
        return [d.name for d in sorted(self.domains.values(), key=lambda d: d.index)]

    def resolve_domain(self, domain: DomainId | str) -> DomainId:
        name = domain.name if isinstance(domain, DomainId) else domain
        if name not in self.domains:
            raise ValueError(f"unknown domain {name!r}; model has {self.domain_names}")
        return self.domains[name]

    def head(self, domain: DomainId | str) -> DomainHead:
        name = self.resolve_domain(domain).name
        return DomainHead(
            *(self.params[f"head.{name}.{f}"] for f in HEAD_FIELDS)
        )


def zero_grads(params: Mapping[str, np.ndarray]) -> dict[str, np.ndarray]:
    return {name: np.zeros_like(arr) for name, arr in params.items()}


def read_word_vectors(source: str | IO[str] | Iterable[str], dim: int) -> dict[str, np.ndarray]:
    """Read pretrained vectors in the plain text format: token followed by
    `dim` space-separated decimals per line."""
    lines = source.splitlines() if isinstance(source, str) else source
    vectors: dict[str, np.ndarray] = {}
    for line_no, raw in enumerate(lines, start=1):
        line = raw.rstrip("\n")
        if not line:
            continue
        parts = line.split(" ")
        if len(parts) != dim + 1:
            raise ValueError(
                f"line {line_no}: expected a token and {dim} values, got {len(parts)} fields"
            )
        try:
            vectors[parts[0]] = np.array([float(v) for v in parts[1:]])
        except ValueError:
            raise ValueError(f"line {line_no}: non-numeric vector component") from None
    return vectors


def apply_word_vectors(model: TaggerModel, vectors: Mapping[str, np.ndarray]) -> int:
    """Overwrite word-embedding rows for vocabulary words present in
    `vectors` (matched on the lowercased form).  Returns the hit count."""
    table = model.params["word_emb"]
    hits = 0
    for word, wid in model.vocab.word_to_id.items():
        vec = vectors.get(word)
        if vec is None:
            continue
        if vec.shape != (model.dims.word_dim,):
            raise ValueError(
                f"vector for {word!r} has width {vec.shape[0]}, "
                f"expected {model.dims.word_dim}"
            )
        table[wid] = vec
        hits += 1
    return hits


def build_model(
    vocab: Vocabulary,
    domains: Sequence[DomainId],
    dims: ModelDims = ModelDims(),
    use_crf: bool = True,
    seed: int = 0,
    word_vectors: Mapping[str, np.ndarray] | None = None,
) -> TaggerModel:
    from ..rng import stream

    names = [d.name for d in domains]
    if len(set(names)) != len(names):
        raise ValueError(f"duplicate domain names: {names}")
    params = init_params(dims, vocab, names, stream(seed, "model-init"))
    model = TaggerModel(
        dims=dims,
        vocab=vocab,
        domains={d.name: d for d in domains},
        params=params,
        use_crf=use_crf,
    )
    if word_vectors is not None:
        apply_word_vectors(model, word_vectors)
    return model
