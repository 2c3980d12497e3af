"""Forward and backward passes for the embedding and encoder stages.

Token vectors are the concatenation of a (lowercased) word embedding and the
final states of a single-layer bidirectional GRU over the cased characters.
The encoder stacks bidirectional GRU layers; inverted dropout sits between
layers in training mode.  Backward passes accumulate into a grads mapping
produced by params.zero_grads.
"""
from __future__ import annotations

from typing import Mapping

import numpy as np

from .. import kernels
from ..data import Sentence, Vocabulary
from .params import DomainHead, ModelDims, TaggerModel


def _gru_run(params: Mapping[str, np.ndarray], prefix: str, x: np.ndarray, reverse: bool):
    """One GRU direction over x (T, D); returns per-position states aligned
    with the input plus the cache for backward."""
    w_ih = params[f"{prefix}.w_ih"]
    b_ih = params[f"{prefix}.b_ih"]
    w_hh = params[f"{prefix}.w_hh"]
    b_hh = params[f"{prefix}.b_hh"]
    xs = np.ascontiguousarray(x[::-1]) if reverse else np.ascontiguousarray(x)
    gi = xs @ w_ih.T + b_ih
    h0 = np.zeros(w_hh.shape[1])
    h, r, z, n, ghn = kernels.gru_forward(np.ascontiguousarray(gi), w_hh, b_hh, h0)
    h_out = h[::-1] if reverse else h
    cache = (xs, h, r, z, n, ghn, h0, reverse)
    return h_out, cache


def _gru_run_backward(
    dh_out: np.ndarray,
    cache,
    params: Mapping[str, np.ndarray],
    prefix: str,
    grads: dict[str, np.ndarray],
) -> np.ndarray:
    xs, h, r, z, n, ghn, h0, reverse = cache
    dh = np.ascontiguousarray(dh_out[::-1]) if reverse else np.ascontiguousarray(dh_out)
    w_hh = params[f"{prefix}.w_hh"]
    dgi, dw_hh, db_hh, _dh0 = kernels.gru_backward(dh, h, r, z, n, ghn, w_hh, h0)
    grads[f"{prefix}.w_ih"] += dgi.T @ xs
    grads[f"{prefix}.b_ih"] += dgi.sum(axis=0)
    grads[f"{prefix}.w_hh"] += dw_hh
    grads[f"{prefix}.b_hh"] += db_hh
    dxs = dgi @ params[f"{prefix}.w_ih"]
    return dxs[::-1] if reverse else dxs


def _packed_gru(params, prefix: str, x: np.ndarray, lengths: np.ndarray):
    """One GRU direction over segment-packed sequences; each segment starts
    from a zero state."""
    gi = x @ params[f"{prefix}.w_ih"].T + params[f"{prefix}.b_ih"]
    h, r, z, n, ghn = kernels.gru_forward_packed(
        np.ascontiguousarray(gi), lengths, params[f"{prefix}.w_hh"], params[f"{prefix}.b_hh"]
    )
    return h, (x, h, r, z, n, ghn)


def _packed_gru_backward(dh, lengths, cache, params, prefix: str, grads):
    x, h, r, z, n, ghn = cache
    dgi, dw_hh, db_hh = kernels.gru_backward_packed(
        np.ascontiguousarray(dh), lengths, h, r, z, n, ghn, params[f"{prefix}.w_hh"]
    )
    grads[f"{prefix}.w_ih"] += dgi.T @ x
    grads[f"{prefix}.b_ih"] += dgi.sum(axis=0)
    grads[f"{prefix}.w_hh"] += dw_hh
    grads[f"{prefix}.b_hh"] += db_hh
    return dgi @ params[f"{prefix}.w_ih"]


def _char_summaries(forms: list[str], params, dims: ModelDims, vocab: Vocabulary):
    """Character BiGRU summaries for every token at once.

    Token character sequences are packed end to end so each direction is a
    single kernel call; the summary concatenates the two final states.
    """
    ids = np.array([i for form in forms for i in vocab.char_ids(form)], dtype=np.int64)
    lengths = np.array([len(form) for form in forms], dtype=np.int64)
    ends = np.cumsum(lengths) - 1
    starts = ends - lengths + 1
    # Position p of segment (start s, length l) maps to 2s + l - 1 - p, which
    # reverses characters within each token.
    rev = np.repeat(2 * starts + lengths - 1, lengths) - np.arange(len(ids))
    cvecs = params["char_emb"][ids]
    hf, cache_f = _packed_gru(params, "char_fwd", cvecs, lengths)
    hb, cache_b = _packed_gru(params, "char_bwd", cvecs[rev], lengths)
    summaries = np.concatenate([hf[ends], hb[ends]], axis=1)
    return summaries, (ids, lengths, ends, rev, cache_f, cache_b)


def _char_summaries_backward(dsummaries, cache, params, dims: ModelDims, grads):
    ids, lengths, ends, rev, cache_f, cache_b = cache
    hc = dims.char_hidden
    dh_f = np.zeros((len(ids), hc))
    dh_f[ends] = dsummaries[:, :hc]
    dh_b = np.zeros((len(ids), hc))
    dh_b[ends] = dsummaries[:, hc:]
    dc = _packed_gru_backward(dh_f, lengths, cache_f, params, "char_fwd", grads)
    dc_rev = _packed_gru_backward(dh_b, lengths, cache_b, params, "char_bwd", grads)
    dc[rev] += dc_rev
    np.add.at(grads["char_emb"], ids, dc)


def embed_forward(forms: list[str], params, dims: ModelDims, vocab: Vocabulary):
    if not forms:
        raise ValueError("cannot embed an empty sentence")
    word_ids = np.array([vocab.word_id(f) for f in forms], dtype=np.int64)
    word_vecs = params["word_emb"][word_ids]
    char_vecs, char_cache = _char_summaries(forms, params, dims, vocab)
    x = np.concatenate([word_vecs, char_vecs], axis=1)
    return x, (word_ids, char_cache)


def embed_backward(dx, cache, params, dims: ModelDims, grads):
    word_ids, char_cache = cache
    np.add.at(grads["word_emb"], word_ids, dx[:, : dims.word_dim])
    _char_summaries_backward(dx[:, dims.word_dim :], char_cache, params, dims, grads)


def encode_forward(
    x: np.ndarray,
    params,
    dims: ModelDims,
    dropout_rate: float,
    training: bool,
    rng: np.random.Generator | None,
):
    if x.ndim != 2 or x.shape[1] != dims.token_dim:
        raise ValueError(
            f"encoder expects width {dims.token_dim}, got {x.shape[1] if x.ndim == 2 else x.shape}"
        )
    apply_dropout = training and dropout_rate > 0.0
    if apply_dropout and rng is None:
        raise ValueError("training-mode dropout requires an rng")
    inp = x
    layer_caches = []
    for layer in range(dims.enc_layers):
        hf, cache_f = _gru_run(params, f"enc{layer}_fwd", inp, reverse=False)
        hb, cache_b = _gru_run(params, f"enc{layer}_bwd", inp, reverse=True)
        out = np.concatenate([hf, hb], axis=1)
        mask = None
        if apply_dropout and layer < dims.enc_layers - 1:
            mask = (rng.random(out.shape) >= dropout_rate) / (1.0 - dropout_rate)
            out = out * mask
        layer_caches.append((cache_f, cache_b, mask))
        inp = out
    return inp, layer_caches


def encode_backward(dstates, layer_caches, params, dims: ModelDims, grads):
    d = dstates
    hs = dims.enc_hidden
    for layer in range(dims.enc_layers - 1, -1, -1):
        cache_f, cache_b, _ = layer_caches[layer]
        dxf = _gru_run_backward(d[:, :hs], cache_f, params, f"enc{layer}_fwd", grads)
        dxb = _gru_run_backward(d[:, hs:], cache_b, params, f"enc{layer}_bwd", grads)
        d = dxf + dxb
        if layer > 0:
            mask = layer_caches[layer - 1][2]
            if mask is not None:
                d = d * mask
    return d


def embed_tokens(model: TaggerModel, sentence: Sentence | list[str]) -> np.ndarray:
    """Per-token vectors (T, word_dim + char summary); OOV words fall back to
    the UNK row, characters likewise."""
    forms = sentence.forms if isinstance(sentence, Sentence) else list(sentence)
    x, _ = embed_forward(forms, model.params, model.dims, model.vocab)
    return x


def encode(
    model: TaggerModel,
    vectors: np.ndarray,
    dropout_rate: float = 0.0,
    training: bool = False,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Contextual states (T, 2 * enc_hidden); deterministic in eval mode."""
    states, _ = encode_forward(
        vectors, model.params, model.dims, dropout_rate, training, rng
    )
    return states


def emissions(states: np.ndarray, head: DomainHead) -> np.ndarray:
    """Per-token tag scores (T, n_tags) under one domain's projection."""
    if states.ndim != 2 or states.shape[1] != head.emission_w.shape[1]:
        raise ValueError(
            f"emission projection expects width {head.emission_w.shape[1]}, "
            f"got {states.shape[1] if states.ndim == 2 else states.shape}"
        )
    return states @ head.emission_w.T + head.emission_b
