"""End-to-end tagging and the training objective."""
from __future__ import annotations

from typing import Sequence

import numpy as np

from ..data import DomainId, Sentence
from ..tags import PosTag
from . import crf, network
from .params import TaggerModel, zero_grads


def tag_sentence(
    model: TaggerModel, sentence: Sentence, domain: DomainId | str
) -> list[PosTag]:
    """Embed, encode (eval mode), project under the domain's head, decode."""
    head = model.head(domain)
    x = network.embed_tokens(model, sentence)
    states = network.encode(model, x)
    e = network.emissions(states, head)
    if model.use_crf:
        return crf.viterbi_decode(e, head)
    return crf.softmax_decode(e)


def tag_corpus(model: TaggerModel, corpus, domain: DomainId | str) -> list[list[PosTag]]:
    return [tag_sentence(model, s, domain) for s in corpus]


def loss_and_gradient(
    model: TaggerModel,
    batch: Sequence[tuple[Sentence, DomainId | str]],
    dropout_rate: float = 0.0,
    rng: np.random.Generator | None = None,
):
    """Mean sentence loss over the batch and gradients for every parameter.

    The loss is the negative CRF log-likelihood (or summed per-token
    cross-entropy when use_crf is off).  Each sentence routes to its
    domain's head; heads unused by the batch keep zero gradients.  Dropout
    is active only when dropout_rate > 0 and an rng is supplied; it is
    applied between encoder layers and on the states feeding the emission
    projection.
    """
    if not batch:
        raise ValueError("empty batch")
    grads = zero_grads(model.params)
    training = dropout_rate > 0.0
    if training and rng is None:
        raise ValueError("dropout_rate > 0 requires an rng")
    total = 0.0
    scale = 1.0 / len(batch)
    for sentence, domain in batch:
        if not sentence.is_tagged:
            raise ValueError(f"sentence {sentence.id!r} has no gold tags")
        dom = model.resolve_domain(domain)
        head = model.head(dom)
        codes = np.array([int(t) for t in sentence.tags], dtype=np.int64)

        x, emb_cache = network.embed_forward(
            sentence.forms, model.params, model.dims, model.vocab
        )
        states, enc_cache = network.encode_forward(
            x, model.params, model.dims, dropout_rate, training, rng
        )
        proj_mask = None
        if training:
            proj_mask = (rng.random(states.shape) >= dropout_rate) / (1.0 - dropout_rate)
            states = states * proj_mask
        e = network.emissions(states, head)

        if model.use_crf:
            nll, de, dtrans, dstart, dend = crf.crf_nll_and_grads(e, codes, head)
            grads[f"head.{dom.name}.transitions"] += scale * dtrans
            grads[f"head.{dom.name}.start"] += scale * dstart
            grads[f"head.{dom.name}.end"] += scale * dend
        else:
            nll, de = crf.softmax_nll_and_grads(e, codes)
        total += nll

        de = de * scale
        grads[f"head.{dom.name}.emission_w"] += de.T @ states
        grads[f"head.{dom.name}.emission_b"] += de.sum(axis=0)
        dstates = de @ head.emission_w
        if proj_mask is not None:
            dstates = dstates * proj_mask
        dx = network.encode_backward(dstates, enc_cache, model.params, model.dims, grads)
        network.embed_backward(dx, emb_cache, model.params, model.dims, grads)
    return total * scale, grads
