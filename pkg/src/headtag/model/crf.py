"""Linear-chain CRF scoring, decoding, and loss gradients.

A path y over emissions e scores
    s(y) = start[y_1] + sum_t e[t, y_t] + sum_t trans[y_t, y_{t+1}] + end[y_T]
and logZ normalizes over all paths.  Gradients of the negative
log-likelihood are expected counts (marginals) minus gold counts.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np

from .. import kernels
from ..tags import PosTag
from .params import DomainHead


def _check_emissions(e: np.ndarray, head: DomainHead) -> np.ndarray:
    e = np.ascontiguousarray(e, dtype=np.float64)
    if e.ndim != 2 or e.shape[0] < 1:
        raise ValueError(f"emissions must be (n, k) with n >= 1, got {e.shape}")
    if e.shape[1] != head.transitions.shape[0]:
        raise ValueError(
            f"emissions have {e.shape[1]} tag columns, head has {head.transitions.shape[0]}"
        )
    if not np.all(np.isfinite(e)):
        raise ValueError("emissions contain non-finite values")
    return e


def _codes(tags: Sequence[PosTag] | Sequence[int] | np.ndarray, n: int) -> np.ndarray:
    codes = np.asarray([int(t) for t in tags], dtype=np.int64)
    if codes.shape != (n,):
        raise ValueError(f"expected {n} tags, got {codes.shape[0]}")
    return codes


def crf_log_partition(e: np.ndarray, head: DomainHead) -> float:
    e = _check_emissions(e, head)
    logz, _ = kernels.crf_forward(e, head.transitions, head.start, head.end)
    return float(logz)


def path_score(e: np.ndarray, tags, head: DomainHead) -> float:
    e = _check_emissions(e, head)
    codes = _codes(tags, e.shape[0])
    score = head.start[codes[0]] + head.end[codes[-1]]
    score += e[np.arange(len(codes)), codes].sum()
    if len(codes) > 1:
        score += head.transitions[codes[:-1], codes[1:]].sum()
    return float(score)


def crf_log_likelihood(e: np.ndarray, tags, head: DomainHead) -> float:
    """log p(tags | e); always <= 0."""
    return path_score(e, tags, head) - crf_log_partition(e, head)


def crf_marginals(e: np.ndarray, head: DomainHead):
    """logZ plus node marginals (T, K) and summed edge marginals (K, K)."""
    e = _check_emissions(e, head)
    logz, alpha = kernels.crf_forward(e, head.transitions, head.start, head.end)
    beta = kernels.crf_backward(e, head.transitions, head.end)
    node = np.exp(alpha + beta - logz)
    T = e.shape[0]
    edge_total = np.zeros_like(head.transitions)
    for t in range(T - 1):
        edge_total += np.exp(
            alpha[t][:, None] + head.transitions + (e[t + 1] + beta[t + 1])[None, :] - logz
        )
    return logz, node, edge_total


def crf_nll_and_grads(e: np.ndarray, tags, head: DomainHead):
    """Negative log-likelihood and its gradients wrt emissions and the
    head's CRF scores: (nll, de, dtrans, dstart, dend)."""
    e = _check_emissions(e, head)
    codes = _codes(tags, e.shape[0])
    logz, node, edge = crf_marginals(e, head)
    gold = path_score(e, codes, head)
    nll = logz - gold

    de = node.copy()
    de[np.arange(len(codes)), codes] -= 1.0
    dtrans = edge.copy()
    if len(codes) > 1:
        np.subtract.at(dtrans, (codes[:-1], codes[1:]), 1.0)
    dstart = node[0].copy()
    dstart[codes[0]] -= 1.0
    dend = node[-1].copy()
    dend[codes[-1]] -= 1.0
    return nll, de, dtrans, dstart, dend


def softmax_nll_and_grads(e: np.ndarray, tags):
    """Per-token cross-entropy summed over the sentence: (nll, de)."""
    e = np.asarray(e, dtype=np.float64)
    codes = _codes(tags, e.shape[0])
    shifted = e - e.max(axis=1, keepdims=True)
    expd = np.exp(shifted)
    probs = expd / expd.sum(axis=1, keepdims=True)
    logp = shifted - np.log(expd.sum(axis=1, keepdims=True))
    nll = -float(logp[np.arange(len(codes)), codes].sum())
    de = probs
    de[np.arange(len(codes)), codes] -= 1.0
    return nll, de


def viterbi_decode(e: np.ndarray, head: DomainHead) -> list[PosTag]:
    """Highest-scoring path; ties break toward the lowest tag code."""
    e = _check_emissions(e, head)
    path = kernels.viterbi(e, head.transitions, head.start, head.end)
    return [PosTag(int(c)) for c in path]


def softmax_decode(e: np.ndarray) -> list[PosTag]:
    """Independent per-token argmax with lowest-code tie-break."""
    e = np.asarray(e, dtype=np.float64)
    if e.ndim != 2 or e.shape[0] < 1:
        raise ValueError(f"emissions must be (n, k) with n >= 1, got {e.shape}")
    return [PosTag(int(c)) for c in e.argmax(axis=1)]
