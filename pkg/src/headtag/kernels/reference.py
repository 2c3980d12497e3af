"""Pure NumPy sequence kernels: GRU recurrence, CRF recursions, Viterbi.

This is the fallback backend and the semantic reference for the compiled
extension (headtag.kernels._core).  Both expose the same functions with the
same layouts:

GRU, per step t (gi[t] = W_ih x_t + b_ih precomputed by the caller,
gate layout [reset; update; candidate], each block of width H):

    gh  = W_hh h_{t-1} + b_hh
    r_t = sigmoid(gi_r + gh_r)
    z_t = sigmoid(gi_z + gh_z)
    n_t = tanh(gi_n + r_t * gh_n)
    h_t = (1 - z_t) * n_t + z_t * h_{t-1}

CRF, path score s(y) = start[y_1] + sum_t e[t, y_t]
                     + sum_t trans[y_t, y_{t+1}] + end[y_T].
"""
from __future__ import annotations

import numpy as np


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def gru_forward(gi, w_hh, b_hh, h0):
    """Run the recurrence over precomputed input projections gi (T, 3H).

    Returns (h, r, z, n, ghn): hidden states (T, H) plus the gate
    activations and the candidate's hidden projection needed for backward.
    """
    T = gi.shape[0]
    H = w_hh.shape[1]
    h = np.empty((T, H))
    r = np.empty((T, H))
    z = np.empty((T, H))
    n = np.empty((T, H))
    ghn = np.empty((T, H))
    h_prev = h0
    for t in range(T):
        gh = w_hh @ h_prev + b_hh
        r[t] = _sigmoid(gi[t, :H] + gh[:H])
        z[t] = _sigmoid(gi[t, H : 2 * H] + gh[H : 2 * H])
        ghn[t] = gh[2 * H :]
        n[t] = np.tanh(gi[t, 2 * H :] + r[t] * ghn[t])
        h[t] = (1.0 - z[t]) * n[t] + z[t] * h_prev
        h_prev = h[t]
    return h, r, z, n, ghn


def gru_backward(dh, h, r, z, n, ghn, w_hh, h0):
    """Backward pass matching gru_forward.

    dh is the gradient on the hidden-state sequence (T, H).  Returns
    (dgi, dw_hh, db_hh, dh0); the caller maps dgi back through W_ih.
    """
    T, H = dh.shape
    dgi = np.empty((T, 3 * H))
    dw_hh = np.zeros_like(w_hh)
    db_hh = np.zeros(3 * H)
    dgh = np.empty(3 * H)
    carry = np.zeros(H)
    for t in range(T - 1, -1, -1):
        h_prev = h[t - 1] if t > 0 else h0
        dht = dh[t] + carry
        dn = dht * (1.0 - z[t])
        dz = dht * (h_prev - n[t])
        dpre_n = dn * (1.0 - n[t] * n[t])
        dr = dpre_n * ghn[t]
        dpre_z = dz * z[t] * (1.0 - z[t])
        dpre_r = dr * r[t] * (1.0 - r[t])
        dgi[t, :H] = dpre_r
        dgi[t, H : 2 * H] = dpre_z
        dgi[t, 2 * H :] = dpre_n
        dgh[:H] = dpre_r
        dgh[H : 2 * H] = dpre_z
        dgh[2 * H :] = dpre_n * r[t]
        dw_hh += np.outer(dgh, h_prev)
        db_hh += dgh
        carry = dht * z[t] + w_hh.T @ dgh
    return dgi, dw_hh, db_hh, carry


def gru_forward_packed(gi, lengths, w_hh, b_hh):
    """gru_forward over concatenated sequences; each segment restarts from a
    zero state.  gi is (sum(lengths), 3H), lengths an int64 vector."""
    H = w_hh.shape[1]
    h0 = np.zeros(H)
    outs = [np.empty((gi.shape[0], H)) for _ in range(5)]
    offset = 0
    for length in lengths:
        parts = gru_forward(gi[offset : offset + length], w_hh, b_hh, h0)
        for out, part in zip(outs, parts):
            out[offset : offset + length] = part
        offset += length
    return tuple(outs)


def gru_backward_packed(dh, lengths, h, r, z, n, ghn, w_hh):
    """Backward for gru_forward_packed; returns (dgi, dw_hh, db_hh)."""
    H = w_hh.shape[1]
    h0 = np.zeros(H)
    dgi = np.empty((dh.shape[0], 3 * H))
    dw_hh = np.zeros_like(w_hh)
    db_hh = np.zeros(3 * H)
    offset = 0
    for length in lengths:
        seg = slice(offset, offset + length)
        dgi_seg, dw_seg, db_seg, _ = gru_backward(
            dh[seg], h[seg], r[seg], z[seg], n[seg], ghn[seg], w_hh, h0
        )
        dgi[seg] = dgi_seg
        dw_hh += dw_seg
        db_hh += db_seg
        offset += length
    return dgi, dw_hh, db_hh


def _logsumexp(a, axis):
    m = np.max(a, axis=axis, keepdims=True)
    return (m + np.log(np.sum(np.exp(a - m), axis=axis, keepdims=True))).squeeze(axis)


def crf_forward(emissions, transitions, start, end):
    """Forward recursion in log space; returns (logZ, alpha).

    alpha[t, j] is the log-sum of all prefixes ending in tag j at t,
    including e[t, j] but not end[j].
    """
    T = emissions.shape[0]
    alpha = np.empty_like(emissions)
    alpha[0] = start + emissions[0]
    for t in range(1, T):
        alpha[t] = emissions[t] + _logsumexp(alpha[t - 1][:, None] + transitions, axis=0)
    logz = float(_logsumexp(alpha[T - 1] + end, axis=0))
    return logz, alpha


def crf_backward(emissions, transitions, end):
    """Backward recursion; beta[t, i] is the log-sum over suffixes from t
    given y_t = i, excluding e[t, i] (beta[T-1] = end)."""
    T = emissions.shape[0]
    beta = np.empty_like(emissions)
    beta[T - 1] = end
    for t in range(T - 2, -1, -1):
        beta[t] = _logsumexp(
            transitions + (emissions[t + 1] + beta[t + 1])[None, :], axis=1
        )
    return beta


def viterbi(emissions, transitions, start, end):
    """Best-path decode; ties break toward the lowest tag code.

    Returns an int64 array of tag codes, one per token.
    """
    T, K = emissions.shape
    score = start + emissions[0]
    backptr = np.empty((T - 1, K), dtype=np.int64) if T > 1 else None
    for t in range(1, T):
        cand = score[:, None] + transitions
        best_prev = np.argmax(cand, axis=0)
        score = emissions[t] + cand[best_prev, np.arange(K)]
        backptr[t - 1] = best_prev
    path = np.empty(T, dtype=np.int64)
    path[T - 1] = int(np.argmax(score + end))
    for t in range(T - 2, -1, -1):
        path[t] = backptr[t][path[t + 1]]
    return path
