"""Sequence kernels with a compiled core and a pure NumPy fallback.

The Cython extension is used when it was built; otherwise the reference
implementation takes over transparently.  Set HEADTAG_KERNELS=reference to
force the fallback (e.g. for benchmarking or debugging).
"""
from __future__ import annotations

import os

from . import reference

if os.environ.get("HEADTAG_KERNELS") == "reference":
    _impl = reference
    BACKEND = "reference"
else:
    try:
        from . import _core as _impl

        BACKEND = "compiled"
    except ImportError:
        _impl = reference
        BACKEND = "reference"

gru_forward = _impl.gru_forward
gru_backward = _impl.gru_backward
gru_forward_packed = _impl.gru_forward_packed
gru_backward_packed = _impl.gru_backward_packed
crf_forward = _impl.crf_forward
crf_backward = _impl.crf_backward
viterbi = _impl.viterbi

__all__ = [
    "BACKEND",
    "crf_backward",
    "crf_forward",
    "gru_backward",
    "gru_backward_packed",
    "gru_forward",
    "gru_forward_packed",
    "reference",
    "viterbi",
]
