"""Seeded random streams, one per purpose.

Shuffling, dropout, parameter init, and resampling each pull from their own
generator derived from (seed, label), so changing how one consumer draws
numbers never perturbs the others.
"""
from __future__ import annotations

import hashlib

import numpy as np


def stream(seed: int, label: str) -> np.random.Generator:
    """Generator for `label` under `seed`; stable across processes."""
    if seed < 0:
        raise ValueError("seed must be non-negative")
    digest = hashlib.blake2s(label.encode("utf-8"), digest_size=8).digest()
    salt = int.from_bytes(digest, "big")
    return np.random.default_rng(np.random.SeedSequence([seed, salt]))
