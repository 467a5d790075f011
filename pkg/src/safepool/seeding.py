"""Deterministic RNG derivation from a master seed plus arbitrary key parts.

String parts are hashed with md5 so derived streams are stable across runs,
platforms, and process boundaries (unlike the builtin ``hash``).
"""
from __future__ import annotations

import hashlib

import numpy as np


def _as_entropy(part) -> int:
    if isinstance(part, (int, np.integer)):
        return int(part) & 0xFFFFFFFFFFFFFFFF
    digest = hashlib.md5(str(part).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def stable_rng(*parts) -> np.random.Generator:
    """Generator seeded from the given parts; same parts give the same stream."""
    return np.random.default_rng([_as_entropy(p) for p in parts])


def derived_seed(*parts) -> int:
    """A single nonnegative integer seed derived from the given parts."""
    return int(stable_rng(*parts).integers(0, 2**63 - 1))
