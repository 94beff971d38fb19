"""Deterministic seed splitting.

Every random stream in an experiment is derived from one master seed and a
tuple of labels (band, motion, trial, ...), so results do not depend on the
order in which work is executed.
"""
from __future__ import annotations

import hashlib

SEED_MASK = (1 << 64) - 1


def derive_seed(master: int, *keys) -> int:
    """Hash ``master`` and ``keys`` into a 64-bit seed.

    Uses blake2b rather than :func:`hash` so the value is stable across
    interpreter runs.
    """
    h = hashlib.blake2b(digest_size=8)
    h.update(str(int(master) & SEED_MASK).encode())
    for key in keys:
        h.update(b"\x1f")
        h.update(str(key).encode())
    return int.from_bytes(h.digest(), "little")
