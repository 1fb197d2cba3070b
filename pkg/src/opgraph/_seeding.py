"""Seed derivation shared by every module that spawns random streams."""
from __future__ import annotations

import hashlib

import numpy as np


def derive_seed(*parts: int | str) -> int:
    """Mix integers/strings into a 63-bit seed, stable across platforms and runs."""
    h = hashlib.sha256()
    for p in parts:
        h.update(repr(p).encode())
        h.update(b"\x1f")
    return int.from_bytes(h.digest()[:8], "little") >> 1


def make_rng(*parts: int | str) -> np.random.Generator:
    return np.random.default_rng(derive_seed(*parts))
