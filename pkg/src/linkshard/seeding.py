"""Deterministic, platform-independent RNG stream derivation.

Every randomized step keys its stream off a stable hash of (seed, context)
rather than a shared sequential generator, so parallelizing over queries,
examples, or tokens cannot change the output.
"""

from __future__ import annotations

import hashlib
import random


def derive_key(*parts: int | str) -> int:
    """Mix arbitrary parts into a stable 64-bit stream key."""
    digest = hashlib.blake2b(digest_size=8)
    for part in parts:
        digest.update(str(part).encode("utf-8"))
        digest.update(b"\x1f")
    return int.from_bytes(digest.digest(), "big")


def derive_rng(*parts: int | str) -> random.Random:
    return random.Random(derive_key(*parts))


def unit_floats(key: int, index: int, count: int = 3) -> tuple[float, ...]:
    """Uniform floats in [0, 1) for one (stream, position) pair.

    Hash-derived instead of generator-derived: the draw at ``index`` does
    not depend on draws at other positions.
    """
    digest = hashlib.blake2b(
        index.to_bytes(8, "big", signed=False),
        digest_size=8 * count,
        key=key.to_bytes(8, "big", signed=False),
    ).digest()
    return tuple(
        int.from_bytes(digest[8 * i : 8 * (i + 1)], "big") / 2**64 for i in range(count)
    )
