"""Small shared helpers."""

from __future__ import annotations

import hashlib

_MASK64 = (1 << 64) - 1


def derive_seed(*parts: object) -> int:
    """Deterministic 64-bit substream seed from a tuple of labels.

    Stable across processes and platforms (unlike hash()), so seeded
    pipelines can split RNG streams by purpose without coupling draw order.
    """
    digest = hashlib.sha256("\x1f".join(str(p) for p in parts).encode()).digest()
    return int.from_bytes(digest[:8], "big") & _MASK64
