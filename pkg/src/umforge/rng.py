"""Deterministic per-item random streams.

All randomness in umforge flows from a single 64-bit seed. Each work item
(for example one patient series) derives its own splitmix64 stream from
hash(seed, item key), so results cannot depend on scheduling or batch order.
"""

from __future__ import annotations

import hashlib

_MASK64 = (1 << 64) - 1


class SplitMix64:
    """splitmix64 generator (Steele, Lea & Flood); exact integer arithmetic."""

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + 0x9E3779B97F4A7C15) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def below(self, n: int) -> int:
        """Uniform integer in [0, n) via rejection sampling (unbiased)."""
        if n <= 0:
            raise ValueError("n must be positive")
        limit = (_MASK64 + 1) - ((_MASK64 + 1) % n)
        while True:
            v = self.next_u64()
            if v < limit:
                return v % n


def derive_stream(seed: int, *tokens: str) -> SplitMix64:
    """Derive an independent stream from (seed, tokens) via blake2b.

    The token list keys the stream to one work item; identical (seed, tokens)
    always yield the identical stream regardless of process or thread layout.
    """
    h = hashlib.blake2b(digest_size=8)
    h.update((seed & _MASK64).to_bytes(8, "little"))
    for token in tokens:
        h.update(b"\x1f")
        h.update(token.encode("utf-8"))
    return SplitMix64(int.from_bytes(h.digest(), "little"))
