"""Client-side copy of the engine's documented deterministic stream recipe.

Streams are addressed by (master_seed, path of (label, index) pairs); the
state is the first 8 little-endian bytes of SHA-256 over the canonical path
encoding, outputs follow splitmix64, and one uniform in (0, 1) is
((z >> 11) + 0.5) * 2**-53. Scripted agents built on this reproduce the
engine's baseline transcripts exactly.
"""

from __future__ import annotations

import hashlib

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15


def _mix(z: int) -> int:
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


class Stream:
    __slots__ = ("master_seed", "path", "_state")

    def __init__(self, master_seed: int, path: tuple = ()):
        self.master_seed = int(master_seed) & _MASK
        self.path = tuple((str(l), int(i)) for l, i in path)
        h = hashlib.sha256()
        h.update(self.master_seed.to_bytes(8, "little"))
        for label, index in self.path:
            enc = label.encode("utf-8")
            h.update(len(enc).to_bytes(2, "little"))
            h.update(enc)
            h.update(index.to_bytes(8, "little", signed=True))
        self._state = int.from_bytes(h.digest()[:8], "little")

    def substream(self, label: str, index: int = 0) -> "Stream":
        return Stream(self.master_seed, self.path + ((label, index),))

    def uniform01(self) -> float:
        self._state = (self._state + _GAMMA) & _MASK
        return ((_mix(self._state) >> 11) + 0.5) * 2.0 ** -53
