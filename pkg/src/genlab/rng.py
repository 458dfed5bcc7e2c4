"""Deterministic, splittable random streams.

A stream is addressed by ``(master_seed, stream_path)`` where the path is a
sequence of ``(label, index)`` pairs. The initial state is the first 8 bytes
(little-endian) of SHA-256 over the canonical path encoding; successive
64-bit outputs come from splitmix64. Both primitives have single-page
reference implementations in every mainstream language, so a persisted seed
plan is enough to replay a transcript bit-for-bit outside Python.

Canonical path encoding, in bytes fed to SHA-256:

    master_seed as 8 little-endian bytes, then per path element:
    len(label) as 2 LE bytes, the UTF-8 label, index as 8 LE signed bytes.

Draw rule: one uniform consumes one splitmix64 output ``z`` and returns
``((z >> 11) + 0.5) * 2**-53``, which is strictly inside ``(0, 1)``.

Substreams with distinct paths are derived through SHA-256 and are
statistically independent; deriving a substream does not advance the parent.
"""

from __future__ import annotations

import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MULT1 = 0xBF58476D1CE4E5B9
_MULT2 = 0x94D049BB133111EB
_U53_SCALE = 2.0 ** -53


def _mix64(z: int) -> int:
    z = ((z ^ (z >> 30)) * _MULT1) & _MASK64
    z = ((z ^ (z >> 27)) * _MULT2) & _MASK64
    return z ^ (z >> 31)


def _derive_state(master_seed: int, path: tuple[tuple[str, int], ...]) -> int:
    h = hashlib.sha256()
    h.update((master_seed & _MASK64).to_bytes(8, "little"))
    for label, index in path:
        enc = label.encode("utf-8")
        h.update(len(enc).to_bytes(2, "little"))
        h.update(enc)
        h.update(int(index).to_bytes(8, "little", signed=True))
    return int.from_bytes(h.digest()[:8], "little")


class RngState:
    """A single-owner random stream; fork with :meth:`substream`.

    All draw methods advance the stream. Forking does not: a substream's
    state depends only on ``(master_seed, stream_path)``, never on how many
    draws the parent has made.
    """

    __slots__ = ("master_seed", "stream_path", "_state", "_draws")

    def __init__(self, master_seed: int, stream_path: tuple[tuple[str, int], ...] = ()):
        self.master_seed = int(master_seed) & _MASK64
        self.stream_path = tuple((str(lbl), int(idx)) for lbl, idx in stream_path)
        self._state = _derive_state(self.master_seed, self.stream_path)
        self._draws = 0

    def substream(self, label: str, index: int = 0) -> "RngState":
        """Child stream for ``(label, index)``; the parent is unmodified."""
        return RngState(self.master_seed, self.stream_path + ((label, index),))

    @property
    def draws(self) -> int:
        return self._draws

    def key(self) -> tuple:
        """Hashable identity of the stream (ignores position)."""
        return (self.master_seed, self.stream_path)

    def next_u64(self) -> int:
        self._state = (self._state + _GAMMA) & _MASK64
        self._draws += 1
        return _mix64(self._state)

    def uniform01(self) -> float:
        """One uniform draw, strictly inside (0, 1)."""
        return ((self.next_u64() >> 11) + 0.5) * _U53_SCALE

    def uniform01_block(self, n: int) -> np.ndarray:
        """``n`` uniforms as an array, bit-identical to ``n`` scalar draws."""
        if n < 0:
            raise ValueError("n must be nonnegative")
        if n == 0:
            return np.empty(0, dtype=np.float64)
        idx = np.arange(1, n + 1, dtype=np.uint64)
        z = np.uint64(self._state) + idx * np.uint64(_GAMMA)
        self._state = int(z[-1])
        self._draws += n
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_MULT1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_MULT2)
        z = z ^ (z >> np.uint64(31))
        return ((z >> np.uint64(11)).astype(np.float64) + 0.5) * _U53_SCALE

    def __repr__(self) -> str:
        path = "/".join(f"{lbl}[{idx}]" for lbl, idx in self.stream_path) or "<root>"
        return f"RngState(seed={self.master_seed}, path={path}, draws={self._draws})"


def substream(rng: RngState, label: str, index: int = 0) -> RngState:
    """Functional alias for :meth:`RngState.substream`."""
    return rng.substream(label, index)
