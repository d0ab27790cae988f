"""Reproducible, splittable normal streams.

Each stream is a Philox counter-based generator keyed by ``(seed, stream_id)``.
Uniforms are built from the top 53 bits of each raw draw, offset by half a
unit so they never hit 0 or 1, and mapped to normals with the inverse CDF.
Because no rejection step is involved, the k-th normal of a stream depends
only on the key and on k.
"""

from __future__ import annotations

import numpy as np
from scipy.special import ndtri

_MASK64 = (1 << 64) - 1
_TWO_M53 = 2.0**-53


class RngStream:
    """A keyed substream of standard normals.

    Two instances built with the same ``(seed, stream_id)`` yield the same
    sequence; distinct ``stream_id`` values give independent sequences.
    """

    def __init__(self, seed: int, stream_id: int = 0):
        self.seed = int(seed) & _MASK64
        self.stream_id = int(stream_id) & _MASK64
        key = np.array([self.seed, self.stream_id], dtype=np.uint64)
        self._bits = np.random.Philox(key=key)

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"

    def spawn(self, stream_id: int) -> RngStream:
        """Fresh stream sharing this seed."""
        return RngStream(self.seed, stream_id)

    def uniforms(self, shape) -> np.ndarray:
        """Uniforms on the open interval (0, 1)."""
        shape = (shape,) if np.isscalar(shape) else tuple(shape)
        count = int(np.prod(shape, dtype=np.int64))
        raw = self._bits.random_raw(count) if count else np.empty(0, np.uint64)
        u = ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * _TWO_M53
        return u.reshape(shape)

    def normals(self, shape) -> np.ndarray:
        """Standard normals in row-major order."""
        return ndtri(self.uniforms(shape))
