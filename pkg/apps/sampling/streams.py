"""
Seeded streams of i.i.d. uniform sample indices.

Draws come from numpy's counter-based Philox bit generator; bounded integers
use numpy's unbiased Lemire mapping. Indices are drawn in fixed-size
blocks, so next_index and take read the same sequence.
"""
import numpy as np

from apps.core.utils import validate_seed

BLOCK_SIZE = 4096


class SampleStream:
    """
    Deterministic index stream over {1, ..., m}. Single owner; use fork()
    to obtain an independent replay of the same sequence.
    """

    def __init__(self, seed, m):
        if isinstance(m, bool) or not isinstance(m, (int, np.integer)) or m < 1:
            raise ValueError(f'm must be a positive integer, got {m!r}')
        self.seed = validate_seed(seed)
        self.m = int(m)
        self.position = 0
        self._generator = np.random.Generator(np.random.Philox(self.seed))
        self._buffer = np.empty(0, dtype=np.int64)
        self._offset = 0

    def __repr__(self):
        return f'SampleStream(seed={self.seed}, m={self.m}, position={self.position})'

    def _refill(self, size):
        self._buffer = self._generator.integers(1, self.m + 1, size=size, dtype=np.int64)
        self._offset = 0

    def next_index(self):
        if self._offset >= len(self._buffer):
            self._refill(BLOCK_SIZE)
        xi = int(self._buffer[self._offset])
        self._offset += 1
        self.position += 1
        return xi

    def take(self, n):
        """Draw the next n indices as an int64 array; same values as n next_index calls."""
        if n < 0:
            raise ValueError(f'cannot take {n} draws')
        out = np.empty(n, dtype=np.int64)
        filled = 0
        while filled < n:
            if self._offset >= len(self._buffer):
                self._refill(BLOCK_SIZE)
            chunk = min(n - filled, len(self._buffer) - self._offset)
            out[filled:filled + chunk] = self._buffer[self._offset:self._offset + chunk]
            self._offset += chunk
            filled += chunk
        self.position += n
        return out

    def fork(self):
        """Fresh stream at position 0 with the same seed."""
        return SampleStream(self.seed, self.m)
