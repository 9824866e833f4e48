# -*- coding: utf-8 -*-
import numpy as np

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


class SplitMix64(object):
    """
    Counter-based SplitMix64 stream. Draws are vectorised but consume the
    stream in order, so the n-th value never depends on how draws are
    batched.
    """
    def __init__(self, seed):
        self.state = np.uint64(int(seed) & 0xFFFFFFFFFFFFFFFF)
        self.counter = 0

    def next_uint64(self, size):
        steps = np.arange(self.counter + 1, self.counter + 1 + size, dtype=np.uint64)
        self.counter += size
        with np.errstate(over='ignore'):
            z = self.state + steps * _GAMMA
            z = (z ^ (z >> np.uint64(30))) * _MIX1
            z = (z ^ (z >> np.uint64(27))) * _MIX2
            z = z ^ (z >> np.uint64(31))
        return z

    def random(self, size):
        """Uniform doubles in [0, 1) with 53 random bits."""
        return (self.next_uint64(size) >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)

    def uniform(self, low, high, shape):
        size = int(np.prod(shape, dtype=np.int64))
        return (low + (high - low) * self.random(size)).reshape(shape)
