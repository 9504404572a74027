"""Seeded random streams.

Every draw in the package comes from an :class:`RngStream`.  A chain owns a
:class:`Streams` bundle with one independent substream per kind of draw, so
switching scheme (A, B or C) never shifts the Gaussian driver sequence.
"""

from dataclasses import dataclass

import numpy as np

_BLOCK = 4096


class RngStream:
    """Buffered PCG64 stream handing out Python floats.

    Uniforms live in (0, 1]; the open lower end lets callers take logs and
    reciprocals without guarding.
    """

    def __init__(self, seed=None, block=_BLOCK):
        if isinstance(seed, np.random.SeedSequence):
            self._seq = seed
        else:
            self._seq = np.random.SeedSequence(seed)
        self._gen = np.random.Generator(np.random.PCG64(self._seq))
        self._block = int(block)
        self._ubuf = []
        self._ui = 0
        self._nbuf = []
        self._ni = 0

    @property
    def seed_sequence(self):
        return self._seq

    def uniform(self):
        if self._ui >= len(self._ubuf):
            self._ubuf = (1.0 - self._gen.random(self._block)).tolist()
            self._ui = 0
        v = self._ubuf[self._ui]
        self._ui += 1
        return v

    def normal(self):
        if self._ni >= len(self._nbuf):
            self._nbuf = self._gen.standard_normal(self._block).tolist()
            self._ni = 0
        v = self._nbuf[self._ni]
        self._ni += 1
        return v

    def uniforms(self, k):
        return np.array([self.uniform() for _ in range(k)])

    def normals(self, k):
        return np.array([self.normal() for _ in range(k)])

    def generator(self):
        """A fresh numpy Generator derived from this stream, for bulk draws."""
        return np.random.Generator(np.random.PCG64(self._seq.spawn(1)[0]))


@dataclass
class Streams:
    """Independent substreams used by one chain."""

    u: RngStream
    counts: RngStream
    sizes: RngStream
    times: RngStream

    @classmethod
    def from_seed(cls, seed):
        children = np.random.SeedSequence(seed).spawn(4)
        return cls(*(RngStream(c) for c in children))

    @classmethod
    def single(cls, stream):
        """Route every kind of draw through one stream."""
        return cls(stream, stream, stream, stream)


def as_streams(rng):
    if isinstance(rng, Streams):
        return rng
    if isinstance(rng, RngStream):
        return Streams.single(rng)
    return Streams.from_seed(rng)
