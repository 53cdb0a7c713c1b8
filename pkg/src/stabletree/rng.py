"""Deterministic random-number streams.

Every stochastic routine in the package takes an explicit numpy
``Generator``.  Streams are derived from a global seed plus a structured
key (replication index, role name, ...) through a counter-based Philox
generator, so results depend only on (seed, key) and never on scheduling
or worker count.
"""

from __future__ import annotations

import zlib

import numpy as np


def _key_word(part) -> int:
    if isinstance(part, str):
        return zlib.crc32(part.encode("utf8")) & 0xFFFFFFFF
    return int(part) % (1 << 32)


def substream(seed: int, *key) -> np.random.Generator:
    """Generator for the stream identified by ``(seed, *key)``.

    Key parts may be integers (negative values are folded mod 2^32) or
    short role strings.  Distinct keys give statistically independent
    streams; equal keys give bit-identical streams.
    """
    seq = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(_key_word(p) for p in key))
    return np.random.Generator(np.random.Philox(seq))
