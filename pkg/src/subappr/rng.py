"""Counter-based random streams keyed by structural coordinates.

A Philox generator is a keyed bijection on a 256-bit counter, so two
draws with different counters are independent no matter in which order
they are made.  We put the user seed and a stream tag in the key and the
structural coordinates (node, push index, epoch, ...) in the upper
counter words; the lowest word is left free for the draws themselves.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1

# stream tags
PUSH = 1
CORRECT = 2
SPARSIFY = 3
PREDICT = 4


def _key(seed: int, stream: int) -> np.ndarray:
    return np.array([seed & MASK64, stream & MASK64], dtype=np.uint64)


class KeyedStreams:
    """Re-keyable generator; one instance per sequential run.

    ``at(a, b, c)`` rewinds the shared bit generator to the stream at
    counter ``(0, a, b, c)`` and returns the generator.  Resetting state is
    much cheaper than constructing a fresh ``Generator`` per draw.
    """

    def __init__(self, seed: int, stream: int):
        self._bitgen = np.random.Philox(key=_key(seed, stream))
        self._gen = np.random.Generator(self._bitgen)
        self._state = self._bitgen.state
        self._key = self._state["state"]["key"].copy()

    def at(self, a: int, b: int = 0, c: int = 0) -> np.random.Generator:
        st = self._state
        st["state"] = {
            "counter": np.array([0, a & MASK64, b & MASK64, c & MASK64], dtype=np.uint64),
            "key": self._key,
        }
        st["buffer_pos"] = 4
        st["has_uint32"] = 0
        st["uinteger"] = 0
        self._bitgen.state = st
        return self._gen


def stream_uniforms(seed: int, stream: int, start: int, stop: int) -> np.ndarray:
    """Doubles ``start..stop-1`` of the keyed stream.

    Any partition of ``[0, N)`` into chunks yields the same values as a
    single draw of ``N``, so per-item draws can be split across workers.
    """
    bg = np.random.Philox(key=_key(seed, stream))
    block, skip = divmod(start, 4)
    if block:
        bg.advance(block)
    gen = np.random.Generator(bg)
    return gen.random(stop - start + skip)[skip:]
