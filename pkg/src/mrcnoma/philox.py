"""Vectorized Philox4x32-10 counter-based generator.

Every random number used by the simulator is a pure function of
``(seed, trial, tile, stream, index)``.  Trials can therefore be evaluated
in any order, in any batch size and on any number of workers while
producing bit-identical draws.
"""

from __future__ import annotations

import numpy as np

_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = 0x9E3779B9
_W1 = 0xBB67AE85
_MASK32 = np.uint64(0xFFFFFFFF)
_SHIFT32 = np.uint64(32)
_ROUNDS = 10


def philox4x32(c0, c1, c2, c3, key0: int, key1: int):
    """Apply the Philox4x32-10 bijection to a (broadcast) array of counters.

    Parameters
    ----------
    c0, c1, c2, c3 : array_like of uint32-range integers
        The four counter words.
    key0, key1 : int
        The two 32-bit key words.

    Returns
    -------
    tuple of four ``np.uint64`` arrays holding 32-bit output words.
    """
    c0, c1, c2, c3 = np.broadcast_arrays(
        *(np.asarray(c, dtype=np.uint64) & _MASK32 for c in (c0, c1, c2, c3))
    )
    k0 = int(key0) & 0xFFFFFFFF
    k1 = int(key1) & 0xFFFFFFFF
    for rnd in range(_ROUNDS):
        if rnd:
            k0 = (k0 + _W0) & 0xFFFFFFFF
            k1 = (k1 + _W1) & 0xFFFFFFFF
        p0 = _M0 * c0
        p1 = _M1 * c2
        c0, c1, c2, c3 = (
            (p1 >> _SHIFT32) ^ c1 ^ np.uint64(k0),
            p1 & _MASK32,
            (p0 >> _SHIFT32) ^ c3 ^ np.uint64(k1),
            p0 & _MASK32,
        )
    return c0, c1, c2, c3


def uniform(seed: int, stream: int, trial, tile, index) -> np.ndarray:
    """Uniform doubles in the open interval (0, 1), 53 bits of resolution.

    ``trial``, ``tile`` and ``index`` broadcast against each other.  ``tile``
    may be negative; it is stored with a 2**31 offset.
    """
    seed = int(seed) & 0xFFFFFFFFFFFFFFFF
    tile = np.asarray(tile, dtype=np.int64) + (1 << 31)
    w0, w1, _, _ = philox4x32(index, trial, tile, stream, seed & 0xFFFFFFFF, seed >> 32)
    bits = ((w0 >> np.uint64(6)) << np.uint64(27)) | (w1 >> np.uint64(5))
    return (bits.astype(np.float64) + 0.5) * 2.0**-53


def exponential(seed: int, stream: int, trial, tile, index) -> np.ndarray:
    """Unit-mean exponential variates by inversion of :func:`uniform`."""
    return -np.log(uniform(seed, stream, trial, tile, index))
