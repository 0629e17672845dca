"""Counter-based random numbers: Philox-4x64-10 keyed by (seed, path).

Each path owns a stateless stream: the block of four standard normals for
steps 4j..4j+3 is a pure function of (seed, path_index, j).  That makes
draws independent of thread scheduling, alive-path compaction, and policy
differences between runs - the common-random-numbers discipline the
simulation layer relies on.

Two implementations produce bit-identical uint64 streams: a scalar one
compiled by numba for the path kernels, and a vectorized numpy one for
the fallback backend.  Normals are Box-Muller transforms of the four
output words; tiny cross-backend differences (< 1 ulp) can enter only
through libm cos/sin/log.
"""

from __future__ import annotations

import math

import numpy as np

from ._backend import njit

_M0 = np.uint64(0xD2E7470EE14C6C93)
_M1 = np.uint64(0xCA5A826395121157)
_W0 = np.uint64(0x9E3779B97F4A7C15)
_W1 = np.uint64(0xBB67AE8584CAA73B)
_MASK32 = np.uint64(0xFFFFFFFF)
_U64_TO_UNIT = 2.220446049250313e-16  # 2^-52
_TWO_PI = 6.283185307179586


@njit(cache=True)
def _mulhi64(a: np.uint64, b: np.uint64) -> np.uint64:
    al = a & _MASK32
    ah = a >> np.uint64(32)
    bl = b & _MASK32
    bh = b >> np.uint64(32)
    t = al * bl
    carry = t >> np.uint64(32)
    t = ah * bl + carry
    w1 = t & _MASK32
    w2 = t >> np.uint64(32)
    t = al * bh + w1
    carry2 = t >> np.uint64(32)
    return ah * bh + w2 + carry2


@njit(cache=True)
def philox4(k0: np.uint64, k1: np.uint64, c0: np.uint64, c1: np.uint64,
            c2: np.uint64, c3: np.uint64):
    """One Philox-4x64-10 block; returns four uint64 words."""
    for r in range(10):
        hi0 = _mulhi64(_M0, c0)
        lo0 = _M0 * c0
        hi1 = _mulhi64(_M1, c2)
        lo1 = _M1 * c2
        c0 = hi1 ^ c1 ^ k0
        c1 = lo1
        c2 = hi0 ^ c3 ^ k1
        c3 = lo0
        if r < 9:
            k0 += _W0
            k1 += _W1
    return c0, c1, c2, c3


@njit(cache=True)
def _to_unit(w: np.uint64) -> float:
    # open interval (0, 1): (w >> 12) + 0.5 lies in [0.5, 2^52 - 0.5]
    return (float(w >> np.uint64(12)) + 0.5) * _U64_TO_UNIT


@njit(cache=True)
def normals4(seed: np.uint64, path: np.uint64, block: np.uint64):
    """Four standard normals for (seed, path, block) via Box-Muller."""
    w0, w1, w2, w3 = philox4(seed, path, block, np.uint64(0), np.uint64(0),
                             np.uint64(0))
    u0 = _to_unit(w0)
    u1 = _to_unit(w1)
    u2 = _to_unit(w2)
    u3 = _to_unit(w3)
    r1 = math.sqrt(-2.0 * math.log(u0))
    r2 = math.sqrt(-2.0 * math.log(u2))
    return (
        r1 * math.cos(_TWO_PI * u1),
        r1 * math.sin(_TWO_PI * u1),
        r2 * math.cos(_TWO_PI * u3),
        r2 * math.sin(_TWO_PI * u3),
    )


# ---------------------------------------------------------------------------
# vectorized numpy equivalents (bit-identical uint64 streams)
# ---------------------------------------------------------------------------

def _mulhi64_np(a: np.ndarray, b: np.uint64) -> np.ndarray:
    al = a & _MASK32
    ah = a >> np.uint64(32)
    bl = b & _MASK32
    bh = b >> np.uint64(32)
    t = al * bl
    carry = t >> np.uint64(32)
    t = ah * bl + carry
    w1 = t & _MASK32
    w2 = t >> np.uint64(32)
    t = al * bh + w1
    carry2 = t >> np.uint64(32)
    return ah * bh + w2 + carry2


def philox4_np(seed: int, paths: np.ndarray, block: int):
    """Vectorized Philox block over an array of path indices."""
    n = paths.shape[0]
    k0 = np.full(n, np.uint64(seed), dtype=np.uint64)
    k1 = paths.astype(np.uint64)
    c0 = np.full(n, np.uint64(block), dtype=np.uint64)
    c1 = np.zeros(n, dtype=np.uint64)
    c2 = np.zeros(n, dtype=np.uint64)
    c3 = np.zeros(n, dtype=np.uint64)
    for r in range(10):
        hi0 = _mulhi64_np(c0, _M0)
        lo0 = c0 * _M0
        hi1 = _mulhi64_np(c2, _M1)
        lo1 = c2 * _M1
        c0 = hi1 ^ c1 ^ k0
        c1 = lo1
        c2 = hi0 ^ c3 ^ k1
        c3 = lo0
        if r < 9:
            k0 = k0 + _W0
            k1 = k1 + _W1
    return c0, c1, c2, c3


def _to_unit_np(w: np.ndarray) -> np.ndarray:
    return ((w >> np.uint64(12)).astype(np.float64) + 0.5) * _U64_TO_UNIT


def normals4_np(seed: int, paths: np.ndarray, block: int) -> np.ndarray:
    """(n, 4) array of standard normals matching :func:`normals4` per path."""
    w0, w1, w2, w3 = philox4_np(seed, paths, block)
    u0 = _to_unit_np(w0)
    u1 = _to_unit_np(w1)
    u2 = _to_unit_np(w2)
    u3 = _to_unit_np(w3)
    r1 = np.sqrt(-2.0 * np.log(u0))
    r2 = np.sqrt(-2.0 * np.log(u2))
    out = np.empty((paths.shape[0], 4), dtype=np.float64)
    out[:, 0] = r1 * np.cos(_TWO_PI * u1)
    out[:, 1] = r1 * np.sin(_TWO_PI * u1)
    out[:, 2] = r2 * np.cos(_TWO_PI * u3)
    out[:, 3] = r2 * np.sin(_TWO_PI * u3)
    return out
