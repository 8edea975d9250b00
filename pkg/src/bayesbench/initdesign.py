"""Space-filling initial designs: Latin hypercube and Sobol sequences.

The Sobol generator uses Gray-code ordering with the Joe-Kuo "new" direction
numbers, embedded below for up to 21 dimensions.  Index 0 of the sequence is
the origin and is skipped; the first returned point is sequence index 1.
"""

from __future__ import annotations

import numpy as np

from .errors import UnsupportedDimensionError
from .inneropt import Box

__all__ = ["lhs", "sobol", "scale", "SOBOL_MAX_DIM"]

SOBOL_MAX_DIM = 21
_NBITS = 32

# Joe-Kuo new direction numbers: (degree s, coefficient a, m_1..m_s) for
# dimensions 2..21; dimension 1 is the van der Corput sequence.
_JOE_KUO: list[tuple[int, int, tuple[int, ...]]] = [
    (1, 0, (1,)),
    (2, 1, (1, 3)),
    (3, 1, (1, 3, 1)),
    (3, 2, (1, 1, 1)),
    (4, 1, (1, 1, 3, 3)),
    (4, 4, (1, 3, 5, 13)),
    (5, 2, (1, 1, 5, 5, 17)),
    (5, 4, (1, 1, 5, 5, 5)),
    (5, 7, (1, 1, 7, 11, 19)),
    (5, 11, (1, 1, 5, 1, 1)),
    (5, 13, (1, 1, 1, 3, 11)),
    (5, 14, (1, 3, 5, 5, 31)),
    (6, 1, (1, 3, 3, 9, 7, 49)),
    (6, 13, (1, 1, 1, 15, 21, 21)),
    (6, 16, (1, 3, 1, 13, 27, 49)),
    (6, 19, (1, 1, 1, 15, 7, 5)),
    (6, 22, (1, 3, 1, 15, 13, 25)),
    (6, 25, (1, 1, 5, 5, 19, 61)),
    (7, 1, (1, 3, 7, 11, 23, 15, 103)),
    (7, 4, (1, 3, 7, 13, 13, 15, 69)),
]


def lhs(n: int, d: int, rng: np.random.Generator) -> np.ndarray:
    """Latin hypercube sample in the unit cube: one point per axis stratum."""
    if n < 1 or d < 1:
        raise ValueError("lhs requires n >= 1 and d >= 1")
    points = np.empty((n, d))
    for j in range(d):
        points[:, j] = (rng.permutation(n) + rng.random(n)) / n
    return points


def _directions(d: int) -> np.ndarray:
    V = np.zeros((d, _NBITS), dtype=np.uint64)
    V[0] = [1 << (_NBITS - 1 - k) for k in range(_NBITS)]
    for dim in range(1, d):
        s, a, m_init = _JOE_KUO[dim - 1]
        m = list(m_init)
        for k in range(s, _NBITS):
            new = m[k - s] ^ (m[k - s] << s)
            for i in range(1, s):
                if (a >> (s - 1 - i)) & 1:
                    new ^= m[k - i] << i
            m.append(new)
        V[dim] = [np.uint64(m[k]) << np.uint64(_NBITS - 1 - k) for k in range(_NBITS)]
    return V


def sobol(n: int, d: int) -> np.ndarray:
    """First n Sobol points (Gray-code order, origin skipped)."""
    if n < 1:
        raise ValueError("sobol requires n >= 1")
    if d < 1 or d > SOBOL_MAX_DIM:
        raise UnsupportedDimensionError(
            f"sobol supports 1 <= d <= {SOBOL_MAX_DIM}, got {d}"
        )
    V = _directions(d)
    state = np.zeros(d, dtype=np.uint64)
    points = np.empty((n, d))
    for i in range(1, n + 1):
        c = _lowest_zero_bit(i - 1)
        state ^= V[:, c]
        points[i - 1] = state
    return points / float(1 << _NBITS)


def _lowest_zero_bit(i: int) -> int:
    c = 0
    while i & 1:
        i >>= 1
        c += 1
    return c


def scale(points: np.ndarray, box: Box) -> np.ndarray:
    """Affine map of unit-cube points into the box."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.shape[1] != box.dim:
        raise ValueError(f"points have dim {points.shape[1]}, box has dim {box.dim}")
    return box.lower + points * box.width
