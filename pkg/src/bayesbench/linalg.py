"""Dense symmetric linear algebra: Cholesky factors with O(n^2) row append.

Observations arrive one at a time, so the kernel matrix grows by a single
bordered row per iteration.  ``chol_append`` extends an existing factor in
O(n^2) instead of refactoring in O(n^3).  Factors share a pre-allocated
buffer while appends stay sequential; forking an older factor copies.

Module-level counters record factorization/append calls for performance
tests; they are not synchronized across threads.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import solve_triangular
from scipy.linalg.lapack import dpotrf

from .errors import DimensionMismatchError, NotPositiveDefiniteError

__all__ = [
    "CholFactor",
    "cholesky",
    "chol_append",
    "tri_solve",
    "chol_solve",
    "log_det",
    "counters",
    "reset_counters",
]

_COUNTS = {"cholesky": 0, "chol_append": 0}


def counters() -> dict:
    return dict(_COUNTS)


def reset_counters() -> None:
    for key in _COUNTS:
        _COUNTS[key] = 0


class _Buffer:
    """Growable square storage; ``rows`` marks how many rows are finalized."""

    __slots__ = ("arr", "rows")

    def __init__(self, capacity: int):
        self.arr = np.zeros((capacity, capacity))
        self.rows = 0


class CholFactor:
    """Lower-triangular factor L with L @ L.T equal to the factored matrix."""

    __slots__ = ("_buf", "n")

    def __init__(self, buf: _Buffer, n: int):
        self._buf = buf
        self.n = n

    @property
    def L(self) -> np.ndarray:
        """View of the factor; treat as read-only."""
        return self._buf.arr[: self.n, : self.n]

    def diag(self) -> np.ndarray:
        return np.diagonal(self._buf.arr)[: self.n].copy()


def cholesky(A) -> CholFactor:
    """Factor a symmetric positive-definite matrix.

    Raises :class:`NotPositiveDefiniteError` (with the failing pivot index)
    when a nonpositive pivot is encountered.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionMismatchError(f"expected square matrix, got {A.shape}")
    n = A.shape[0]
    _COUNTS["cholesky"] += 1
    if n == 0:
        return CholFactor(_Buffer(8), 0)
    c, info = dpotrf(A, lower=1, clean=1, overwrite_a=0)
    if info > 0:
        raise NotPositiveDefiniteError(
            f"matrix not positive definite at pivot {info - 1}", pivot=info - 1
        )
    if info < 0:
        raise ValueError(f"illegal argument to dpotrf: {-info}")
    buf = _Buffer(max(2 * n, 8))
    buf.arr[:n, :n] = c
    buf.rows = n
    return CholFactor(buf, n)


def chol_append(factor: CholFactor, cross, corner: float) -> CholFactor:
    """Extend the factor by one bordered row in O(n^2).

    Given L factoring A, returns the factor of ``[[A, cross], [cross.T,
    corner]]``: solve L z = cross, set the new diagonal to sqrt(corner -
    z.z).  Raises :class:`NotPositiveDefiniteError` when that quantity is
    nonpositive.
    """
    cross = np.asarray(cross, dtype=float)
    n = factor.n
    if cross.shape != (n,):
        raise DimensionMismatchError(f"cross has shape {cross.shape}, expected ({n},)")
    _COUNTS["chol_append"] += 1
    if n == 0:
        z = cross
        d2 = float(corner)
    else:
        z = solve_triangular(factor.L, cross, lower=True, check_finite=False)
        d2 = float(corner) - float(z @ z)
    if d2 <= 0.0:
        raise NotPositiveDefiniteError(
            f"bordered matrix not positive definite at pivot {n}", pivot=n
        )
    buf = factor._buf
    if factor.n == buf.rows and buf.arr.shape[0] > n:
        new_buf = buf  # sequential append: extend in place
    else:
        new_buf = _Buffer(max(2 * (n + 1), 8))
        new_buf.arr[:n, :n] = factor.L
        new_buf.rows = n
    new_buf.arr[n, :n] = z
    new_buf.arr[n, n] = np.sqrt(d2)
    new_buf.rows = n + 1
    return CholFactor(new_buf, n + 1)


def tri_solve(factor: CholFactor, b, side: str = "lower") -> np.ndarray:
    """Solve L x = b (``side="lower"``) or L.T x = b (``side="upper-transposed"``)."""
    b = np.asarray(b, dtype=float)
    if b.shape[0] != factor.n:
        raise DimensionMismatchError(f"rhs has length {b.shape[0]}, expected {factor.n}")
    if factor.n == 0:
        return b.copy()
    if side == "lower":
        return solve_triangular(factor.L, b, lower=True, check_finite=False)
    if side == "upper-transposed":
        return solve_triangular(factor.L, b, lower=True, trans="T", check_finite=False)
    raise ValueError(f"unknown side {side!r}")


def chol_solve(factor: CholFactor, b) -> np.ndarray:
    """Return A^{-1} b via two triangular solves."""
    return tri_solve(factor, tri_solve(factor, b, "lower"), "upper-transposed")


def log_det(factor: CholFactor) -> float:
    """log det A = 2 sum log diag(L)."""
    if factor.n == 0:
        return 0.0
    return float(2.0 * np.sum(np.log(np.diagonal(factor.L))))
