"""
Rank-1 Cholesky update/downdate on a lower-triangular factor.

Loops are explicit so numba can compile them in nopython mode. The
recursion is the classic cholupdate:

    for k:
        r = sqrt(L[k,k]^2 ± x[k]^2)
        c = r / L[k,k];  s = x[k] / L[k,k];  L[k,k] = r
        L[k+1:,k] = (L[k+1:,k] ± s x[k+1:]) / c
        x[k+1:]   = c x[k+1:] − s L[k+1:,k]
"""

from __future__ import annotations

import numpy as np
from numba import njit

from core.exceptions import DowndateError, FactorCorruptedError


@njit(cache=True)
def _chol_rank1(L, x, sign):
    n = x.shape[0]
    for k in range(n):
        d = L[k, k]
        if x[k] == 0.0 and d >= 0.0:
            continue
        r_squared = d * d + sign * x[k] * x[k]
        if r_squared <= 0.0 or d <= 0.0:
            return k
        r = np.sqrt(r_squared)
        c = r / d
        s = x[k] / d
        L[k, k] = r
        for i in range(k + 1, n):
            L[i, k] = (L[i, k] + sign * s * x[i]) / c
            x[i] = c * x[i] - s * L[i, k]
    return -1


def chol_update(L: np.ndarray, x: np.ndarray, sign: float = 1.0) -> tuple[np.ndarray, int]:
    """
    Factor of L Lᵀ + sign·x xᵀ.

    Returns (new factor, failed column). The failed column is −1 on
    success; on failure the returned factor is only partially updated.
    """
    L_new = np.array(L, dtype=np.float64, order="C")
    work = np.array(x, dtype=np.float64)
    failed = _chol_rank1(L_new, work, 1.0 if sign >= 0 else -1.0)
    return L_new, int(failed)


def chol_downdate_columns(L: np.ndarray, U: np.ndarray) -> np.ndarray:
    """Successively downdate L by every column of U; raises DowndateError."""
    out = np.array(L, dtype=np.float64, order="C")
    for col in range(U.shape[1]):
        out, failed = chol_update(out, U[:, col], -1.0)
        if failed >= 0:
            raise DowndateError(col)
    return out


def positive_diagonal(L: np.ndarray) -> np.ndarray:
    """Flip column signs so the diagonal is nonnegative; L Lᵀ is unchanged."""
    signs = np.where(np.diag(L) < 0.0, -1.0, 1.0)
    return L * signs[None, :]


def check_factor(L: np.ndarray) -> None:
    d = np.diag(L)
    if not np.all(np.isfinite(L)):
        raise FactorCorruptedError("non-finite entries")
    if np.any(d <= 0.0):
        raise FactorCorruptedError(f"nonpositive diagonal at {int(np.argmin(d))}")
