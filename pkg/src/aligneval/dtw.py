"""Plain dynamic time warping over a cost matrix (no gully, no step penalties)."""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def _accumulate(C):
    n, m = C.shape
    D = np.empty((n, m))
    D[0, 0] = C[0, 0]
    for j in range(1, m):
        D[0, j] = D[0, j - 1] + C[0, j]
    for i in range(1, n):
        D[i, 0] = D[i - 1, 0] + C[i, 0]
        for j in range(1, m):
            best = D[i - 1, j - 1]
            if D[i - 1, j] < best:
                best = D[i - 1, j]
            if D[i, j - 1] < best:
                best = D[i, j - 1]
            D[i, j] = best + C[i, j]
    return D


@njit(cache=True)
def _backtrack(D):
    n, m = D.shape
    i, j = n - 1, m - 1
    out = np.empty((n + m - 1, 2), dtype=np.int64)
    k = 0
    out[k, 0] = i
    out[k, 1] = j
    while i > 0 or j > 0:
        if i == 0:
            j -= 1
        elif j == 0:
            i -= 1
        else:
            diag = D[i - 1, j - 1]
            up = D[i - 1, j]
            left = D[i, j - 1]
            if diag <= up and diag <= left:
                i -= 1
                j -= 1
            elif up <= left:
                i -= 1
            else:
                j -= 1
        k += 1
        out[k, 0] = i
        out[k, 1] = j
    return out[:k + 1][::-1].copy()


def dtw(C: np.ndarray) -> tuple[np.ndarray, float]:
    """Minimal-cost monotone path from ``(0, 0)`` to ``(n-1, m-1)``.

    Steps are ``(1, 1)``, ``(1, 0)`` and ``(0, 1)``; every visited cell adds
    its cost.  Ties prefer the diagonal.  Returns the ``(len, 2)`` index
    path and its total cost.
    """
    C = np.ascontiguousarray(C, dtype=np.float64)
    if C.ndim != 2 or C.size == 0:
        raise ValueError("cost matrix must be a non-empty 2-d array")
    if not np.all(np.isfinite(C)):
        raise ValueError("cost matrix contains non-finite values")
    D = _accumulate(C)
    return _backtrack(D), float(D[-1, -1])


def path_cost(C: np.ndarray, path: np.ndarray) -> float:
    path = np.asarray(path)
    return float(np.sum(C[path[:, 0], path[:, 1]]))
