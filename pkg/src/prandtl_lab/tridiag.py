from numba import njit
import numpy as np


@njit(cache=True)
def _thomas(a, b, c, d):
    n = d.shape[0]
    cp = np.empty(n)
    dp = np.empty(n)
    cp[0] = c[0] / b[0]
    dp[0] = d[0] / b[0]
    for k in range(1, n):
        m = b[k] - a[k] * cp[k - 1]
        cp[k] = c[k] / m
        dp[k] = (d[k] - a[k] * dp[k - 1]) / m
    x = np.empty(n)
    x[n - 1] = dp[n - 1]
    for k in range(n - 2, -1, -1):
        x[k] = dp[k] - cp[k] * x[k + 1]
    return x


def solve_tridiag(a, b, c, d):
    """
    Solve a tridiagonal system with the Thomas algorithm.

    Parameters
    ----------
    a : ndarray
        Sub-diagonal, length n, ``a[0]`` ignored.
    b : ndarray
        Main diagonal, length n.
    c : ndarray
        Super-diagonal, length n, ``c[-1]`` ignored.
    d : ndarray
        Right-hand side.

    Returns
    -------
    ndarray
        Solution vector.

    No pivoting: the systems assembled by the marchers are diagonally
    dominant M-matrices.
    """
    a = np.ascontiguousarray(a, dtype=float)
    b = np.ascontiguousarray(b, dtype=float)
    c = np.ascontiguousarray(c, dtype=float)
    d = np.ascontiguousarray(d, dtype=float)
    if not (a.shape == b.shape == c.shape == d.shape) or b.ndim != 1:
        raise ValueError("diagonals and rhs must be 1-D arrays of equal length")
    return _thomas(a, b, c, d)


def tridiag_matvec(a, b, c, x):
    """Compute ``T @ x`` for the tridiagonal ``T`` stored as (a, b, c)."""
    y = b * x
    y[1:] += a[1:] * x[:-1]
    y[:-1] += c[:-1] * x[1:]
    return y
