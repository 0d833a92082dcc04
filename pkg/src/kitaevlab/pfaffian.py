"""Pfaffian of a skew-symmetric matrix by pivoted Parlett-Reid elimination."""

import numpy as np


def pfaffian(A, check: bool = True, atol: float = 1e-12):
    A = np.array(A, dtype=np.result_type(A, float), copy=True)
    n = A.shape[0]
    if A.shape != (n, n):
        raise ValueError("pfaffian requires a square matrix")
    if check and not np.allclose(A, -A.T, atol=atol, rtol=0):
        raise ValueError("matrix is not skew-symmetric")
    if n == 0:
        return A.dtype.type(1)
    if n % 2:
        return A.dtype.type(0)

    pf = A.dtype.type(1)
    for k in range(0, n - 1, 2):
        kp = k + 1 + int(np.abs(A[k + 1:, k]).argmax())
        if kp != k + 1:
            A[[k + 1, kp], :] = A[[kp, k + 1], :]
            A[:, [k + 1, kp]] = A[:, [kp, k + 1]]
            pf = -pf
        if A[k + 1, k] == 0:
            return A.dtype.type(0)
        pf *= A[k, k + 1]
        if k + 2 < n:
            tau = A[k, k + 2:] / A[k, k + 1]
            col = A[k + 2:, k + 1]
            A[k + 2:, k + 2:] += np.outer(tau, col) - np.outer(col, tau)
    return pf


def pfaffian_expansion(A):
    """Recursive expansion along the first row; exponential cost, for checking only."""
    A = np.asarray(A)
    n = A.shape[0]
    if n == 0:
        return 1.0
    if n % 2:
        return 0.0
    total = 0.0
    rest = list(range(1, n))
    for pos, j in enumerate(rest):
        if A[0, j] == 0:
            continue
        keep = [k for k in rest if k != j]
        total += (-1) ** pos * A[0, j] * pfaffian_expansion(A[np.ix_(keep, keep)])
    return total
