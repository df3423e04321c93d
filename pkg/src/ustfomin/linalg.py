"""Small exact linear algebra over Fractions (Bareiss / Gauss-Jordan)."""

from fractions import Fraction

import numpy as np


def is_exact(x):
    return isinstance(x, (int, Fraction))


def bareiss_det(rows):
    """Determinant by fraction-free Bareiss elimination (exact for int/Fraction)."""
    a = [list(r) for r in rows]
    n = len(a)
    if n == 0:
        return Fraction(1)
    sign = 1
    prev = Fraction(1)
    for k in range(n - 1):
        if a[k][k] == 0:
            for i in range(k + 1, n):
                if a[i][k] != 0:
                    a[k], a[i] = a[i], a[k]
                    sign = -sign
                    break
            else:
                return Fraction(0)
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev
        prev = a[k][k]
    return sign * Fraction(a[n - 1][n - 1])


def det(rows):
    """Exact determinant for rational entries, LU with partial pivoting otherwise."""
    if len(rows) == 0:
        return Fraction(1)
    if all(is_exact(x) for r in rows for x in r):
        return bareiss_det(rows)
    return float(np.linalg.det(np.array(rows, dtype=float)))


def solve_exact(A, B):
    """Solve A X = B exactly; A is n x n, B is n x m (lists of Fractions)."""
    n = len(A)
    m = len(B[0]) if B else 0
    aug = [[Fraction(x) for x in A[i]] + [Fraction(x) for x in B[i]] for i in range(n)]
    for k in range(n):
        piv = next((i for i in range(k, n) if aug[i][k] != 0), None)
        if piv is None:
            raise np.linalg.LinAlgError("singular system")
        aug[k], aug[piv] = aug[piv], aug[k]
        p = aug[k][k]
        row_k = [x / p for x in aug[k]]
        aug[k] = row_k
        nz = [j for j in range(k, n + m) if row_k[j] != 0]
        for i in range(n):
            if i != k and aug[i][k] != 0:
                f = aug[i][k]
                row = aug[i]
                for j in nz:
                    row[j] -= f * row_k[j]
    return [row[n:] for row in aug]
