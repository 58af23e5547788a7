"""Dense linear algebra for small symmetric matrices.

Everything here works on plain ``numpy`` arrays and is written for the
matrix sizes a single question produces (a few dozen answers at most).
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

SYMMETRY_RTOL = 1e-12
JACOBI_MAX_SWEEPS = 100
SINGULAR_RTOL = 1e-13


class NumericalError(ArithmeticError):
    """An iterative method failed to converge."""


class SymmetryError(ValueError):
    """A matrix expected to be symmetric is not."""


class NotPositiveDefiniteError(ArithmeticError):
    """Cholesky factorization hit a non-positive pivot."""

    def __init__(self, pivot, index):
        super().__init__(f"matrix is not positive definite (pivot {pivot:.3e} at row {index})")
        self.pivot = pivot
        self.index = index


class SingularMatrixError(ArithmeticError):
    """Gauss-Jordan elimination found no usable pivot."""

    def __init__(self, pivot):
        super().__init__(f"matrix is singular to working precision (pivot magnitude {pivot:.3e})")
        self.pivot = pivot


def as_square(m):
    a = np.array(m, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    return a


def is_symmetric(m):
    a = np.asarray(m, dtype=float)
    return bool(np.all(np.abs(a - a.T) <= SYMMETRY_RTOL * np.maximum(1.0, np.abs(a))))


def check_symmetric(m):
    if not is_symmetric(m):
        a = np.asarray(m, dtype=float)
        gap = float(np.max(np.abs(a - a.T)))
        raise SymmetryError(f"matrix is not symmetric (max |m_ij - m_ji| = {gap:.3e})")


@lru_cache(maxsize=64)
def _round_robin(n):
    """Pairings of ``0..n-1`` into rounds of disjoint pairs covering every pair once."""
    m = n + n % 2
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        pairs = [(players[i], players[m - 1 - i]) for i in range(m // 2)]
        pairs = sorted((min(a, b), max(a, b)) for a, b in pairs if a < n and b < n)
        if pairs:
            rounds.append((np.array([a for a, _ in pairs]), np.array([b for _, b in pairs])))
        players = [players[0], players[-1]] + players[1:-1]
    return tuple(rounds)


def sym_eigendecompose(m):
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Rotations are applied in round-robin order, so each round zeroes
    ``n // 2`` disjoint off-diagonal pairs with one orthogonal similarity
    transform.  Returns ``(eigenvalues, eigenvectors)`` with eigenvalues in
    descending order and the eigenvectors as orthonormal columns, so that
    ``V @ diag(w) @ V.T`` reconstructs ``m``.
    """
    a = as_square(m)
    check_symmetric(a)
    a = 0.5 * (a + a.T)
    n = a.shape[0]
    v = np.eye(n)
    scale = max(float(np.max(np.abs(a))) if n else 0.0, np.finfo(float).tiny)
    rounds = _round_robin(n)
    ident = np.eye(n)

    for _ in range(JACOBI_MAX_SWEEPS):
        off = math.sqrt(float(np.sum(np.triu(a, 1) ** 2)))
        if off <= 1e-15 * scale:
            break
        for p, q in rounds:
            apq = a[p, q]
            active = np.abs(apq) > 1e-300
            if not active.any():
                continue
            theta = (a[q, q] - a[p, p]) / (2.0 * np.where(active, apq, 1.0))
            # |theta| large enough to overflow theta**2 gives t = 0, which is the right limit
            t = np.where(theta >= 0.0, 1.0, -1.0) / (np.abs(theta) + np.hypot(theta, 1.0))
            t = np.where(active, t, 0.0)
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c
            rot = ident.copy()
            rot[p, p] = c
            rot[q, q] = c
            rot[p, q] = s
            rot[q, p] = -s
            a = rot.T @ a @ rot
            a[p, q] = 0.0
            a[q, p] = 0.0
            v = v @ rot
    else:
        raise NumericalError(f"Jacobi iteration did not converge in {JACOBI_MAX_SWEEPS} sweeps")

    w = np.diag(a).copy()
    order = np.argsort(-w, kind="stable")
    return w[order], v[:, order]


def lu_decompose(m):
    """LU factorization with partial pivoting.

    Returns ``(lu, perm, sign)``: unit-lower and upper factors packed into
    one array, the row permutation, and the permutation parity.  A zero
    pivot column is left in place (the determinant is then zero).
    """
    a = as_square(m)
    n = a.shape[0]
    perm = np.arange(n)
    sign = 1.0
    for k in range(n):
        p = k + int(np.argmax(np.abs(a[k:, k])))
        if p != k:
            a[[k, p]] = a[[p, k]]
            perm[[k, p]] = perm[[p, k]]
            sign = -sign
        pivot = a[k, k]
        if pivot == 0.0:
            continue
        a[k + 1:, k] /= pivot
        a[k + 1:, k + 1:] -= np.outer(a[k + 1:, k], a[k, k + 1:])
    return a, perm, sign


def det(m):
    """Determinant via LU with partial pivoting; the empty matrix has det 1."""
    a = np.asarray(m, dtype=float)
    if a.size == 0:
        return 1.0
    lu, _, sign = lu_decompose(a)
    return sign * float(np.prod(np.diag(lu)))


def cholesky(m):
    """Lower-triangular Cholesky factor of a symmetric positive-definite matrix.

    Only the lower triangle of ``m`` is read.
    """
    a = as_square(m)
    n = a.shape[0]
    chol = np.zeros_like(a)
    for j in range(n):
        row = chol[j, :j]
        d = a[j, j] - row @ row
        if not d > 0.0:
            raise NotPositiveDefiniteError(float(d), j)
        djj = math.sqrt(d)
        chol[j, j] = djj
        chol[j + 1:, j] = (a[j + 1:, j] - chol[j + 1:, :j] @ row) / djj
    return chol


def logdet_pd(m):
    """log det of a positive-definite matrix from its Cholesky diagonal."""
    a = np.asarray(m, dtype=float)
    if a.size == 0:
        return 0.0
    chol = cholesky(a)
    return 2.0 * float(np.sum(np.log(np.diag(chol))))


def inverse(m):
    """Inverse by Gauss-Jordan elimination with partial pivoting."""
    a = as_square(m)
    n = a.shape[0]
    aug = np.hstack([a, np.eye(n)])
    tol = SINGULAR_RTOL * max(float(np.max(np.abs(a))) if n else 0.0, np.finfo(float).tiny)
    for k in range(n):
        p = k + int(np.argmax(np.abs(aug[k:, k])))
        pivot = aug[p, k]
        if abs(pivot) <= tol:
            raise SingularMatrixError(abs(float(pivot)))
        if p != k:
            aug[[k, p]] = aug[[p, k]]
        aug[k] /= pivot
        col = aug[:, k].copy()
        col[k] = 0.0
        aug -= np.outer(col, aug[k])
    return aug[:, n:]


def batched_logdet_pd(stack):
    """log det for a stack of symmetric matrices, shape ``(b, k, k)``.

    Vectorized Cholesky across the batch.  Matrices that are not positive
    definite get ``-inf``.
    """
    a = np.asarray(stack, dtype=float)
    b, k = a.shape[0], a.shape[1]
    out = np.zeros(b)
    if k == 0:
        return out
    chol = np.zeros_like(a)
    ok = np.ones(b, dtype=bool)
    for j in range(k):
        row = chol[:, j, :j]
        d = a[:, j, j] - np.einsum("bi,bi->b", row, row)
        bad = ~(d > 0.0)
        ok &= ~bad
        d = np.where(bad, 1.0, d)
        djj = np.sqrt(d)
        chol[:, j, j] = djj
        out += np.log(djj)
        if j + 1 < k:
            below = a[:, j + 1:, j] - np.einsum("bij,bj->bi", chol[:, j + 1:, :j], row)
            chol[:, j + 1:, j] = below / djj[:, None]
    out *= 2.0
    out[~ok] = -np.inf
    return out
