"""Rank, span and kernel helpers.

Floating point routines threshold singular values at ``tol * max(s_max, 1)``:
inputs are normalized to entries of order one, and the floor keeps pure
roundoff (as in the commutators of a commutative algebra) from counting as
rank.  The
rational routines run Gaussian elimination over ``Fraction`` and are meant
for the small exact checks only.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np
import scipy.linalg

DEFAULT_TOL = 1e-9


def _cutoff(s: np.ndarray, tol: float) -> float:
    return tol * max(float(s[0]) if s.size else 0.0, 1.0)


def rank(a: np.ndarray, tol: float = DEFAULT_TOL) -> int:
    a = np.atleast_2d(np.asarray(a, dtype=complex))
    if a.size == 0:
        return 0
    s = np.linalg.svd(a, compute_uv=False)
    if s.size == 0:
        return 0
    return int(np.sum(s > _cutoff(s, tol)))


def row_basis(rows: np.ndarray, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Orthonormal basis (as rows) of the span of the given rows."""
    rows = np.atleast_2d(np.asarray(rows, dtype=complex))
    if rows.shape[0] == 0:
        return rows
    u, s, vh = np.linalg.svd(rows, full_matrices=False)
    return vh[: int(np.sum(s > _cutoff(s, tol)))]


def null_space(a: np.ndarray, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Orthonormal basis (as columns) of the kernel of ``a``."""
    a = np.atleast_2d(np.asarray(a, dtype=complex))
    if a.shape[0] == 0:
        return np.eye(a.shape[1], dtype=complex)
    # tall systems: the reduced decomposition already holds every right singular vector
    _, s, vh = scipy.linalg.svd(a, full_matrices=a.shape[0] < a.shape[1])
    r = int(np.sum(s > _cutoff(s, tol)))
    return vh[r:].conj().T


def same_span(a: np.ndarray, b: np.ndarray, tol: float = DEFAULT_TOL) -> bool:
    """Whether two families of vectors (rows) span the same subspace."""
    a = np.atleast_2d(np.asarray(a, dtype=complex)).reshape(len(a), -1)
    b = np.atleast_2d(np.asarray(b, dtype=complex)).reshape(len(b), -1)
    ra, rb = rank(a, tol), rank(b, tol)
    return ra == rb == rank(np.vstack([a, b]), tol)


def psd_split(h: np.ndarray, tol: float = DEFAULT_TOL):
    """Eigen-split of a Hermitian matrix into its positive part.

    Returns ``(q, qinv, evals)`` where ``q = L^{1/2} V^H`` maps the ambient
    space onto the quotient by the kernel (so ``x^H h y == (q x)^H (q y)``)
    and ``qinv = V L^{-1/2}`` is a right inverse of ``q``.
    """
    h = (h + h.conj().T) / 2
    evals, vecs = np.linalg.eigh(h)
    top = max(abs(evals).max(initial=0.0), 1.0)
    keep = evals > tol * top
    v, lam = vecs[:, keep], evals[keep]
    q = np.sqrt(lam)[:, None] * v.conj().T
    qinv = v / np.sqrt(lam)[None, :]
    return q, qinv, evals


def polar_unitary(x: np.ndarray) -> np.ndarray:
    u, _, vh = np.linalg.svd(x)
    return u @ vh


def max_abs(a) -> float:
    a = np.asarray(a)
    return float(np.abs(a).max()) if a.size else 0.0


# -- exact rational elimination -------------------------------------------------


def rational_rref(rows: list[list[Fraction]]) -> tuple[list[list[Fraction]], list[int]]:
    m = [list(map(Fraction, r)) for r in rows]
    if not m:
        return m, []
    n_cols = len(m[0])
    pivots = []
    r = 0
    for c in range(n_cols):
        p = next((i for i in range(r, len(m)) if m[i][c] != 0), None)
        if p is None:
            continue
        m[r], m[p] = m[p], m[r]
        pv = m[r][c]
        m[r] = [v / pv for v in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [a - f * b for a, b in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == len(m):
            break
    return m[:r], pivots


def rational_rank(rows) -> int:
    return len(rational_rref(rows)[1])


def rational_null_space(rows, n_cols: int) -> list[list[Fraction]]:
    """Basis of {v : rows @ v == 0} over the rationals."""
    if not rows:
        return [[Fraction(int(i == j)) for i in range(n_cols)] for j in range(n_cols)]
    red, pivots = rational_rref(rows)
    free = [c for c in range(n_cols) if c not in pivots]
    basis = []
    for f in free:
        v = [Fraction(0)] * n_cols
        v[f] = Fraction(1)
        for row, p in zip(red, pivots):
            v[p] = -row[f]
        basis.append(v)
    return basis
