"""Pointwise real linear algebra with a uniform rank policy.

Singular values below RANK_TOL times max(largest singular value, 1) are
treated as zero everywhere in the package.
"""

import numpy as np

RANK_TOL = 1e-9

__all__ = [
    "RANK_TOL",
    "rank",
    "row_reduce",
    "intersection_dim",
    "intersection_basis",
    "contained_in_span",
]


def _sv_cut(s):
    if len(s) == 0:
        return 0.0
    return RANK_TOL * max(s[0], 1.0)


def rank(A):
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.size == 0 or A.shape[0] == 0:
        return 0
    s = np.linalg.svd(A, compute_uv=False)
    return int(np.sum(s > _sv_cut(s)))


def row_reduce(A, tol=None):
    """Row echelon basis of the row space, deterministic pivot order
    (leftmost usable column first)."""
    A = np.atleast_2d(np.asarray(A, dtype=float)).copy()
    if A.size == 0:
        return A.reshape(0, A.shape[1] if A.ndim == 2 else 0)
    if tol is None:
        tol = RANK_TOL * max(np.abs(A).max(), 1.0)
    rows, cols = A.shape
    r = 0
    for c in range(cols):
        piv = None
        best = tol
        for i in range(r, rows):
            if abs(A[i, c]) > best:
                piv = i
                best = abs(A[i, c])
        if piv is None:
            continue
        A[[r, piv]] = A[[piv, r]]
        A[r] = A[r] / A[r, c]
        for i in range(rows):
            if i != r and abs(A[i, c]) > tol:
                A[i] = A[i] - A[i, c] * A[r]
        r += 1
        if r == rows:
            break
    return A[:r]


def intersection_dim(A, B):
    """dim(rowspace(A) ∩ rowspace(B))."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    ra, rb = rank(A), rank(B)
    if ra == 0 or rb == 0:
        return 0
    stacked = np.vstack([A, B])
    return ra + rb - rank(stacked)


def intersection_basis(A, B):
    """A row basis of rowspace(A) ∩ rowspace(B)."""
    A = row_reduce(np.atleast_2d(np.asarray(A, dtype=float)))
    B = row_reduce(np.atleast_2d(np.asarray(B, dtype=float)))
    if A.shape[0] == 0 or B.shape[0] == 0:
        return np.zeros((0, A.shape[1] if A.size else B.shape[1]))
    # c_A @ A = c_B @ B  <=>  [A^T | -B^T] [c_A; c_B] = 0
    M = np.hstack([A.T, -B.T])
    _, s, vh = np.linalg.svd(M)
    rank_m = int(np.sum(s > _sv_cut(s)))
    null_vecs = vh[rank_m:]
    if null_vecs.shape[0] == 0:
        return np.zeros((0, A.shape[1]))
    vecs = null_vecs[:, :A.shape[0]] @ A
    return row_reduce(vecs)


def contained_in_span(vectors, basis):
    """Is every row of `vectors` inside rowspace(basis)?"""
    vectors = np.atleast_2d(np.asarray(vectors, dtype=float))
    basis = np.atleast_2d(np.asarray(basis, dtype=float))
    if vectors.shape[0] == 0 or rank(vectors) == 0:
        return True
    rb = rank(basis)
    return rank(np.vstack([basis, vectors])) == rb
