"""Exact linear algebra.

The generic routines (``det``, ``adjugate``, ``matmul``, ``rank_factorize``,
``kernel_projection``) take matrices as lists of rows together with a field
object exposing ``zero, one, add, sub, mul, div, neg, is_zero``.  Both
``FieldCtx`` and ``RatFuncField`` qualify, so running the same code over
rational functions produces the rational maps of the rank factorization and
of the kernel projection.

The concrete routines work on NumPy arrays of encoded elements of a
``FieldCtx``; ``batch_rank`` eliminates a whole stack of matrices at once.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import RankDeficient, ShapeMismatch, SingularPivot
from .field import FieldCtx


@dataclass(frozen=True)
class Pivot:
    """Row indices I and column indices J (0-based, sorted) of an invertible minor."""

    I: tuple[int, ...]
    J: tuple[int, ...]

    def __post_init__(self):
        if len(self.I) != len(self.J):
            raise ValueError("pivot row and column sets differ in size")

    @property
    def r(self) -> int:
        return len(self.I)


# ---------------------------------------------------------------------------
# generic
# ---------------------------------------------------------------------------


def _shape(A):
    m = len(A)
    n = len(A[0]) if m else 0
    if any(len(row) != n for row in A):
        raise ShapeMismatch("ragged matrix")
    return m, n


def det(A, K):
    """Determinant by cofactor expansion with memoized column subsets.

    Division-free, so over rational functions the result is a polynomial
    expression in the entries.
    """
    n, n2 = _shape(A)
    if n != n2:
        raise ShapeMismatch("determinant of a non-square matrix")
    if n == 0:
        return K.one
    memo = {}

    def minor(row, cols):
        # determinant of rows row..n-1 restricted to the sorted column tuple
        if row == n:
            return K.one
        key = (row, cols)
        if key in memo:
            return memo[key]
        acc = K.zero
        for pos, c in enumerate(cols):
            a = A[row][c]
            if K.is_zero(a):
                continue
            sub = minor(row + 1, cols[:pos] + cols[pos + 1:])
            if K.is_zero(sub):
                continue
            term = K.mul(a, sub)
            acc = K.sub(acc, term) if pos % 2 else K.add(acc, term)
        memo[key] = acc
        return acc

    return minor(0, tuple(range(n)))


def adjugate(A, K):
    """Transpose of the cofactor matrix, so that A * adj(A) = det(A) * I."""
    n, n2 = _shape(A)
    if n != n2:
        raise ShapeMismatch("adjugate of a non-square matrix")
    if n == 0:
        return []
    if n == 1:
        return [[K.one]]
    out = [[K.zero] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            sub = [[A[a][b] for b in range(n) if b != j] for a in range(n) if a != i]
            c = det(sub, K)
            out[j][i] = K.neg(c) if (i + j) % 2 else c
    return out


def matmul(A, B, K):
    m, n = _shape(A)
    n2, p = _shape(B)
    if n != n2:
        raise ShapeMismatch(f"cannot multiply {m}x{n} by {n2}x{p}")
    out = []
    for i in range(m):
        row = []
        for j in range(p):
            acc = K.zero
            for t in range(n):
                a = A[i][t]
                if K.is_zero(a):
                    continue
                b = B[t][j]
                if K.is_zero(b):
                    continue
                acc = K.add(acc, K.mul(a, b))
            row.append(acc)
        out.append(row)
    return out


def identity(n, K):
    return [[K.one if i == j else K.zero for j in range(n)] for i in range(n)]


def submatrix(A, rows, cols):
    return [[A[i][j] for j in cols] for i in rows]


def rank_factorize(A, r: int, piv: Pivot, K):
    """A1 = A[:, J] and A2 = adj(A_IJ) A[I, :] / det(A_IJ), so that A = A1 A2 when rank A = r.

    ``A2[:, J]`` is set to the exact identity; the formula gives the identity
    there anyway, and writing it explicitly keeps those entries free of
    denominators.
    """
    m, n = _shape(A)
    if piv.r != r:
        raise ValueError(f"pivot has size {piv.r}, expected {r}")
    if any(not 0 <= i < m for i in piv.I) or any(not 0 <= j < n for j in piv.J):
        raise ShapeMismatch("pivot index out of range")
    A1 = [[A[i][j] for j in piv.J] for i in range(m)]
    if r == 0:
        return A1, []
    M = submatrix(A, piv.I, piv.J)
    d = det(M, K)
    if K.is_zero(d):
        raise SingularPivot(f"pivot minor at rows {piv.I}, cols {piv.J} is singular")
    adj = adjugate(M, K)
    rows_I = [A[i] for i in piv.I]
    jset = {j: t for t, j in enumerate(piv.J)}
    A2 = []
    for t in range(r):
        row = []
        for c in range(n):
            if c in jset:
                row.append(K.one if jset[c] == t else K.zero)
                continue
            acc = K.zero
            for s in range(r):
                a = adj[t][s]
                b = rows_I[s][c]
                if K.is_zero(a) or K.is_zero(b):
                    continue
                acc = K.add(acc, K.mul(a, b))
            row.append(K.zero if K.is_zero(acc) else K.div(acc, d))
        A2.append(row)
    return A1, A2


def projection_complement(A2, n: int, piv: Pivot, K):
    """Q = I - P: row J_t of Q is row t of A2, every other row is zero."""
    Q = [[K.zero] * n for _ in range(n)]
    for t, j in enumerate(piv.J):
        Q[j] = list(A2[t])
    return Q


def kernel_projection(A, r: int, piv: Pivot, K):
    """Projection P onto ker A with I - P zero outside the rows J."""
    m, n = _shape(A)
    _, A2 = rank_factorize(A, r, piv, K)
    Q = projection_complement(A2, n, piv, K)
    return [[K.sub(K.one if i == j else K.zero, Q[i][j]) for j in range(n)] for i in range(n)]


# ---------------------------------------------------------------------------
# concrete
# ---------------------------------------------------------------------------


def find_pivot(A, r: int, ctx: FieldCtx) -> Pivot:
    """Greedy row-by-row elimination; each independent row contributes its first nonzero column."""
    A = np.asarray(A, dtype=np.int64)
    m, n = A.shape if A.ndim == 2 else (0, 0)
    if r == 0:
        return Pivot((), ())
    basis = []  # (pivot column, row normalized to 1 at that column)
    rows, cols = [], []
    for i in range(m):
        v = A[i].copy()
        for c, b in basis:
            if v[c]:
                v = ctx.sub_arr(v, ctx.mul_arr(b, int(v[c])))
        nz = np.flatnonzero(v)
        if len(nz) == 0:
            continue
        c = int(nz[0])
        basis.append((c, ctx.mul_arr(v, ctx.inv(int(v[c])))))
        rows.append(i)
        cols.append(c)
        if len(rows) == r:
            return Pivot(tuple(rows), tuple(sorted(cols)))
    raise RankDeficient(f"matrix has rank {len(rows)} < {r}")


def rref(A, ctx: FieldCtx):
    """Reduced row echelon form and the list of pivot columns."""
    M = np.array(A, dtype=np.int64, copy=True)
    if M.ndim != 2:
        raise ShapeMismatch("rref needs a matrix")
    m, n = M.shape
    pivots = []
    row = 0
    for c in range(n):
        if row == m:
            break
        nz = np.flatnonzero(M[row:, c])
        if len(nz) == 0:
            continue
        p = row + int(nz[0])
        if p != row:
            M[[row, p]] = M[[p, row]]
        M[row] = ctx.mul_arr(M[row], ctx.inv(int(M[row, c])))
        for i in range(m):
            if i != row and M[i, c]:
                M[i] = ctx.sub_arr(M[i], ctx.mul_arr(M[row], int(M[i, c])))
        pivots.append(c)
        row += 1
    return M, pivots


def rank(A, ctx: FieldCtx) -> int:
    A = np.asarray(A, dtype=np.int64)
    if A.size == 0:
        return 0
    return len(rref(A, ctx)[1])


def kernel_basis(A, ctx: FieldCtx) -> np.ndarray:
    """Columns spanning the right kernel of A (shape n x (n - rank))."""
    A = np.asarray(A, dtype=np.int64)
    n = A.shape[1]
    R, pivots = rref(A, ctx)
    free = [c for c in range(n) if c not in pivots]
    B = np.zeros((n, len(free)), dtype=np.int64)
    for t, f in enumerate(free):
        B[f, t] = 1
        for i, pc in enumerate(pivots):
            B[pc, t] = ctx.neg(int(R[i, f]))
    return B


def batch_rank(M, ctx: FieldCtx) -> np.ndarray:
    """Ranks of a stack of matrices, shape (B, m, n) -> (B,), by vectorized elimination."""
    M = np.array(M, dtype=np.int64, copy=True)
    if M.ndim != 3:
        raise ShapeMismatch("batch_rank expects a (B, m, n) array")
    B, m, n = M.shape
    rk = np.zeros(B, dtype=np.int64)
    if B == 0 or m == 0 or n == 0:
        return rk
    rows = np.arange(m)
    bidx = np.arange(B)
    for c in range(n):
        cand = (M[:, :, c] != 0) & (rows[None, :] >= rk[:, None])
        has = cand.any(axis=1)
        if not has.any():
            continue
        sel = bidx[has]
        p = np.argmax(cand[sel], axis=1)
        r0 = rk[sel]
        # swap the pivot row into position r0
        row_p = M[sel, p].copy()
        M[sel, p] = M[sel, r0]
        M[sel, r0] = row_p
        inv = ctx.inv_arr(row_p[:, c])
        prow = ctx.mul_arr(row_p, inv[:, None])
        below = rows[None, :] > r0[:, None]
        factors = np.where(below, M[sel, :, c], 0)
        M[sel] = ctx.sub_arr(M[sel], ctx.mul_arr(factors[:, :, None], prow[:, None, :]))
        rk[sel] += 1
        if np.all(rk >= m):
            break
    return rk
