"""Exact exploration of the kernel variety of a tensor slicing.

Everything rests on one observation: with all blocks but one fixed, the
slicing is a linear map in the remaining block.  Listing kernel points still
walks the whole point space, but counting only walks assignments of the
other blocks and adds ``Q^(n_free - rank)`` for each, with ranks computed for
whole batches of small matrices at once.

Points are rows of integer arrays in the concatenated variable order used by
``slice_forms``.  Listing order is lexicographic with the first coordinate
most significant (the order of ``itertools.product``).
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from .errors import BudgetExceeded, PRDecompError
from .field import FieldCtx, embedding, ff_make
from .linalg import Pivot, batch_rank, find_pivot, rank, rank_factorize
from .poly import RatFunc, RatFuncField, RationalMap, obj_array, poly_eval
from .tensor import Tensor, slice_offsets

DEFAULT_BUDGET = 1 << 24
CHUNK = 1 << 15


def default_budget() -> int:
    """The budget from PRDECOMP_BUDGET, or 2^24."""
    raw = os.environ.get("PRDECOMP_BUDGET")
    return int(raw) if raw else DEFAULT_BUDGET


def lift(T: Tensor, ext: int) -> tuple[FieldCtx, np.ndarray]:
    """The entries of T pushed into F_{q^ext}."""
    if ext < 1:
        raise ValueError("extension degree must be >= 1")
    if ext == 1:
        return T.ctx, T.data
    big = ff_make(T.ctx.p, T.ctx.e * ext)
    return big, embedding(T.ctx, big)[T.data]


def _points(Q: int, n: int, start: int, stop: int) -> np.ndarray:
    """Points with lexicographic indices start..stop-1 in F_Q^n."""
    idx = np.arange(start, stop, dtype=np.int64)
    out = np.zeros((len(idx), n), dtype=np.int64)
    for col in range(n - 1, -1, -1):
        idx, out[:, col] = np.divmod(idx, Q)
    return out


def contract(ctx: FieldCtx, data: np.ndarray, axis: int, keep: int | None, pts: np.ndarray) -> np.ndarray:
    """Contract every block other than ``axis`` and ``keep`` with the point coordinates.

    Returns shape (B, n_keep, n_axis), or (B, n_axis) when ``keep`` is None.
    """
    dims = data.shape
    offs = slice_offsets(dims, axis)
    rest = [t for t in range(len(dims)) if t not in (axis, keep)]
    head = [keep] if keep is not None else []
    acc = np.transpose(data, rest + head + [axis])
    B = len(pts)
    acc = np.broadcast_to(acc, (B,) + acc.shape)
    for t in rest:
        x = pts[:, offs[t]:offs[t] + dims[t]]
        acc = ctx.sum_arr(ctx.mul_arr(acc, x.reshape(x.shape + (1,) * (acc.ndim - 2))), axis=1)
    return np.array(acc)


def _free_block(dims, axis: int) -> int:
    others = [t for t in range(len(dims)) if t != axis]
    return max(others, key=lambda t: (dims[t], -t))


def enumerate_kernel(T: Tensor, axis: int, ext: int = 1, budget: int | None = None) -> np.ndarray:
    """All points of F_{q^ext}^N on which the slicing vanishes, as an (count, N) array."""
    budget = default_budget() if budget is None else budget
    ctx, data = lift(T, ext)
    dims = T.dims
    N = sum(dims) - dims[axis]
    Q = ctx.q
    if Q**N > budget:
        raise BudgetExceeded(f"listing {Q}^{N} points exceeds budget {budget}")
    total = Q**N
    found = []
    for start in range(0, total, CHUNK):
        pts = _points(Q, N, start, min(total, start + CHUNK))
        vals = contract(ctx, data, axis, None, pts)
        found.append(pts[~vals.any(axis=1)])
    return np.concatenate(found) if found else np.zeros((0, N), dtype=np.int64)


def kernel_count(T: Tensor, axis: int, ext: int = 1, budget: int | None = None) -> int:
    """|ker T~(F_{q^ext})| by summing kernel sizes of the linear maps in one free block."""
    budget = default_budget() if budget is None else budget
    ctx, data = lift(T, ext)
    dims = T.dims
    if not 0 <= axis < len(dims):
        raise ValueError(f"axis {axis} out of range")
    N = sum(dims) - dims[axis]
    Q = ctx.q
    if not data.any():
        return Q**N
    if len(dims) == 1:
        return 1
    f = _free_block(dims, axis)
    nf = dims[f]
    offs = slice_offsets(dims, axis)
    other_vars = [v for v in range(N) if not offs[f] <= v < offs[f] + nf]
    n_other = len(other_vars)
    if Q**n_other > budget:
        raise BudgetExceeded(f"counting over {Q}^{n_other} assignments exceeds budget {budget}")
    total_assign = Q**n_other
    count = 0
    for start in range(0, total_assign, CHUNK):
        sub = _points(Q, n_other, start, min(total_assign, start + CHUNK))
        pts = np.zeros((len(sub), N), dtype=np.int64)
        pts[:, other_vars] = sub
        mats = contract(ctx, data, axis, f, pts)  # (B, nf, m)
        ranks = batch_rank(np.swapaxes(mats, 1, 2), ctx)
        vals, mult = np.unique(ranks, return_counts=True)
        count += sum(int(c) * Q ** (nf - int(r)) for r, c in zip(vals, mult))
    return count


@dataclass(frozen=True)
class ARValue:
    """Analytic rank N - log_q(count), kept as exact integers."""

    N: int
    count: int
    q: int

    @property
    def value(self) -> float:
        return self.N - float(np.log(self.count) / np.log(self.q))

    def le(self, c: int) -> bool:
        """AR <= c, decided as count >= q^(N - c)."""
        if c >= self.N:
            return True
        return self.count >= self.q ** (self.N - c)

    def ge(self, c: int) -> bool:
        """AR >= c, decided as count <= q^(N - c)."""
        if c > self.N:
            return False
        return self.count <= self.q ** (self.N - c)

    def same_value(self, other: ARValue) -> bool:
        if self.q != other.q:
            raise ValueError("analytic ranks over different fields")
        return self.count * self.q**other.N == other.count * self.q**self.N

    def is_integer(self) -> bool:
        c, k = self.count, 0
        while c % self.q == 0:
            c //= self.q
            k += 1
        return c == 1

    def __str__(self):
        if self.is_integer():
            return str(round(self.value))
        return f"{self.N} - log_{self.q}({self.count})"


def analytic_rank(T: Tensor, axis: int | None = None, budget: int | None = None, check_axes: bool = True) -> ARValue:
    """Exact analytic rank from the kernel count along ``axis`` (default: last axis).

    With ``check_axes`` the count along every other affordable axis must give
    the same value; a disagreement is an internal error.
    """
    axis = T.k - 1 if axis is None else axis
    N = sum(T.dims) - T.dims[axis]
    ar = ARValue(N, kernel_count(T, axis, 1, budget), T.ctx.q)
    if check_axes:
        for j in range(T.k):
            if j == axis:
                continue
            try:
                other = ARValue(sum(T.dims) - T.dims[j], kernel_count(T, j, 1, budget), T.ctx.q)
            except BudgetExceeded:
                continue
            if not ar.same_value(other):
                raise PRDecompError(f"analytic rank differs between axes {axis} and {j}: {ar} vs {other}")
    return ar


def rounded_log(count: int, Q: int) -> int:
    """round(log_Q count), decided exactly: d with Q^(2d-1) <= count^2 < Q^(2d+1)."""
    c2 = count * count
    d = 0
    while Q ** (2 * d + 1) <= c2:
        d += 1
    return d


@dataclass
class KernelReport:
    axis: int
    N: int
    q: int
    counts: dict
    dim_ests: dict
    dim_est: int
    gr_est: int
    unstable: bool
    candidates: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "axis": self.axis + 1,
            "N": self.N,
            "q": self.q,
            "counts": {str(e): c for e, c in self.counts.items()},
            "dim_est": self.dim_est,
            "gr_est": self.gr_est,
            "candidates": [{"point": [int(v) for v in p], "rank": int(r)} for p, r in self.candidates],
            "unstable": self.unstable,
        }


def estimate_dim(T: Tensor, axis: int | None = None, E: int = 3, budget: int | None = None,
                 with_candidates: bool = False) -> KernelReport:
    """Dimension estimate of the kernel variety from point counts over F_{q^e}, e = 1..E.

    Extension degrees whose count would exceed the budget are skipped, so the
    estimate comes from the largest affordable one.  The report is flagged
    unstable when the two largest affordable degrees give different
    estimates.
    """
    axis = T.k - 1 if axis is None else axis
    N = sum(T.dims) - T.dims[axis]
    counts, ests = {}, {}
    for e in range(1, E + 1):
        try:
            c = kernel_count(T, axis, e, budget)
        except BudgetExceeded:
            if e == 1:
                raise
            break
        counts[e] = c
        ests[e] = rounded_log(c, T.ctx.q**e)
    top = max(ests)
    unstable = top >= 2 and ests[top - 1] != ests[top]
    dim = ests[top]
    cands = find_regular_point(T, axis, budget) if with_candidates else []
    return KernelReport(axis, N, T.ctx.q, counts, ests, dim, N - dim, unstable, cands)


def jacobian_at(T: Tensor, axis: int, pts: np.ndarray) -> np.ndarray:
    """D T~ at each point: shape (B, n_axis, N)."""
    ctx = T.ctx
    blocks = []
    for t in range(T.k):
        if t == axis:
            continue
        blocks.append(np.swapaxes(contract(ctx, T.data, axis, t, pts), 1, 2))
    return np.concatenate(blocks, axis=2)


def find_regular_point(T: Tensor, axis: int, budget: int | None = None) -> list[tuple[tuple[int, ...], int]]:
    """Kernel points sorted by rank of the Jacobian, highest first, ties in listing order."""
    pts = enumerate_kernel(T, axis, 1, budget)
    if len(pts) == 0:
        return []
    ranks = np.zeros(len(pts), dtype=np.int64)
    for start in range(0, len(pts), CHUNK):
        chunk = pts[start:start + CHUNK]
        ranks[start:start + CHUNK] = batch_rank(jacobian_at(T, axis, chunk), T.ctx)
    order = np.argsort(-ranks, kind="stable")
    return [(tuple(int(v) for v in pts[i]), int(ranks[i])) for i in order]


@dataclass
class TangentProjection:
    """P = I - Q for the Jacobian of ``forms``, with the pivot found at the base point."""

    P: RationalMap
    Q: np.ndarray  # object array of RatFunc, N x N
    A2: list
    pivot: Pivot
    r: int
    jacobian: list  # m x N lists of RatFunc


def symbolic_jacobian(forms, N: int):
    return [[RatFunc.poly(f.partial(j)) for j in range(N)] for f in forms]


def tangent_projection_map(forms, x0, pivot: Pivot | None = None) -> TangentProjection:
    """Rational kernel projection of the Jacobian of ``forms``, pivoted at ``x0``."""
    if not forms:
        raise ValueError("need at least one form")
    ctx = forms[0].ctx
    N = forms[0].nvars
    K = RatFuncField(ctx, N)
    jac = symbolic_jacobian(forms, N)
    J0 = np.array([[poly_eval(g.num, x0) for g in row] for row in jac], dtype=np.int64)
    r = rank(J0, ctx)
    if pivot is None:
        pivot = find_pivot(J0, r, ctx)
    _, A2 = rank_factorize(jac, r, pivot, K)
    Qm = obj_array((N, N), K.zero)
    for t, j in enumerate(pivot.J):
        for c in range(N):
            Qm[j, c] = A2[t][c]
    Pm = obj_array((N, N))
    for i in range(N):
        for c in range(N):
            Pm[i, c] = (K.one if i == c else K.zero) - Qm[i, c]
    return TangentProjection(RationalMap(ctx, N, Pm), Qm, A2, pivot, r, jac)
