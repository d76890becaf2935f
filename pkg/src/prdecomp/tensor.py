"""Tensors over finite fields, partitions, the constructing space and its IP map.

Axes are 0-based internally.  A partition of the axes ``{0..k-1}`` into two
nonempty parts is keyed by its side ``S`` that avoids the last axis, stored as
a sorted tuple; the complement always contains axis ``k-1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .errors import DimsMismatch, ShapeMismatch
from .field import FieldCtx
from .poly import MultiPoly


@dataclass(frozen=True, eq=False)
class Tensor:
    ctx: FieldCtx
    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.int64)
        if arr.ndim < 1:
            raise ShapeMismatch("a tensor needs at least one axis")
        if np.any((arr < 0) | (arr >= self.ctx.q)):
            raise ValueError("entries must be encoded elements of the field")
        arr = np.ascontiguousarray(arr)
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def dims(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def k(self) -> int:
        return self.data.ndim

    def is_zero(self) -> bool:
        return not self.data.any()

    def __eq__(self, other):
        return (
            isinstance(other, Tensor)
            and self.ctx == other.ctx
            and self.dims == other.dims
            and np.array_equal(self.data, other.data)
        )

    def __hash__(self):
        return hash((self.ctx, self.dims, self.data.tobytes()))

    def __add__(self, other: Tensor) -> Tensor:
        if self.dims != other.dims:
            raise DimsMismatch(f"{self.dims} vs {other.dims}")
        return Tensor(self.ctx, self.ctx.add_arr(self.data, other.data))

    def __sub__(self, other: Tensor) -> Tensor:
        if self.dims != other.dims:
            raise DimsMismatch(f"{self.dims} vs {other.dims}")
        return Tensor(self.ctx, self.ctx.sub_arr(self.data, other.data))

    @classmethod
    def zeros(cls, ctx, dims) -> Tensor:
        return cls(ctx, np.zeros(tuple(dims), dtype=np.int64))

    @classmethod
    def from_entries(cls, ctx, dims, entries) -> Tensor:
        """Build from ``{index tuple (0-based): value}``; repeated indices are rejected."""
        arr = np.zeros(tuple(dims), dtype=np.int64)
        for idx, val in entries.items():
            if len(idx) != len(dims) or any(not 0 <= i < n for i, n in zip(idx, dims)):
                raise ShapeMismatch(f"index {idx} outside dims {tuple(dims)}")
            arr[tuple(idx)] = val
        return cls(ctx, arr)


def w_tensor(ctx: FieldCtx) -> Tensor:
    """The 2x2x2 tensor with ones at 1-based positions (1,1,2), (1,2,1), (2,1,1)."""
    return Tensor.from_entries(ctx, (2, 2, 2), {(0, 0, 1): 1, (0, 1, 0): 1, (1, 0, 0): 1})


def random_tensor(ctx: FieldCtx, dims, rng: np.random.Generator, density: float = 1.0) -> Tensor:
    """Entries uniform in F_q with probability ``density``, zero otherwise."""
    dims = tuple(int(n) for n in dims)
    vals = rng.integers(0, ctx.q, size=dims, dtype=np.int64)
    if density < 1.0:
        mask = rng.random(size=dims) < density
        vals = np.where(mask, vals, 0)
    return Tensor(ctx, vals)


# ---------------------------------------------------------------------------
# partitions
# ---------------------------------------------------------------------------


def partitions(k: int) -> list[tuple[int, ...]]:
    """All 2^{k-1}-1 canonical sides S (nonempty subsets of {0..k-2}), in a fixed order."""
    out = []
    for size in range(1, k):
        out.extend(combinations(range(k - 1), size))
    return out


def complement(S, k: int) -> tuple[int, ...]:
    s = set(S)
    return tuple(i for i in range(k) if i not in s)


def canonical_side(S, k: int) -> tuple[int, ...]:
    """Canonical key of the unordered partition {S, complement}."""
    S = tuple(sorted(S))
    if not S or len(S) == k:
        raise ValueError(f"{S} is not a nontrivial part of {k} axes")
    return S if (k - 1) not in S else complement(S, k)


def outer(ctx: FieldCtx, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    return ctx.mul_arr(u.reshape(u.shape + (1,) * v.ndim), v)


def place(ctx: FieldCtx, S, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """u (axes S) times v (complementary axes) laid out in natural axis order."""
    k = u.ndim + v.ndim
    order = tuple(S) + complement(S, k)
    return outer(ctx, u, v).transpose(np.argsort(order))


# ---------------------------------------------------------------------------
# evaluation, slicing, flattening
# ---------------------------------------------------------------------------


def tensor_eval(T: Tensor, *xs) -> int:
    """The multilinear form sum_I T_I prod_j x_j[I_j]."""
    if len(xs) != T.k:
        raise ShapeMismatch(f"{len(xs)} vectors for a {T.k}-tensor")
    ctx = T.ctx
    acc = T.data
    for j, x in enumerate(xs):
        x = np.asarray(x, dtype=np.int64)
        if x.shape != (T.dims[j],):
            raise ShapeMismatch(f"argument {j} has shape {x.shape}, expected ({T.dims[j]},)")
        acc = ctx.sum_arr(ctx.mul_arr(acc, x.reshape((-1,) + (1,) * (acc.ndim - 1))), axis=0)
    return int(acc)


def slice_offsets(dims, axis: int) -> list[int]:
    """Offset of each non-sliced axis inside the concatenated variable vector."""
    offs, pos = [], 0
    for t, n in enumerate(dims):
        if t == axis:
            offs.append(-1)
        else:
            offs.append(pos)
            pos += n
    return offs


def slice_forms(T: Tensor, axis: int) -> list[MultiPoly]:
    """The n_axis forms of degree k-1 whose common zeros are the kernel variety.

    Form ``i`` is ``sum over I with I_axis = i of T_I * prod_{t != axis} x^{(t)}_{I_t}``
    in the ``N = sum_{t != axis} n_t`` variables ordered by axis, then index.
    """
    if not 0 <= axis < T.k:
        raise ValueError(f"axis {axis} out of range for a {T.k}-tensor")
    dims = T.dims
    N = sum(dims) - dims[axis]
    offs = slice_offsets(dims, axis)
    idx = np.argwhere(T.data != 0)
    vals = T.data[tuple(idx.T)]
    forms = []
    for i in range(dims[axis]):
        sel = idx[:, axis] == i
        rows = idx[sel]
        exps = np.zeros((len(rows), N), dtype=np.int64)
        for t in range(T.k):
            if t != axis:
                exps[np.arange(len(rows)), offs[t] + rows[:, t]] = 1
        forms.append(MultiPoly(T.ctx, N, exps, vals[sel]))
    return forms


def slice_eval_many(T: Tensor, axis: int, points: np.ndarray) -> np.ndarray:
    """T~ at each row of ``points`` (shape (B, N)), returned as (B, n_axis)."""
    ctx = T.ctx
    dims = T.dims
    offs = slice_offsets(dims, axis)
    pts = np.asarray(points, dtype=np.int64)
    acc = np.broadcast_to(np.moveaxis(T.data, axis, -1), (len(pts),) + tuple(
        n for t, n in enumerate(dims) if t != axis) + (dims[axis],))
    for t in range(T.k):
        if t == axis:
            continue
        x = pts[:, offs[t]:offs[t] + dims[t]]
        acc = ctx.sum_arr(ctx.mul_arr(acc, x.reshape(x.shape + (1,) * (acc.ndim - 2))), axis=1)
    return acc


def flatten(T: Tensor, S) -> np.ndarray:
    """Matrix with rows indexed by I_S and columns by the complementary indices."""
    S = tuple(sorted(S))
    comp = complement(S, T.k)
    if not S or not comp:
        raise ValueError("partition sides must be nonempty")
    rows = int(np.prod([T.dims[i] for i in S]))
    return T.data.transpose(S + comp).reshape(rows, -1)


# ---------------------------------------------------------------------------
# decompositions and the constructing space
# ---------------------------------------------------------------------------


@dataclass
class PRTerm:
    S: tuple[int, ...]
    u: np.ndarray
    v: np.ndarray

    def expand(self, ctx: FieldCtx) -> np.ndarray:
        return place(ctx, self.S, self.u, self.v)

    def is_zero(self) -> bool:
        return not self.u.any() or not self.v.any()


@dataclass
class PRDecomposition:
    ctx: FieldCtx
    dims: tuple[int, ...]
    terms: list[PRTerm] = field(default_factory=list)

    def __len__(self):
        return len(self.terms)

    def expand(self) -> np.ndarray:
        total = np.zeros(self.dims, dtype=np.int64)
        for t in self.terms:
            total = self.ctx.add_arr(total, t.expand(self.ctx))
        return total


@dataclass
class VerifyResult:
    ok: bool
    term_count: int

    def __bool__(self):
        return self.ok


def verify_decomposition(T: Tensor, d: PRDecomposition) -> VerifyResult:
    """Exact entrywise check that the terms of ``d`` sum to ``T``."""
    if tuple(d.dims) != T.dims:
        raise DimsMismatch(f"decomposition dims {tuple(d.dims)} vs tensor dims {T.dims}")
    k = T.k
    for t in d.terms:
        comp = complement(t.S, k)
        if (
            not t.S
            or not comp
            or t.u.shape != tuple(T.dims[i] for i in t.S)
            or t.v.shape != tuple(T.dims[i] for i in comp)
        ):
            return VerifyResult(False, len(d.terms))
    ok = np.array_equal(d.expand(), T.data)
    return VerifyResult(bool(ok), len(d.terms))


@dataclass
class ConstructingElement:
    """A point of the r-constructing space over a tensor space of shape ``dims``.

    ``pairs[S]`` is a list of (u, v): u has the dims of axes S, v those of the
    complement.  Lists may be shorter than ``r``; missing pairs are zero.
    """

    ctx: FieldCtx
    dims: tuple[int, ...]
    r: int
    pairs: dict

    def validate(self):
        k = len(self.dims)
        valid = set(partitions(k))
        for S, lst in self.pairs.items():
            if S not in valid:
                raise ShapeMismatch(f"{S} is not a canonical partition side for k={k}")
            if len(lst) > self.r:
                raise ShapeMismatch(f"{len(lst)} pairs for partition {S} exceed width {self.r}")
            comp = complement(S, k)
            for u, v in lst:
                if u.shape != tuple(self.dims[i] for i in S) or v.shape != tuple(self.dims[i] for i in comp):
                    raise ShapeMismatch(f"pair shapes {u.shape}, {v.shape} do not fit partition {S}")


def ip_apply(c: ConstructingElement) -> Tensor:
    """Sum of all pair outer products, each laid out in natural axis order."""
    c.validate()
    total = np.zeros(c.dims, dtype=np.int64)
    for S, lst in c.pairs.items():
        for u, v in lst:
            total = c.ctx.add_arr(total, place(c.ctx, S, u, v))
    return Tensor(c.ctx, total)


def constructing_to_decomposition(c: ConstructingElement) -> PRDecomposition:
    """One term per pair whose outer product is nonzero."""
    c.validate()
    terms = []
    for S in partitions(len(c.dims)):
        for u, v in c.pairs.get(S, []):
            if u.any() and v.any():
                terms.append(PRTerm(S, np.array(u, dtype=np.int64), np.array(v, dtype=np.int64)))
    return PRDecomposition(c.ctx, tuple(c.dims), terms)
