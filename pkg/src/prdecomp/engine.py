"""Certified partition-rank decompositions from the kernel variety of a slicing.

Let ``f = T~`` be the slicing of ``T`` along ``axis``: ``m`` forms of degree
``k-1`` in ``N`` variables.  At a kernel point ``x0`` where ``Df(x0)`` has rank
``r``, the rank factorization of the symbolic Jacobian gives a rational map
``H`` into the constructing space with ``IP(H(x)) = Df(x)`` near ``x0`` on the
kernel variety.  Each induction step differentiates that identity along
tangent directions (contracting with the projection ``P``) and adds the
``r`` pairs ``(d_i g, Q[i, :])`` for the normal directions, producing a map
for the next derivative.  After ``k-2`` steps the evaluation at ``x0`` is a
constant decomposition of ``D^{k-1} f``, and restricting derivative axis ``t``
to block ``t`` turns it into a decomposition of ``T`` itself.

Nothing in the construction is trusted: every certificate is checked by
exact reconstruction before it is reported as verified.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import AllCandidatesFailed, OutsideDomain, PRDecompError, ShapeMismatch
from .field import FieldCtx
from .linalg import Pivot, find_pivot, rank_factorize
from .poly import (
    RatFunc,
    RatFuncField,
    RationalMap,
    degree_ceiling,
    obj_array,
    poly_eval,
    rat_eval,
    total_derivative,
)
from .tensor import (
    ConstructingElement,
    PRDecomposition,
    PRTerm,
    Tensor,
    complement,
    constructing_to_decomposition,
    partitions,
    slice_forms,
    verify_decomposition,
)
from .variety import TangentProjection, default_budget, find_regular_point, jacobian_at, tangent_projection_map


@dataclass
class Config:
    axis: int | None = None  # 0-based; None means the last axis
    max_candidates: int = 64
    budget: int | None = None
    degree_ceiling: int = 512

    def resolved_budget(self) -> int:
        return default_budget() if self.budget is None else self.budget

    def to_json(self) -> dict:
        d = asdict(self)
        d["budget"] = self.resolved_budget()
        return d

    def digest(self) -> str:
        blob = json.dumps(self.to_json(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


# ---------------------------------------------------------------------------
# symbolic array helpers (object arrays of RatFunc)
# ---------------------------------------------------------------------------


def _zero(ctx, N):
    return RatFunc.const(ctx, N, 0)


def d_array(arr: np.ndarray, N: int) -> np.ndarray:
    """Append a derivative axis of length N."""
    out = obj_array(arr.shape + (N,))
    for idx in np.ndindex(*arr.shape):
        f = arr[idx]
        for j in range(N):
            out[idx + (j,)] = f.partial(j)
    return out


def contract_last(arr: np.ndarray, P: np.ndarray) -> np.ndarray:
    """arr[..., i] * P[i, c] summed over i, skipping zero entries."""
    N = P.shape[0]
    zero = _zero(P[0, 0].ctx, P[0, 0].nvars)
    out = obj_array(arr.shape)
    nz = [(i, c, P[i, c]) for i in range(N) for c in range(N) if not P[i, c].is_zero()]
    for idx in np.ndindex(*arr.shape[:-1]):
        row = arr[idx]
        acc = [None] * N
        for i, c, p in nz:
            a = row[i]
            if a.is_zero():
                continue
            term = a if p.is_one() else a * p
            acc[c] = term if acc[c] is None else acc[c] + term
        for c in range(N):
            out[idx + (c,)] = acc[c] if acc[c] is not None else zero
    return out


def eval_array(arr: np.ndarray, x) -> np.ndarray:
    out = np.zeros(arr.shape, dtype=np.int64)
    for idx in np.ndindex(*arr.shape):
        f = arr[idx]
        if not f.is_zero():
            out[idx] = rat_eval(f, x)
    return out


def _field_contract_last(ctx: FieldCtx, a: np.ndarray, P: np.ndarray) -> np.ndarray:
    """Concrete a[..., i] P[i, c] summed over i."""
    prod = ctx.mul_arr(a[..., :, None], P)
    return ctx.sum_arr(prod, axis=a.ndim - 1)


# ---------------------------------------------------------------------------
# constructing maps
# ---------------------------------------------------------------------------


@dataclass
class ConstructingMap:
    """A rational map into the r-constructing space over F^m (x) (F^N)^{(x)(order-1)}.

    ``pairs[S]`` holds (U, V) object arrays of RatFunc with U over the axes S
    and V over the complement.
    """

    ctx: FieldCtx
    arity: int
    dims: tuple[int, ...]
    width: int
    pairs: dict
    denominators: tuple = ()

    @property
    def order(self) -> int:
        return len(self.dims)

    def max_degree(self) -> int:
        deg = 0
        for lst in self.pairs.values():
            for U, V in lst:
                for f in list(U.flat) + list(V.flat):
                    deg = max(deg, *f.total_degree())
        return deg


def derivative_map(T: Tensor, axis: int, a: int) -> RationalMap:
    """D^a of the slicing as a polynomial rational map of shape (m, N, ..., N)."""
    forms = slice_forms(T, axis)
    N = forms[0].nvars
    F = RationalMap.from_polys(T.ctx, N, forms)
    for _ in range(a):
        comps = obj_array(F.shape + (N,))
        for idx in np.ndindex(*F.shape):
            p = F.components[idx].num
            for j in range(N):
                comps[idx + (j,)] = RatFunc.poly(p.partial(j))
        F = RationalMap(T.ctx, N, comps, ())
    return F


def derivative_tensor(T: Tensor, axis: int, a: int, x=None) -> Tensor:
    """D^a T~ as a concrete tensor; constant (no point needed) once a >= k-1."""
    F = derivative_map(T, axis, a)
    if a < T.k - 1:
        if x is None:
            raise ValueError("a point is required for derivatives of order below k-1")
    else:
        x = [0] * F.arity
    return Tensor(T.ctx, F(x))


def base_case(T: Tensor, axis: int, pivot: Pivot, Df: RationalMap | None = None) -> ConstructingMap:
    """Pairs (column t of A1, row t of A2) from the rank factorization of the symbolic Jacobian."""
    if Df is None:
        Df = derivative_map(T, axis, 1)
    m, N = Df.shape
    K = RatFuncField(T.ctx, N)
    A = [[Df.components[i, c] for c in range(N)] for i in range(m)]
    A1, A2 = rank_factorize(A, pivot.r, pivot, K)
    pairs = []
    for t in range(pivot.r):
        U = obj_array((m,))
        V = obj_array((N,))
        for i in range(m):
            U[i] = A1[i][t]
        for c in range(N):
            V[c] = A2[t][c]
        pairs.append((U, V))
    dens = {}
    for U, V in pairs:
        for g in list(U.flat) + list(V.flat):
            for h, _ in g.factors:
                dens[h.key()] = h
    return ConstructingMap(T.ctx, N, (m, N), pivot.r, {(0,): pairs}, tuple(dens[k] for k in sorted(dens)))


def _derivative_axis(g: RationalMap, cols) -> dict:
    """Partial derivatives of every component of g by the variables in ``cols``."""
    out = {}
    for i in cols:
        arr = obj_array(g.shape)
        for idx in np.ndindex(*g.shape):
            arr[idx] = g.components[idx].partial(i)
        out[i] = arr
    return out


def induction_step(H: ConstructingMap, tp: TangentProjection, g: RationalMap, codim: int) -> ConstructingMap:
    """A constructing map of order+1 whose IP is Dg on the kernel variety near the base point.

    Uses d(U (x) V) = dU (x) V + U (x) dV along tangent directions (contracted
    with P) and covers the normal directions by the pairs (d_i g, Q[i, :]) for
    the pivot columns i.
    """
    if g.shape != H.dims:
        raise ShapeMismatch(f"map shape {g.shape} does not match constructing dims {H.dims}")
    if codim != tp.r:
        raise ShapeMismatch(f"codimension {codim} does not match the projection rank {tp.r}")
    N, d = H.arity, H.order
    Pm = tp.P.components
    new_pairs: dict = {}
    for S, lst in H.pairs.items():
        Sbar = complement(S, d)
        for U, V in lst:
            new_pairs.setdefault(S, []).append((U, contract_last(d_array(V, N), Pm)))
            new_pairs.setdefault(Sbar, []).append((V, contract_last(d_array(U, N), Pm)))
    full = tuple(range(d))
    dg = _derivative_axis(g, tp.pivot.J)
    for i in tp.pivot.J:
        new_pairs.setdefault(full, []).append((dg[i], tp.Q[i].copy()))
    dens = {h.key(): h for h in H.denominators}
    for h in tp.P.denominators:
        dens[h.key()] = h
    width = max(H.width, codim)
    return ConstructingMap(H.ctx, N, H.dims + (N,), width, new_pairs, tuple(dens[k] for k in sorted(dens)))


def iterate(H: ConstructingMap, tp: TangentProjection, f: RationalMap, a: int, codim: int) -> ConstructingMap:
    """a induction steps; ``f`` is the map H currently represents, differentiated each step."""
    g = f
    for _ in range(a):
        H = induction_step(H, tp, g, codim)
        g = total_derivative(g)
    return H


def evaluate_constructing(H: ConstructingMap, x0) -> ConstructingElement:
    for h in H.denominators:
        if poly_eval(h, x0) == 0:
            raise OutsideDomain(f"constructing map undefined at {tuple(int(v) for v in x0)}")
    pairs = {S: [(eval_array(U, x0), eval_array(V, x0)) for U, V in lst] for S, lst in H.pairs.items()}
    return ConstructingElement(H.ctx, H.dims, H.width, pairs)


def evaluate_step(H: ConstructingMap, tp: TangentProjection, g: RationalMap, x0) -> ConstructingElement:
    """``evaluate_constructing(induction_step(H, tp, g, r), x0)`` without building the symbolic step."""
    ctx, N, d = H.ctx, H.arity, H.order
    for h in tuple(H.denominators) + tuple(tp.P.denominators):
        if poly_eval(h, x0) == 0:
            raise OutsideDomain(f"constructing map undefined at {tuple(int(v) for v in x0)}")
    Pv = eval_array(tp.P.components, x0)
    Qv = eval_array(tp.Q, x0)
    pairs: dict = {}
    for S, lst in H.pairs.items():
        Sbar = complement(S, d)
        for U, V in lst:
            Uv, Vv = eval_array(U, x0), eval_array(V, x0)
            dU, dV = eval_array(d_array(U, N), x0), eval_array(d_array(V, N), x0)
            pairs.setdefault(S, []).append((Uv, _field_contract_last(ctx, dV, Pv)))
            pairs.setdefault(Sbar, []).append((Vv, _field_contract_last(ctx, dU, Pv)))
    full = tuple(range(d))
    for i in tp.pivot.J:
        dgi = np.zeros(g.shape, dtype=np.int64)
        for idx in np.ndindex(*g.shape):
            c = g.components[idx]
            if not c.is_zero():
                dgi[idx] = rat_eval(c.partial(i), x0)
        pairs.setdefault(full, []).append((dgi, Qv[i].copy()))
    return ConstructingElement(ctx, H.dims + (N,), max(H.width, tp.r), pairs)


# ---------------------------------------------------------------------------
# restriction to blocks
# ---------------------------------------------------------------------------


def restrict_to_blocks(big: PRDecomposition, dims, axis: int) -> PRDecomposition:
    """Decomposition of an (m, N, ..., N) tensor -> decomposition of the original k-tensor.

    Big axis 0 is the sliced axis; big axis t >= 1 is the t-th remaining axis
    and keeps only that axis's block of coordinates.  Because every variable
    appears in the slice forms with degree at most one, the entry of
    D^{k-1} T~ at one index from each block is exactly the coefficient of T,
    so no factorial scaling is involved.
    """
    dims = tuple(dims)
    k = len(dims)
    others = [t for t in range(k) if t != axis]
    orig_of = [axis] + others
    offs, pos = {}, 0
    for t in others:
        offs[t] = pos
        pos += dims[t]
    if tuple(big.dims) != (dims[axis],) + (pos,) * (k - 1):
        raise ShapeMismatch(f"big dims {tuple(big.dims)} do not fit original dims {dims}")

    def cut(arr, big_axes):
        sl = []
        for b in big_axes:
            if b == 0:
                sl.append(slice(None))
            else:
                t = orig_of[b]
                sl.append(slice(offs[t], offs[t] + dims[t]))
        arr = arr[tuple(sl)]
        origs = [orig_of[b] for b in big_axes]
        order = np.argsort(origs)
        return arr.transpose(order), tuple(sorted(origs))

    terms = []
    for term in big.terms:
        u, su = cut(term.u, term.S)
        v, sv = cut(term.v, complement(term.S, k))
        if not u.any() or not v.any():
            continue
        if (k - 1) in su:
            u, v, su = v, u, sv
        terms.append(PRTerm(su, np.ascontiguousarray(u), np.ascontiguousarray(v)))
    return PRDecomposition(big.ctx, dims, terms)


# ---------------------------------------------------------------------------
# certificates and the full pipeline
# ---------------------------------------------------------------------------


def tensor_digest(T: Tensor) -> str:
    h = hashlib.sha256()
    h.update(json.dumps({"p": T.ctx.p, "e": T.ctx.e, "dims": list(T.dims)}).encode())
    h.update(T.data.astype("<i8").tobytes())
    return h.hexdigest()[:16]


@dataclass
class Certificate:
    tensor_ref: str
    axis: int
    x0: tuple | None
    r_used: int
    decomposition: PRDecomposition
    bound: int
    verified: bool
    diagnostics: dict = field(default_factory=dict)

    @property
    def codim_used(self) -> int:
        return self.r_used

    @property
    def terms(self) -> list[PRTerm]:
        return self.decomposition.terms


def partition_bound(k: int, r: int) -> int:
    return (2 ** (k - 1) - 1) * r


def _construct(T: Tensor, axis: int, pivot: Pivot, x0, forms):
    """Symbolic part that depends only on the pivot: base map and tangent projection."""
    Df = derivative_map(T, axis, 1)
    H = base_case(T, axis, pivot, Df)
    tp = tangent_projection_map(forms, x0, pivot)
    return H, tp, Df


def run_candidate(T: Tensor, axis: int, x0, r: int, cache: dict, forms) -> tuple[PRDecomposition, dict]:
    """The pipeline at one base point; returns the restricted decomposition and diagnostics."""
    ctx = T.ctx
    k = T.k
    J0 = jacobian_at(T, axis, np.array([x0], dtype=np.int64))[0]
    pivot = find_pivot(J0, r, ctx)
    if pivot not in cache:
        cache[pivot] = _construct(T, axis, pivot, x0, forms)
    H, tp, Df = cache[pivot]
    a = k - 2
    if a == 0:
        elem = evaluate_constructing(H, x0)
    else:
        # all but the last step symbolically, the last one pointwise
        key = (pivot, "iterated")
        if key not in cache:
            cache[key] = iterate(H, tp, Df, a - 1, tp.r), derivative_map(T, axis, a)
        Ha, ga = cache[key]
        elem = evaluate_step(Ha, tp, ga, x0)
    big = constructing_to_decomposition(elem)
    dec = restrict_to_blocks(big, T.dims, axis)
    diag = {
        "pivot_rows": list(pivot.I),
        "pivot_cols": list(pivot.J),
        "max_degree": H.max_degree(),
        "denominators": [repr(h) for h in H.denominators],
        "big_terms": len(big.terms),
    }
    return dec, diag


def decompose(T: Tensor, config: Config | None = None) -> Certificate:
    """Try candidate base points in order and return the first verified certificate.

    If no candidate verifies, an unverified certificate carrying every
    failure reason is returned; callers wanting an exception can use
    ``decompose_or_raise``.
    """
    config = config or Config()
    if T.k < 2:
        raise ValueError("partition rank needs a tensor with at least two axes")
    axis = T.k - 1 if config.axis is None else config.axis
    if not 0 <= axis < T.k:
        raise ValueError(f"axis {axis} out of range for a {T.k}-tensor")
    ref = tensor_digest(T)
    if T.is_zero():
        return Certificate(ref, axis, None, 0, PRDecomposition(T.ctx, T.dims, []), 0, True,
                           {"note": "zero tensor"})
    started = time.perf_counter()
    forms = slice_forms(T, axis)
    cands = find_regular_point(T, axis, config.resolved_budget())
    failures = []
    cache: dict = {}
    with degree_ceiling(config.degree_ceiling):
        for idx, (x0, r) in enumerate(cands[: config.max_candidates]):
            bound = partition_bound(T.k, r)
            try:
                dec, diag = run_candidate(T, axis, x0, r, cache, forms)
            except PRDecompError as exc:
                failures.append({"candidate": idx, "x0": list(x0), "rank": r, "reason": f"{type(exc).__name__}: {exc}"})
                continue
            res = verify_decomposition(T, dec)
            if res.ok and len(dec.terms) <= bound:
                diag.update(candidate=idx, failures=failures, candidates_total=len(cands),
                            seconds=round(time.perf_counter() - started, 4))
                return Certificate(ref, axis, tuple(x0), r, dec, bound, True, diag)
            reason = "reconstruction mismatch" if not res.ok else f"{len(dec.terms)} terms exceed bound {bound}"
            failures.append({"candidate": idx, "x0": list(x0), "rank": r, "reason": reason})
    r0 = cands[0][1] if cands else 0
    return Certificate(ref, axis, tuple(cands[0][0]) if cands else None, r0,
                       PRDecomposition(T.ctx, T.dims, []), partition_bound(T.k, r0), False,
                       {"failures": failures, "candidates_total": len(cands),
                        "seconds": round(time.perf_counter() - started, 4)})


def decompose_or_raise(T: Tensor, config: Config | None = None) -> Certificate:
    cert = decompose(T, config)
    if not cert.verified:
        raise AllCandidatesFailed("no candidate point produced a verified decomposition",
                                  cert.diagnostics.get("failures", []))
    return cert
