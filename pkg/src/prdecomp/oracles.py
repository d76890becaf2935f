"""Brute-force ground truth for tiny tensors and audits of the rank inequalities.

``pr_bruteforce`` does not enumerate whole decompositions.  It enumerates,
for each term, a partition and a projectively normalized vector on the
smaller side of it (first nonzero coordinate equal to 1).  Once those are
fixed, the other sides enter linearly, so whether ``T`` is a sum of ``r``
such terms is the question of whether ``T`` lies in the span of the placed
tensors ``u (x) e_w``, decided by comparing batch ranks with and without ``T``.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations, product
from math import comb

import numpy as np

from .engine import Config, decompose
from .errors import BudgetExceeded
from .linalg import batch_rank, rank, rref
from .tensor import PRDecomposition, PRTerm, Tensor, complement, flatten, partitions, place
from .variety import ARValue, analytic_rank, estimate_dim

DEFAULT_PR_BUDGET = 2_000_000
BATCH = 4096


@dataclass(frozen=True)
class LowerBoundOnly:
    """The search ran out of allowed width: PR is at least ``r``."""

    r: int


@dataclass
class PRLeqOne:
    holds: bool
    decomposition: PRDecomposition | None = None

    def __bool__(self):
        return self.holds


def pr_leq_one(T: Tensor) -> PRLeqOne:
    """Whether some flattening has rank one; if so, the corresponding one-term decomposition."""
    if T.is_zero():
        raise ValueError("pr_leq_one expects a nonzero tensor")
    ctx = T.ctx
    for S in partitions(T.k):
        M = flatten(T, S)
        if rank(M, ctx) == 1:
            i = int(np.flatnonzero(M.any(axis=1))[0])
            row = M[i]
            j = int(np.flatnonzero(row)[0])
            col = ctx.mul_arr(M[:, j], ctx.inv(int(row[j])))
            comp = complement(S, T.k)
            u = col.reshape([T.dims[a] for a in S])
            v = row.reshape([T.dims[a] for a in comp])
            return PRLeqOne(True, PRDecomposition(ctx, T.dims, [PRTerm(S, u, v)]))
    return PRLeqOne(False)


def normalized_vectors(q: int, n: int) -> np.ndarray:
    """All vectors in F_q^n whose first nonzero coordinate is 1, lexicographic order."""
    out = []
    for lead in range(n):
        for tail in product(range(q), repeat=n - lead - 1):
            out.append((0,) * lead + (1,) + tail)
    return np.array(out, dtype=np.int64).reshape(-1, n)


def _choices(T: Tensor):
    """(S, enumerated side, vector) triples; the enumerated side is the smaller one."""
    k = T.k
    out = []
    for S in partitions(k):
        comp = complement(S, k)
        sz_s = int(np.prod([T.dims[a] for a in S]))
        sz_c = int(np.prod([T.dims[a] for a in comp]))
        side = S if sz_s <= sz_c else comp
        shape = [T.dims[a] for a in side]
        for vec in normalized_vectors(T.ctx.q, int(np.prod(shape))):
            out.append((S, side, vec.reshape(shape)))
    return out


def _columns(T: Tensor, S, side, vec) -> np.ndarray:
    """Flattened tensors vec (x) e_w over every basis vector e_w of the other side."""
    k = T.k
    other = complement(side, k)
    oshape = [T.dims[a] for a in other]
    cols = []
    for w in range(int(np.prod(oshape))):
        e = np.zeros(int(np.prod(oshape)), dtype=np.int64)
        e[w] = 1
        e = e.reshape(oshape)
        placed = place(T.ctx, side, vec, e) if side == S else place(T.ctx, S, e, vec)
        cols.append(placed.reshape(-1))
    return np.array(cols, dtype=np.int64)


def _solve(T: Tensor, combo, choices, blocks) -> PRDecomposition:
    """Recover the free sides for a feasible combination by solving the linear system."""
    ctx = T.ctx
    A = np.concatenate([blocks[c] for c in combo]).T
    aug = np.concatenate([A, T.data.reshape(-1, 1)], axis=1)
    R, piv = rref(aug, ctx)
    coef = np.zeros(A.shape[1], dtype=np.int64)
    for i, pc in enumerate(piv):
        if pc < A.shape[1]:
            coef[pc] = R[i, -1]
    terms, pos = [], 0
    for c in combo:
        S, side, vec = choices[c]
        width = len(blocks[c])
        other = complement(side, T.k)
        w = coef[pos:pos + width].reshape([T.dims[a] for a in other])
        pos += width
        if not w.any():
            continue
        terms.append(PRTerm(S, vec, w) if side == S else PRTerm(S, w, vec))
    return PRDecomposition(ctx, T.dims, terms)


def pr_search(T: Tensor, r_max: int | None = None, budget: int = DEFAULT_PR_BUDGET):
    """Exact partition rank with a witness decomposition, or LowerBoundOnly.

    ``budget`` caps the number of term combinations examined.  The slicing
    bound ``min(dims)`` is always an upper bound, so the search stops one
    short of it.
    """
    ctx = T.ctx
    if T.is_zero():
        return 0, PRDecomposition(ctx, T.dims, [])
    ub = min(T.dims)
    limit = ub - 1 if r_max is None else min(r_max, ub - 1)
    choices = _choices(T)
    total = sum(comb(len(choices), r) for r in range(1, limit + 1))
    if total > budget:
        raise BudgetExceeded(f"{total} combinations exceed the search budget {budget}")
    blocks = [_columns(T, *c) for c in choices]
    width = max(len(b) for b in blocks)
    padded = np.zeros((len(blocks), width, T.data.size), dtype=np.int64)
    for i, b in enumerate(blocks):
        padded[i, : len(b)] = b
    target = T.data.reshape(1, 1, -1)
    for r in range(1, limit + 1):
        it = combinations(range(len(choices)), r)
        while True:
            chunk = np.array(list(_take(it, BATCH)), dtype=np.int64)
            if len(chunk) == 0:
                break
            A = padded[chunk].reshape(len(chunk), r * width, -1)
            with_t = np.concatenate([A, np.broadcast_to(target, (len(chunk), 1, T.data.size))], axis=1)
            hit = np.flatnonzero(batch_rank(A, ctx) == batch_rank(with_t, ctx))
            if len(hit):
                combo = tuple(int(c) for c in chunk[hit[0]])
                return r, _solve(T, combo, choices, blocks)
    if limit == ub - 1:
        return ub, _slicing_decomposition(T)
    return LowerBoundOnly(limit + 1), None


def _take(it, n):
    for _ in range(n):
        try:
            yield next(it)
        except StopIteration:
            return


def _slicing_decomposition(T: Tensor) -> PRDecomposition:
    """min(dims) terms, one per slice along the shortest axis."""
    j = int(np.argmin(T.dims))
    k = T.k
    terms = []
    for i in range(T.dims[j]):
        e = np.zeros(T.dims[j], dtype=np.int64)
        e[i] = 1
        sl = np.take(T.data, i, axis=j)
        if not sl.any():
            continue
        S = (j,) if j != k - 1 else complement((j,), k)
        terms.append(PRTerm(S, e, sl) if j != k - 1 else PRTerm(S, sl, e))
    return PRDecomposition(T.ctx, T.dims, terms)


def pr_bruteforce(T: Tensor, r_max: int | None = None, budget: int = DEFAULT_PR_BUDGET):
    """Exact partition rank (int) or LowerBoundOnly(r_max + 1)."""
    return pr_search(T, r_max, budget)[0]


@dataclass
class AuditConfig:
    E: int = 3
    budget: int | None = None
    pr_budget: int = DEFAULT_PR_BUDGET
    pr_r_max: int | None = None
    use_certificate: bool = True


@dataclass
class AuditRecord:
    ar: ARValue | None
    pr: int | None
    pr_source: str | None
    gr_est: int | None
    gr_stable: bool | None
    cert_terms: int | None
    holds_ar_le_pr: bool | None
    holds_thm12: bool | None
    holds_thm11: bool | None

    def to_json(self) -> dict:
        return {
            "ar_count": None if self.ar is None else self.ar.count,
            "ar_N": None if self.ar is None else self.ar.N,
            "ar_value": None if self.ar is None else self.ar.value,
            "pr": self.pr,
            "pr_source": self.pr_source,
            "gr_est": self.gr_est,
            "gr_stable": self.gr_stable,
            "cert_terms": self.cert_terms,
            "holds_ar_le_pr": self.holds_ar_le_pr,
            "holds_thm12": self.holds_thm12,
            "holds_thm11": self.holds_thm11,
        }


def thm11_holds(ar: ARValue, pr: int, k: int) -> bool:
    """PR <= c*AR + 1 with c = 2^(k-1) - 1, decided as count^c <= q^(c*N - (PR - 1))."""
    c = 2 ** (k - 1) - 1
    e = c * ar.N - (pr - 1)
    if e < 0:
        return False
    return ar.count**c <= ar.q**e


def check_inequalities(T: Tensor, config: AuditConfig | None = None, certificate=None) -> AuditRecord:
    """Exact AR, oracle PR (or a certificate bound), gr estimate and the three inequalities.

    An oracle PR is exact, so every inequality is decided.  A certificate only
    bounds PR from above, so with it only the upper-bound-compatible checks
    are decided; the AR <= PR check is then left as None.  A certificate
    already computed for ``T`` can be passed in to avoid recomputing it.
    """
    config = config or AuditConfig()
    k = T.k
    c = 2 ** (k - 1) - 1
    try:
        ar = analytic_rank(T, budget=config.budget)
    except BudgetExceeded:
        ar = None
    try:
        rep = estimate_dim(T, E=config.E, budget=config.budget)
        gr, stable = rep.gr_est, not rep.unstable
    except BudgetExceeded:
        gr, stable = None, None
    pr, src = None, None
    try:
        res = pr_bruteforce(T, config.pr_r_max, config.pr_budget)
        if isinstance(res, int):
            pr, src = res, "oracle"
    except BudgetExceeded:
        pass
    cert_terms = None
    if certificate is None and config.use_certificate:
        try:
            certificate = decompose(T, Config(budget=config.budget))
        except BudgetExceeded:
            pass
    if certificate is not None:
        if certificate.verified:
            cert_terms = len(certificate.terms)
        if pr is None and cert_terms is not None:
            pr, src = cert_terms, "certificate"
    exact = src == "oracle"
    h_ar = ar.le(pr) if (ar is not None and exact) else None
    h12 = (pr <= c * gr) if (pr is not None and gr is not None) else None
    h11 = thm11_holds(ar, pr, k) if (ar is not None and pr is not None) else None
    if not exact:
        # an upper bound can only confirm the upper-bound inequalities
        h12 = True if h12 else None
        h11 = True if h11 else None
    return AuditRecord(ar, pr, src, gr, stable, cert_terms, h_ar, h12, h11)
