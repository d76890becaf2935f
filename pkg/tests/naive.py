"""Deliberately slow, independent reference computations (prime fields only).

Nothing here imports the package's linear algebra or enumeration code, so
agreement with it is meaningful.
"""

from itertools import permutations, product


def rank_mod_p(rows, p):
    """Rank of an integer matrix over F_p by textbook elimination on Python lists."""
    M = [[int(v) % p for v in row] for row in rows]
    rank = 0
    ncols = len(M[0]) if M else 0
    for c in range(ncols):
        piv = next((i for i in range(rank, len(M)) if M[i][c]), None)
        if piv is None:
            continue
        M[rank], M[piv] = M[piv], M[rank]
        inv = pow(M[rank][c], p - 2, p)
        M[rank] = [v * inv % p for v in M[rank]]
        for i in range(len(M)):
            if i != rank and M[i][c]:
                f = M[i][c]
                M[i] = [(a - f * b) % p for a, b in zip(M[i], M[rank])]
        rank += 1
    return rank


def entries(T):
    """(index tuple, value) for every entry of a nested-list / ndarray tensor."""
    dims = T.shape
    for idx in product(*(range(n) for n in dims)):
        yield idx, int(T[idx])


def multilinear(T, xs, p):
    total = 0
    for idx, val in entries(T):
        if val:
            term = val
            for j, i in enumerate(idx):
                term = term * int(xs[j][i]) % p
            total += term
    return total % p


def slicing_at(T, axis, point, p):
    """T~ at a concatenated point, by the definition."""
    dims = T.shape
    blocks, pos = {}, 0
    for t, n in enumerate(dims):
        if t != axis:
            blocks[t] = point[pos:pos + n]
            pos += n
    out = [0] * dims[axis]
    for idx, val in entries(T):
        if val:
            term = val
            for t, i in enumerate(idx):
                if t != axis:
                    term = term * int(blocks[t][i]) % p
            out[idx[axis]] = (out[idx[axis]] + term) % p
    return out


def kernel_count(T, axis, p):
    N = sum(T.shape) - T.shape[axis]
    return sum(1 for pt in product(range(p), repeat=N) if not any(slicing_at(T, axis, pt, p)))


def top_derivative(T, axis):
    """D^{k-1} T~ from its closed form: the coefficient of T wherever the
    k-1 derivative indices fall one in each block (in any order), else zero."""
    import numpy as np

    dims = T.shape
    k = len(dims)
    others = [t for t in range(k) if t != axis]
    offs, pos = {}, 0
    for t in others:
        offs[t] = pos
        pos += dims[t]
    N = pos
    out = np.zeros((dims[axis],) + (N,) * (k - 1), dtype=np.int64)
    for idx, val in entries(T):
        if not val:
            continue
        vars_ = [offs[t] + idx[t] for t in others]
        for perm in set(permutations(vars_)):
            out[(idx[axis],) + perm] = val
    return out


def jacobian_at(T, axis, point, p):
    """Jacobian of T~ at a point.  T~ is linear in each block, so the partial
    along a block coordinate is T~ with that block replaced by a unit vector."""
    dims = T.shape
    cols, pos = [], 0
    for t, n in enumerate(dims):
        if t == axis:
            continue
        for i in range(n):
            pt = list(point)
            pt[pos:pos + n] = [1 if j == i else 0 for j in range(n)]
            cols.append(slicing_at(T, axis, pt, p))
        pos += n
    return [list(row) for row in zip(*cols)]
