from collections import Counter
from itertools import product

import numpy as np
import pytest
from hypothesis import given, strategies as st

import naive
from prdecomp.engine import decompose
from prdecomp.errors import BudgetExceeded
from prdecomp.field import ff_make
from prdecomp.oracles import (
    AuditConfig,
    LowerBoundOnly,
    check_inequalities,
    normalized_vectors,
    pr_bruteforce,
    pr_leq_one,
    pr_search,
    thm11_holds,
)
from prdecomp.tensor import Tensor, partitions, random_tensor, verify_decomposition, w_tensor
from prdecomp.variety import ARValue

F2, F3, F5 = ff_make(2), ff_make(3), ff_make(5)


def all_222_f2():
    for vals in product(range(2), repeat=8):
        yield Tensor(F2, np.array(vals, dtype=np.int64).reshape(2, 2, 2))


def naive_pr_leq_one(T, p):
    """Some flattening has rank one, checked with pure-Python elimination."""
    k = T.ndim
    for S in partitions(k):
        comp = [a for a in range(k) if a not in S]
        M = np.transpose(T, list(S) + comp).reshape(int(np.prod([T.shape[a] for a in S])), -1)
        if naive.rank_mod_p(M.tolist(), p) == 1:
            return True
    return False


def test_pr_leq_one_examples():
    basis = np.zeros((2, 2, 2), dtype=np.int64)
    basis[0, 0, 0] = 1
    res = pr_leq_one(Tensor(F5, basis))
    assert res and verify_decomposition(Tensor(F5, basis), res.decomposition).ok
    assert not pr_leq_one(w_tensor(F5))
    diag = basis.copy()
    diag[1, 1, 1] = 1
    assert not pr_leq_one(Tensor(F5, diag))
    with pytest.raises(ValueError):
        pr_leq_one(Tensor.zeros(F5, (2, 2, 2)))


def test_normalized_vectors_count():
    for q, n in [(2, 3), (3, 2), (5, 2)]:
        vs = normalized_vectors(q, n)
        assert len(vs) == (q**n - 1) // (q - 1)
        assert all(v[np.flatnonzero(v)[0]] == 1 for v in vs)


def test_pr_examples():
    assert pr_bruteforce(Tensor.zeros(F2, (2, 2, 2))) == 0
    for q in (2, 3, 5):
        pr, dec = pr_search(w_tensor(ff_make(q)))
        assert pr == 2 and verify_decomposition(w_tensor(ff_make(q)), dec).ok


def test_pr_of_matrix_is_rank():
    rng = np.random.default_rng(0)
    for ctx in (F2, F3, F5):
        for _ in range(15):
            A = random_tensor(ctx, tuple(rng.integers(1, 4, 2)), rng, 0.6)
            pr, dec = pr_search(A)
            assert pr == naive.rank_mod_p(A.data.tolist(), ctx.p)
            assert verify_decomposition(A, dec).ok and len(dec) == pr


def test_lower_bound_and_budget():
    T = random_tensor(F3, (3, 3, 3), np.random.default_rng(1))
    assert pr_bruteforce(T, r_max=1) == LowerBoundOnly(2)
    # with r_max one below min(dims) the slicing bound closes the search
    assert pr_bruteforce(w_tensor(F3), r_max=1) == 2
    with pytest.raises(BudgetExceeded):
        pr_bruteforce(T, budget=10)


def test_full_sweep_222_f2():
    dist = Counter()
    for T in all_222_f2():
        pr, dec = pr_search(T)
        dist[pr] += 1
        assert verify_decomposition(T, dec).ok and len(dec) == pr
        if pr:
            assert (pr == 1) == naive_pr_leq_one(T.data, 2) == bool(pr_leq_one(T))
    # inclusion-exclusion over the three flattenings gives 3*45 - 3*27 + 27 rank-one tensors
    assert dist == {0: 1, 1: 81, 2: 174}


@given(st.integers(0, 2**32 - 1), st.sampled_from([0, 1, 2]))
def test_zero_padding_keeps_pr(seed, axis):
    rng = np.random.default_rng(seed)
    T = random_tensor(F2, (2, 2, 2), rng, 0.6)
    pad = [(0, 0)] * 3
    pad[axis] = (0, 1)
    big = Tensor(F2, np.pad(T.data, pad))
    assert pr_bruteforce(big) == pr_bruteforce(T)


def test_oracle_never_beats_engine():
    rng = np.random.default_rng(2)
    for ctx in (F2, F3):
        for _ in range(10):
            T = random_tensor(ctx, (2, 2, 2), rng)
            cert = decompose(T)
            if cert.verified:
                assert pr_bruteforce(T) <= len(cert.terms)


def test_thm11_exact_comparison():
    ar = ARValue(N=4, count=21, q=3)
    assert thm11_holds(ar, 2, 3)
    assert not thm11_holds(ARValue(N=2, count=4, q=2), 5, 3)


def test_check_inequalities_w_f3():
    rec = check_inequalities(w_tensor(F3))
    assert rec.pr == 2 and rec.pr_source == "oracle"
    assert rec.ar.count == 21 and rec.ar.N == 4
    assert abs(rec.ar.value - (4 - np.log(21) / np.log(3))) < 1e-12
    assert rec.gr_est == 2 and rec.gr_stable
    assert rec.holds_ar_le_pr and rec.holds_thm11 and rec.holds_thm12
    assert rec.cert_terms is not None and rec.cert_terms >= rec.pr


def test_check_inequalities_matrices_are_tight():
    rng = np.random.default_rng(3)
    for _ in range(5):
        A = random_tensor(F5, (3, 3), rng)
        rec = check_inequalities(A)
        r = naive.rank_mod_p(A.data.tolist(), 5)
        assert rec.pr == r == rec.gr_est and rec.ar.is_integer() and round(rec.ar.value) == r


def test_check_inequalities_partial_record():
    T = random_tensor(F3, (3, 3, 3), np.random.default_rng(4))
    rec = check_inequalities(T, AuditConfig(pr_budget=10, use_certificate=False))
    assert rec.pr is None and rec.holds_ar_le_pr is None and rec.ar is not None
    assert set(rec.to_json()) >= {"ar_count", "pr", "gr_est", "holds_thm11", "holds_thm12", "holds_ar_le_pr"}
