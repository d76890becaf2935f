from itertools import product

import numpy as np
import pytest

import naive
from prdecomp.engine import (
    Config,
    ConstructingMap,
    base_case,
    decompose,
    decompose_or_raise,
    derivative_map,
    derivative_tensor,
    evaluate_constructing,
    evaluate_step,
    induction_step,
    iterate,
    partition_bound,
    restrict_to_blocks,
)
from prdecomp.errors import AllCandidatesFailed, OutsideDomain, ShapeMismatch
from prdecomp.field import ff_make
from prdecomp.linalg import Pivot, find_pivot, rank
from prdecomp.poly import MultiPoly
from prdecomp.tensor import (
    PRDecomposition,
    PRTerm,
    Tensor,
    ip_apply,
    random_tensor,
    slice_forms,
    verify_decomposition,
    w_tensor,
)
from prdecomp.variety import enumerate_kernel, find_regular_point, jacobian_at, tangent_projection_map

F2, F3, F5, F7, F11 = (ff_make(p) for p in (2, 3, 5, 7, 11))


def entry_decomposition(D: Tensor) -> PRDecomposition:
    """One term per nonzero entry, all on the partition {first k-1 axes | last axis}."""
    k = D.k
    terms = []
    for idx in np.argwhere(D.data != 0):
        u = np.zeros(D.dims[:-1], dtype=np.int64)
        u[tuple(idx[:-1])] = 1
        v = np.zeros(D.dims[-1], dtype=np.int64)
        v[idx[-1]] = D.data[tuple(idx)]
        terms.append(PRTerm(tuple(range(k - 1)), u, v))
    return PRDecomposition(D.ctx, D.dims, terms)


def setup(T, axis=None):
    axis = T.k - 1 if axis is None else axis
    x0, r = find_regular_point(T, axis)[0]
    piv = find_pivot(jacobian_at(T, axis, np.array([x0]))[0], r, T.ctx)
    tp = tangent_projection_map(slice_forms(T, axis), x0, piv)
    return axis, x0, r, piv, tp


def test_derivative_tensor_matches_closed_form():
    rng = np.random.default_rng(0)
    for ctx in (F2, F3, F7):
        for _ in range(6):
            k = int(rng.integers(2, 5))
            T = random_tensor(ctx, tuple(rng.integers(1, 4, k)), rng, 0.7)
            for axis in range(k):
                D = derivative_tensor(T, axis, k - 1)
                assert np.array_equal(D.data, naive.top_derivative(T.data, axis))


def test_derivative_tensor_examples():
    A = Tensor(F5, np.array([[1, 2, 3], [4, 0, 1]]))
    assert np.array_equal(derivative_tensor(A, 1, 1).data, A.data.T)
    W = w_tensor(F5)
    assert not derivative_tensor(W, 2, 3).data.any()
    with pytest.raises(ValueError):
        derivative_tensor(W, 2, 1)
    D1 = derivative_tensor(W, 2, 1, [1, 2, 3, 4])
    forms = slice_forms(W, 2)
    assert D1.data.tolist() == [[f.partial(j)([1, 2, 3, 4]) for j in range(4)] for f in forms]


def test_restrict_entry_decomposition_reconstructs():
    rng = np.random.default_rng(1)
    for ctx in (F2, F3, F5):
        for _ in range(10):
            k = int(rng.integers(2, 5))
            T = random_tensor(ctx, tuple(rng.integers(1, 4, k)), rng)
            axis = int(rng.integers(0, k))
            D = derivative_tensor(T, axis, k - 1)
            small = restrict_to_blocks(entry_decomposition(D), T.dims, axis)
            assert verify_decomposition(T, small).ok
    assert len(restrict_to_blocks(PRDecomposition(F5, (2, 4, 4), []), (2, 2, 2), 0)) == 0
    with pytest.raises(ShapeMismatch):
        restrict_to_blocks(PRDecomposition(F5, (2, 3, 3), []), (2, 2, 2), 0)


def test_base_case_w():
    W = w_tensor(F5)
    axis, x0, r, piv, tp = setup(W)
    H = base_case(W, axis, piv)
    Df = derivative_map(W, axis, 1)
    assert H.width == r == 2
    checked = 0
    for pt in enumerate_kernel(W, axis):
        try:
            val = ip_apply(evaluate_constructing(H, pt))
        except OutsideDomain:
            continue
        assert np.array_equal(val.data, Df(pt))
        checked += 1
        if checked == 20:
            break
    assert checked == 20


def test_base_case_matrix_is_constant():
    A = Tensor(F7, np.array([[1, 2, 3], [2, 4, 6], [0, 1, 1]]))
    axis, x0, r, piv, tp = setup(A)
    H = base_case(A, axis, piv)
    assert r == 2 and not H.denominators
    assert np.array_equal(ip_apply(evaluate_constructing(H, x0)).data, A.data.T)


def test_master_regression_symbolic_step():
    rng = np.random.default_rng(2)
    tensors = [w_tensor(F5)] + [random_tensor(F7, (2, 2, 2), rng) for _ in range(10)]
    for T in tensors:
        axis, x0, r, piv, tp = setup(T)
        H1 = induction_step(base_case(T, axis, piv), tp, derivative_map(T, axis, 1), tp.r)
        assert H1.order == 3 and H1.width == max(r, tp.r)
        assert ip_apply(evaluate_constructing(H1, x0)) == derivative_tensor(T, axis, 2)


def test_symbolic_and_pointwise_last_step_agree():
    rng = np.random.default_rng(3)
    for ctx, dims in [(F5, (2, 3, 2)), (F3, (2, 2, 2, 2)), (F7, (3, 2, 2))]:
        T = random_tensor(ctx, dims, rng)
        axis, x0, r, piv, tp = setup(T)
        H = base_case(T, axis, piv)
        a = T.k - 2
        Ha = iterate(H, tp, derivative_map(T, axis, 1), a - 1, tp.r)
        pointwise = evaluate_step(Ha, tp, derivative_map(T, axis, a), x0)
        full = evaluate_constructing(iterate(H, tp, derivative_map(T, axis, 1), a, tp.r), x0)
        assert ip_apply(pointwise) == ip_apply(full) == derivative_tensor(T, axis, T.k - 1)
        assert full.dims == (T.dims[axis],) + (sum(T.dims) - T.dims[axis],) * (T.k - 1)


def test_iterate_zero_steps_is_identity():
    W = w_tensor(F5)
    axis, x0, r, piv, tp = setup(W)
    H = base_case(W, axis, piv)
    assert iterate(H, tp, derivative_map(W, axis, 1), 0, tp.r) is H


def test_width_bookkeeping():
    W = w_tensor(F5)
    axis, x0, r, piv, tp = setup(W)
    H = base_case(W, axis, Pivot((0,), (0,)))  # width 1; entry y2 is a nonzero polynomial
    assert H.width == 1
    H1 = induction_step(H, tp, derivative_map(W, axis, 1), 2)
    assert H1.width == 2
    with pytest.raises(ShapeMismatch):
        induction_step(H, tp, derivative_map(W, axis, 2), 2)


def test_projector_algebra_at_base_point():
    rng = np.random.default_rng(4)
    for _ in range(10):
        T = random_tensor(F7, (3, 2, 3), rng)
        axis, x0, r, piv, tp = setup(T)
        P = tp.P(x0)
        from prdecomp.engine import eval_array

        Q = eval_array(tp.Q, x0)
        n = P.shape[0]
        assert np.array_equal((P + Q) % 7, np.eye(n, dtype=np.int64))
        assert np.array_equal(Q @ Q % 7, Q)
        assert rank(Q, F7) == r == len(piv.J)


def test_bilinear_derivative_identity():
    """d/dx of sum_i u_i(x) v_i(x) equals sum_i (du_i) v_i + u_i (dv_i), entrywise as polynomials."""
    rng = np.random.default_rng(5)
    n = 3
    for _ in range(20):
        def rp():
            return MultiPoly.from_dict(
                F7, n, {tuple(int(v) for v in rng.integers(0, 3, n)): int(rng.integers(1, 7)) for _ in range(3)}
            )

        U = [[rp() for _ in range(2)] for _ in range(2)]
        V = [[rp() for _ in range(3)] for _ in range(2)]
        for j in range(n):
            for a, b in product(range(2), range(3)):
                ip = U[0][a] * V[0][b] + U[1][a] * V[1][b]
                rhs = MultiPoly.zero(F7, n)
                for i in range(2):
                    rhs = rhs + U[i][a].partial(j) * V[i][b] + U[i][a] * V[i][b].partial(j)
                assert ip.partial(j) == rhs


def test_decompose_examples():
    A = Tensor(F5, np.array([[1, 2, 0], [2, 4, 0], [0, 0, 3]]))
    cert = decompose(A)
    assert cert.verified and len(cert.terms) == 2 == rank(A.data, F5)
    W = w_tensor(F5)
    cert = decompose(W)
    assert cert.verified and 2 <= len(cert.terms) <= 6 and cert.bound == 6
    Z = decompose(Tensor.zeros(F3, (2, 2, 2)))
    assert Z.verified and len(Z.terms) == 0


def test_certificates_are_sound():
    rng = np.random.default_rng(6)
    cases = [(F2, (2, 2, 2)), (F3, (3, 2, 2)), (F5, (2, 2, 2, 2)), (ff_make(2, 2), (2, 2, 2)), (F7, (1, 3, 2))]
    for ctx, dims in cases:
        for _ in range(4):
            T = random_tensor(ctx, dims, rng)
            cert = decompose(T)
            if cert.verified:
                assert verify_decomposition(T, cert.decomposition).ok
                assert len(cert.terms) <= partition_bound(T.k, cert.r_used) == cert.bound


def test_every_axis_works():
    rng = np.random.default_rng(7)
    T = random_tensor(F7, (2, 3, 2), rng)
    for axis in range(3):
        cert = decompose(T, Config(axis=axis))
        assert cert.verified and cert.axis == axis


def test_failure_path_reports_candidates():
    T = random_tensor(F5, (2, 2, 2), np.random.default_rng(8))
    cert = decompose(T, Config(degree_ceiling=0))
    assert not cert.verified
    assert cert.diagnostics["failures"] and "DegreeBlowup" in cert.diagnostics["failures"][0]["reason"]
    with pytest.raises(AllCandidatesFailed) as info:
        decompose_or_raise(T, Config(degree_ceiling=0, max_candidates=3))
    assert len(info.value.failures) == 3


def test_outside_domain_on_evaluation():
    W = w_tensor(F5)
    axis, x0, r, piv, tp = setup(W)
    H = base_case(W, axis, piv)
    bad = next(p for p in product(range(5), repeat=4) if not all(h(p) for h in H.denominators))
    with pytest.raises(OutsideDomain):
        evaluate_constructing(H, bad)


def test_constructing_map_shapes():
    W = w_tensor(F5)
    axis, x0, r, piv, tp = setup(W)
    H = base_case(W, axis, piv)
    assert isinstance(H, ConstructingMap) and H.dims == (2, 4) and H.order == 2
    for U, V in H.pairs[(0,)]:
        assert U.shape == (2,) and V.shape == (4,)
