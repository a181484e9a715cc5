import itertools
import math

import numpy as np
import pytest

from tempo import (
    DimensionError,
    NotDiagonalizableOverR,
    NotInvertibleOverR,
    RingMatrix,
    dd_star,
    ring_det,
    ring_eigendecompose,
    ring_spectral_radius,
    series_radius,
    star_inverse,
    star_multiply,
    star_transpose,
)
from tempo.ring import ring_eigenvalues, star_power


def random_ring(rng, n, N, integer=False, upper=False):
    dense = rng.integers(-3, 4, (n * N, n * N)).astype(float) if integer else rng.standard_normal((n * N, n * N))
    M = RingMatrix.from_blocks(dense, n, drop_zero=False)
    if upper:
        M = RingMatrix(n, N, M.pairs, np.triu(M.data))
    return M


def definitional_product(A, B):
    """``(A * B)[r, s] = sum_k A[r, k] o B[k, s]`` straight from blocks."""
    N = A.N
    out = np.zeros((A.n * N, A.n * N))
    n = A.n
    for r in range(N):
        for s in range(N):
            acc = np.zeros((n, n))
            for k in range(N):
                acc = acc + A.block(r, k) * B.block(k, s)
            out[r * n:(r + 1) * n, s * n:(s + 1) * n] = acc
    return out


def test_slice_isomorphism_exact(rng):
    for n, N in [(2, 2), (3, 3), (2, 4)]:
        A, B = random_ring(rng, n, N, integer=True), random_ring(rng, n, N, integer=True)
        C = star_multiply(A, B)
        assert np.array_equal(C.to_blocks(), definitional_product(A, B))
        for i, j in itertools.product(range(n), repeat=2):
            assert np.array_equal(C.slice(i, j), A.slice(i, j) @ B.slice(i, j))


def test_product_matches_definition_real(rng):
    A, B = random_ring(rng, 2, 2), random_ring(rng, 2, 2)
    assert np.allclose(star_multiply(A, B).to_blocks(), definitional_product(A, B), rtol=1e-14, atol=1e-14)


def test_slice_block_views(rng):
    M = random_ring(rng, 3, 2)
    full = M.full_data()
    for r, s in itertools.product(range(2), repeat=2):
        assert np.array_equal(M.block(r, s), full[:, :, r, s])
    assert RingMatrix.from_blocks(M.to_blocks(), 3) == M


def test_identity_and_zero(rng):
    A = random_ring(rng, 2, 3)
    E = RingMatrix.identity(2, 3)
    assert star_multiply(E, A) == A
    assert star_multiply(A, E) == A
    Z = RingMatrix.zeros(2, 3)
    assert star_multiply(Z, A).max_abs() == 0
    assert np.array_equal(E.block(0, 0), np.ones((2, 2)))


def test_dimension_mismatch(rng):
    with pytest.raises(DimensionError):
        star_multiply(random_ring(rng, 2, 2), random_ring(rng, 2, 3))


def test_associativity_distributivity(rng):
    A, B, C = (random_ring(rng, 2, 3) for _ in range(3))
    assert star_multiply(star_multiply(A, B), C).allclose(star_multiply(A, star_multiply(B, C)), rtol=1e-12)
    assert star_multiply(A, B + C).allclose(star_multiply(A, B) + star_multiply(A, C), rtol=1e-12)


def test_transpose():
    n, N = 2, 2
    B = np.array([[1.0, 2.0], [3.0, 4.0]])
    dense = np.zeros((4, 4))
    dense[0:2, 2:4] = B
    T = star_transpose(RingMatrix.from_blocks(dense, n)).to_blocks()
    expect = np.zeros((4, 4))
    expect[0:2, 2:4] = B.T
    assert np.array_equal(T, expect)
    sym = RingMatrix.from_blocks(np.kron(np.ones((2, 2)), B + B.T), n)
    assert star_transpose(sym) == sym


def test_transpose_involution(rng):
    A = random_ring(rng, 3, 2)
    assert star_transpose(star_transpose(A)) == A
    for i, j in itertools.product(range(3), repeat=2):
        assert np.array_equal(star_transpose(A).slice(i, j), A.slice(j, i))


def test_dd_star(rng):
    A = random_ring(rng, 3, 2)
    D = dd_star(A)
    assert dd_star(D) == D
    for r, s in itertools.product(range(2), repeat=2):
        blk = D.block(r, s)
        assert np.array_equal(blk, np.diag(np.diag(A.block(r, s))))
    ones = RingMatrix.from_blocks(np.ones((6, 6)), 3)
    assert np.array_equal(dd_star(ones).to_blocks(), np.kron(np.ones((2, 2)), np.eye(3)))


def test_inverse_examples(rng):
    E = RingMatrix.identity(2, 3)
    assert star_inverse(E) == E
    lam = rng.uniform(1, 3, (2, 2))
    D = RingMatrix.from_ring_element(lam, 3)
    assert star_inverse(D).allclose(RingMatrix.from_ring_element(1.0 / lam, 3), rtol=1e-15)


@pytest.mark.parametrize("upper", [False, True])
def test_inverse_residual(rng, upper):
    for _ in range(10):
        A = random_ring(rng, 2, 3, upper=upper)
        if upper:
            A = A + RingMatrix.identity(2, 3) * 3.0
        Ai = star_inverse(A)
        E = RingMatrix.identity(2, 3)
        bound = 1e-10 * A.max_abs() * Ai.max_abs()
        assert (star_multiply(A, Ai) - E).max_abs() <= bound
        assert (star_multiply(Ai, A) - E).max_abs() <= bound


def test_inverse_reports_singular_slice(rng):
    A = random_ring(rng, 2, 2)
    data = A.data.copy()
    data[1] = 0.0
    with pytest.raises(NotInvertibleOverR) as exc:
        star_inverse(RingMatrix(2, 2, A.pairs, data))
    assert exc.value.pair == tuple(A.pairs[1])
    data = A.data.copy()
    data[2] = [[1.0, 2.0], [2.0, 4.0]]
    with pytest.raises(NotInvertibleOverR) as exc:
        star_inverse(RingMatrix(2, 2, A.pairs, data))
    assert exc.value.pair == tuple(A.pairs[2])


def test_det(rng):
    assert np.array_equal(ring_det(RingMatrix.identity(3, 2)), np.ones((3, 3)))
    A = random_ring(rng, 2, 3)
    data = A.data.copy()
    data[3] = 0
    d = ring_det(RingMatrix(2, 3, A.pairs, data))
    assert d[1, 1] == 0 and np.all(d[[0, 0, 1], [0, 1, 0]] != 0)
    single = random_ring(rng, 1, 4)
    assert np.isclose(ring_det(single)[0, 0], np.linalg.det(single.to_blocks()), rtol=1e-13)


def test_det_multiplicative(rng):
    for _ in range(10):
        A, B = random_ring(rng, 2, 3), random_ring(rng, 2, 3)
        lhs = ring_det(star_multiply(A, B))
        rhs = ring_det(A) * ring_det(B)
        assert np.abs(lhs - rhs).max() <= 1e-10 * max(np.abs(rhs).max(), 1.0)


def test_spectral_radius(rng):
    assert ring_spectral_radius(RingMatrix.identity(2, 3)) == 1.0
    assert ring_spectral_radius(RingMatrix.zeros(2, 3)) == 0.0
    T = random_ring(rng, 2, 4, upper=True)
    dense = max(np.abs(np.linalg.eigvals(T.slice(i, j))).max() for i, j in itertools.product(range(2), repeat=2))
    assert math.isclose(ring_spectral_radius(T), dense, rel_tol=1e-12)
    expect = np.abs(np.diagonal(T.data, axis1=1, axis2=2)).max()
    assert ring_spectral_radius(T) == expect


def test_series_radius_examples(rng):
    assert series_radius(RingMatrix.identity(2, 2), 1.0) == 1.0
    nil = RingMatrix(2, 3, random_ring(rng, 2, 3).pairs, np.triu(rng.standard_normal((4, 3, 3)), 1))
    assert series_radius(nil, 1.0) == math.inf
    with pytest.raises(ValueError):
        series_radius(nil, 0.0)


def convergence_probe(M, z, terms=50):
    """Norms of the terms ``z^k M^{*k}`` for k = 0..terms."""
    term = RingMatrix.identity(M.n, M.N)
    norms = []
    for _ in range(terms + 1):
        norms.append(term.max_abs())
        term = star_multiply(term, M) * z
    return np.array(norms)


def test_convergence_probe_brackets_radius(rng):
    for _ in range(20):
        M = random_ring(rng, 2, 3)
        R = series_radius(M, 1.0)
        inside = convergence_probe(M, 0.9 * R)
        outside = convergence_probe(M, 1.1 * R)
        assert inside[-1] < inside[40] < inside[30]
        assert outside[-1] > outside[40] > outside[30]


def test_eigendecompose_reconstruction(rng):
    for _ in range(10):
        M = random_ring(rng, 2, 3)
        dec = ring_eigendecompose(M)
        left = star_multiply(M, dec.V)
        right = star_multiply(dec.V, dec.Lam)
        assert (left - right).max_abs() <= 1e-9 * max(M.max_abs(), 1.0) * dec.V.max_abs()
        rebuilt = star_multiply(right, star_inverse(dec.V))
        assert (rebuilt - M).max_abs() <= 1e-9 * M.max_abs()
        E = RingMatrix.identity(2, 3)
        for lam in dec.eigenvalues():
            char = ring_det(E.hadamard_scale(lam) - M)
            assert np.abs(char).max() <= 1e-9 * max(1.0, M.max_abs()) ** 3


def test_eigendecompose_diagonal(rng):
    data = np.zeros((4, 3, 3))
    for p in range(4):
        data[p] = np.diag(rng.permutation(np.arange(1.0, 4.0)))
    M = RingMatrix(2, 3, list(itertools.product(range(2), repeat=2)), data)
    dec = ring_eigendecompose(M)
    assert star_multiply(M, dec.V).allclose(star_multiply(dec.V, dec.Lam))
    assert dec.Lam.allclose(M)
    assert dec.V.allclose(RingMatrix.identity(2, 3))


def test_defective_slice_refused():
    jordan = np.array([[2.0, 1.0], [0.0, 2.0]])
    M = RingMatrix(1, 2, [(0, 0)], jordan[None])
    with pytest.raises(NotDiagonalizableOverR):
        ring_eigendecompose(M)


@pytest.mark.parametrize("n,N", [(1, 2), (1, 3), (2, 2)])
def test_eigenvalue_count(rng, n, N):
    M = random_ring(rng, n, N)
    E = RingMatrix.identity(n, N)
    eigs = list(ring_eigenvalues(M))
    assert len(eigs) == N ** (n * n)
    for lam in eigs:
        assert np.abs(ring_det(E.hadamard_scale(lam) - M)).max() <= 1e-9
    # every choice of one slice eigenvalue per slice appears exactly once
    spectra = [np.linalg.eigvals(M.slice(i, j)) for i, j in itertools.product(range(n), repeat=2)]
    expect = sorted(tuple(np.round(c, 8)) for c in itertools.product(*spectra))
    got = sorted(tuple(np.round(lam.reshape(-1), 8)) for lam in eigs)
    assert got == expect


def test_eigenvector_does_not_imply_root():
    A = np.array([[1.0, 2.0], [3.0, 4.0]])
    lam = np.array([[1.0, 2.0], [3.0, 5.0]])
    dense = np.zeros((4, 4))
    dense[:2, :2], dense[2:, 2:] = A, -A
    M = RingMatrix.from_blocks(dense, 2, drop_zero=False)
    V = np.zeros((4, 4))
    V[:2, 0:2] = [[1.0, 1.0], [1.0, 0.0]]  # block column (V1, 0) in the first block column
    Vr = RingMatrix.from_blocks(V, 2, drop_zero=False)
    assert Vr.max_abs() > 0
    assert star_multiply(M, Vr) == Vr.hadamard_scale(lam)
    det = ring_det(RingMatrix.identity(2, 2).hadamard_scale(lam) - M)
    assert np.any(det != 0)


def test_power_and_json(rng):
    A = random_ring(rng, 2, 2)
    assert star_power(A, 3).allclose(star_multiply(A, star_multiply(A, A)))
    assert star_power(A, -1).allclose(star_inverse(A))
    assert RingMatrix.from_json(A.to_json()) == A
    C = RingMatrix(2, 2, A.pairs, A.data * (1 + 2j))
    assert RingMatrix.from_json(C.to_json()) == C
