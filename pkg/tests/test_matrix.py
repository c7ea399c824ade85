import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from irrpert.ensembles import ginibre, random_unitary
from irrpert.errors import AmbiguityError, NumericalError, PreconditionError
from irrpert.matrix import (
    DEFAULT_TOL,
    Projection,
    Tolerances,
    as_hermitian,
    as_matrix,
    cluster,
    hermitian_eig,
    rank_one,
    schatten_norm,
    spectral_projection,
    trace_norm,
)

from .strategies import complex_matrices, hermitian_matrices, seeds


def test_tolerances_reject_nonpositive():
    with pytest.raises(ValueError):
        Tolerances(cluster_tol=0.0)
    with pytest.raises(ValueError):
        Tolerances(rank_tol=float("nan"))


def test_tolerances_scaled():
    t = DEFAULT_TOL.scaled(10)
    assert t.nullspace_tol == pytest.approx(1e-7)
    assert t.hermitian_tol == pytest.approx(1e-8)
    with pytest.raises(ValueError):
        DEFAULT_TOL.scaled(-1)


@pytest.mark.parametrize("bad", [np.zeros((2, 3)), np.zeros((0, 0)), np.array([[np.nan]]), np.zeros(3)])
def test_as_matrix_rejects(bad):
    with pytest.raises(PreconditionError):
        as_matrix(bad)


def test_as_hermitian_symmetrizes_and_rejects():
    A = np.array([[1, 2 + 1e-12], [2, 3]])
    H = as_hermitian(A)
    assert np.array_equal(H, H.conj().T)
    with pytest.raises(PreconditionError):
        as_hermitian([[0, 1], [0, 0]])


def test_rank_one_examples():
    assert np.array_equal(rank_one([1, 0], [1, 0]), [[1, 0], [0, 0]])
    assert np.trace(rank_one([1, 0], [1, 0])) == 1
    assert np.array_equal(rank_one([0, 1], [1, 0]), [[0, 0], [1, 0]])
    e = np.array([1, 1]) / np.sqrt(2)
    f = np.array([1, -1]) / np.sqrt(2)
    M = rank_one(e, f)
    assert np.allclose(M, 0.5 * np.array([[1, -1], [1, -1]]), atol=1e-15)
    # (e f*) h = <h, f> e on the basis vectors
    for h in np.eye(2):
        assert np.allclose(M @ h, np.vdot(f, h) * e)


def test_rank_one_dimension_mismatch():
    with pytest.raises(PreconditionError):
        rank_one([1, 0], [1, 0, 0])


@given(seeds, st.integers(1, 6))
def test_rank_one_adjoint_swaps(seed, n):
    rng = np.random.default_rng(seed)
    e = rng.normal(size=n) + 1j * rng.normal(size=n)
    f = rng.normal(size=n) + 1j * rng.normal(size=n)
    assert np.array_equal(rank_one(e, f).conj().T, rank_one(f, e))


def test_schatten_examples():
    assert schatten_norm(np.diag([1, -2, 3]), 1) == pytest.approx(6)
    assert schatten_norm([[0, 1], [0, 0]], 2) == pytest.approx(1)
    e = np.array([1, 1j]) / np.sqrt(2)
    f = np.array([0.6, 0.8])
    assert trace_norm(rank_one(e, f)) == pytest.approx(1)
    with pytest.raises(ValueError):
        schatten_norm(np.eye(2), 0.5)


@given(complex_matrices(), st.sampled_from([1, 2, 3, np.inf]))
def test_schatten_matches_numpy(M, p):
    if p == 1:
        ref = np.linalg.norm(M, "nuc")
    elif p == 2:
        ref = np.linalg.norm(M, "fro")
    elif p == np.inf:
        ref = np.linalg.norm(M, 2)
    else:
        ref = np.sum(np.linalg.svd(M, compute_uv=False) ** 3) ** (1 / 3)
    assert schatten_norm(M, p) == pytest.approx(ref, rel=1e-10, abs=1e-14)


def test_schatten_large_p_does_not_overflow():
    assert schatten_norm(np.diag([1e200, 1e200]), 4) == pytest.approx(1e200 * 2 ** 0.25)


@given(seeds, st.integers(1, 6), st.sampled_from([1, 2, np.inf]))
def test_schatten_unitary_invariance(seed, n, p):
    rng = np.random.default_rng(seed)
    M = ginibre(n, rng)
    U, V = random_unitary(n, rng), random_unitary(n, rng)
    assert abs(schatten_norm(U @ M @ V, p) - schatten_norm(M, p)) <= 1e-10


@given(complex_matrices(n_min=3, n_max=3), complex_matrices(n_min=3, n_max=3))
def test_trace_norm_triangle(M, N):
    assert trace_norm(M + N) <= trace_norm(M) + trace_norm(N) + 1e-10


def test_hermitian_eig_examples():
    d = hermitian_eig(np.eye(2))
    assert np.allclose(d.eigenvalues, [1, 1])
    d = hermitian_eig([[0, 1], [1, 0]])
    assert np.allclose(d.eigenvalues, [-1, 1])
    d = hermitian_eig(np.diag([3.0, 1, 2]))
    assert np.allclose(d.eigenvalues, [1, 2, 3])


@given(hermitian_matrices())
def test_hermitian_eig_invariants(A):
    d = hermitian_eig(A)
    U = d.unitary
    n = A.shape[0]
    assert np.all(np.diff(d.eigenvalues) >= 0)
    assert np.linalg.norm(U.conj().T @ U - np.eye(n), 2) <= 1e-9
    assert np.linalg.norm(A @ U - U * d.eigenvalues, 2) <= 1e-9 * max(1, np.linalg.norm(A, 2))
    assert np.allclose(d.reconstruct(), A, atol=1e-12)


def test_hermitian_eig_tight_tolerance_raises():
    tight = Tolerances(recon_tol=1e-30, ortho_tol=1e-30)
    A = np.random.default_rng(0).normal(size=(6, 6))
    with pytest.raises(NumericalError) as err:
        hermitian_eig(A + A.T, tight)
    assert err.value.residual is not None


def test_cluster_is_transitive():
    groups = cluster([0.0, 0.5e-8, 1.0e-8, 1.0], 0.6e-8)
    assert [sorted(g.tolist()) for g in groups] == [[0, 1, 2], [3]]
    assert cluster([], 1.0) == []


def test_spectral_projection_examples():
    A = np.diag([1, 0.9, 0.2])
    P = spectral_projection(A, [0.8, 1])
    assert P.rank == 2 and np.allclose(P.matrix, np.diag([1, 1, 0]))
    Z = spectral_projection(A, [2, 3])
    assert Z.rank == 0 and np.allclose(Z.matrix, 0)
    X = spectral_projection([[0, 1], [1, 0]], [0.5, 1.5])
    assert X.rank == 1 and np.allclose(X.matrix, 0.5 * np.ones((2, 2)))


def test_spectral_projection_split_cluster_is_ambiguous():
    # 1 and 1 + 0.8e-8 sit within tolerance of hi = 1, 1 + 1.6e-8 does not, all three cluster
    A = np.diag([1, 1 + 0.8e-8, 1 + 1.6e-8, 0])
    with pytest.raises(AmbiguityError):
        spectral_projection(A, [0.5, 1])
    assert spectral_projection(A, [0.5, 2]).rank == 3
    with pytest.raises(PreconditionError):
        spectral_projection(np.eye(2), [1.5, 0.5])


@given(hermitian_matrices())
def test_spectral_projection_whole_spectrum_is_identity(A):
    w = np.linalg.eigvalsh(A)
    P = spectral_projection(A, [w[0] - 1, w[-1] + 1])
    assert P.rank == A.shape[0]
    assert np.allclose(P.matrix, np.eye(A.shape[0]), atol=1e-9)


@given(hermitian_matrices(n_min=2))
def test_spectral_projections_of_a_partition(A):
    w = np.linalg.eigvalsh(A)
    gaps = np.diff(w)
    k = int(np.argmax(gaps))
    if gaps[k] < 1e-6:
        return
    cut = (w[k] + w[k + 1]) / 2
    P = spectral_projection(A, [w[0] - 1, cut])
    Q = spectral_projection(A, [cut, w[-1] + 1])
    n = A.shape[0]
    assert np.linalg.norm(P.matrix + Q.matrix - np.eye(n), 2) <= 1e-9
    assert np.linalg.norm(P.matrix @ Q.matrix, 2) <= 1e-9
    assert P.rank + Q.rank == n


def test_projection_from_matrix_validates():
    P = Projection.from_matrix(np.diag([1.0, 0, 1]))
    assert P.rank == 2
    assert P.complement().rank == 1
    with pytest.raises(PreconditionError):
        Projection.from_matrix(np.diag([1.0, 0.5]))
    with pytest.raises(PreconditionError):
        Projection.from_matrix([[0, 1], [0, 0]])


def test_projection_range_basis_spans():
    v = np.array([1, 1j, 0]) / np.sqrt(2)
    P = Projection.from_vectors(v[:, None])
    E = P.range_basis()
    assert E.shape == (3, 1)
    assert np.allclose(E @ E.conj().T, P.matrix)
