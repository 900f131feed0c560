import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qdiv.errors import BadRank, DimMismatch, NonHermitian, NotAState, NotTraceless, SupportViolation
from qdiv.opcore import (
    PAULI_X,
    PAULI_Z,
    bloch_state,
    bloch_vector,
    from_coords,
    hermitian_basis,
    hs_inner,
    make_tangent,
    matrix_from_json,
    matrix_to_json,
    norms,
    random_state,
    random_tangent,
    spectral_decompose,
    to_coords,
    validate_density,
)

seeds = st.integers(0, 2**32 - 1)


def random_hermitian(d, seed):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return (A + A.conj().T) / 2


# spectral_decompose


def test_identity_single_cluster():
    sd = spectral_decompose(np.eye(2), cluster_tol=1e-8)
    np.testing.assert_allclose(sd.eigenvalues, [1.0])
    np.testing.assert_allclose(sd.projectors[0], np.eye(2), atol=1e-12)


def test_diagonal_ascending():
    sd = spectral_decompose(np.diag([0.7, 0.3]))
    np.testing.assert_allclose(sd.eigenvalues, [0.3, 0.7])
    np.testing.assert_allclose(sd.projectors[0], np.diag([0, 1]), atol=1e-12)


def test_rank_one_against_dense_eigensolver():
    H = (PAULI_X + np.eye(2)) / 2
    sd = spectral_decompose(H)
    w, V = np.linalg.eig(H)
    order = np.argsort(w.real)
    np.testing.assert_allclose(sd.eigenvalues, w.real[order], atol=1e-12)
    for P, v in zip(sd.projectors, V.T[order]):
        v = v / np.linalg.norm(v)
        np.testing.assert_allclose(P, np.outer(v, v.conj()), atol=1e-12)


def test_non_hermitian_rejected():
    with pytest.raises(NonHermitian):
        spectral_decompose(np.array([[0, 1], [0, 0]]))


@given(seeds, st.integers(2, 4))
def test_reconstruction_and_projector_algebra(seed, d):
    H = random_hermitian(d, seed)
    sd = spectral_decompose(H)
    np.testing.assert_allclose(sd.reconstruct(), H, atol=1e-10)
    for i, P in enumerate(sd.projectors):
        for j, Q in enumerate(sd.projectors):
            np.testing.assert_allclose(P @ Q, P if i == j else 0 * P, atol=1e-10)
    np.testing.assert_allclose(sum(sd.projectors), np.eye(d), atol=1e-10)


def test_degenerate_eigenvalues_share_projector():
    U = np.linalg.qr(np.random.default_rng(1).normal(size=(3, 3)))[0]
    H = U @ np.diag([0.2, 0.4, 0.4 + 1e-14]) @ U.T
    sd = spectral_decompose(H)
    assert len(sd.projectors) == 2
    assert sorted(sd.multiplicities) == [1, 2]


# hs_inner / norms


def test_hs_inner_values():
    assert hs_inner(np.eye(2), np.eye(2)) == pytest.approx(2)
    assert hs_inner(PAULI_Z, PAULI_X) == pytest.approx(0)
    with pytest.raises(DimMismatch):
        hs_inner(np.eye(2), np.eye(3))


@given(seeds)
def test_hs_inner_elementwise_oracle(seed):
    A, B = random_hermitian(3, seed), random_hermitian(3, seed + 1)
    oracle = sum(A[i, j].conjugate() * B[i, j] for i in range(3) for j in range(3))
    assert abs(hs_inner(A, B) - oracle) < 1e-12


def test_norms_values():
    n = norms(PAULI_Z)
    assert n.trace_norm == pytest.approx(2)
    assert n.two_norm == pytest.approx(np.sqrt(2))
    assert norms(np.zeros((2, 2))) == (0.0, 0.0)


@given(seeds)
def test_norms_against_eigen_oracle(seed):
    A = random_hermitian(4, seed)
    n = norms(A)
    assert n.trace_norm == pytest.approx(np.abs(np.linalg.eigvalsh(A)).sum(), abs=1e-10)
    assert n.two_norm**2 == pytest.approx(hs_inner(A, A).real, abs=1e-10)


# validate_density


def test_validate_density_cases():
    assert validate_density(np.eye(2) / 2).min_eig == pytest.approx(0.5)
    with pytest.raises(NotAState):
        validate_density(np.diag([1.5, -0.5]))
    rho = validate_density(np.diag([1 + 1e-13, -1e-13]))
    assert rho.min_eig == 0.0
    assert np.trace(rho.matrix).real == pytest.approx(1, abs=1e-15)


# make_tangent


def test_make_tangent_cases():
    make_tangent(np.eye(2) / 2, PAULI_Z)
    with pytest.raises(SupportViolation):
        make_tangent(np.diag([1.0, 0.0]), PAULI_X)
    with pytest.raises(NotTraceless):
        make_tangent(np.eye(2) / 2, PAULI_Z + 0.1 * np.eye(2))


@given(seeds, st.integers(2, 4), st.data())
def test_difference_of_equal_support_states_is_tangent(seed, d, data):
    r = data.draw(st.integers(1, d))
    rho = random_state(d, r, seed)
    V = rho.support_vectors
    sigma = random_state(r, r, seed + 1).matrix
    gamma = V @ sigma @ V.conj().T
    make_tangent(rho, rho.matrix - gamma)


# random generation


def test_random_state_reproducible_and_ranked():
    a, b = random_state(2, 2, 7), random_state(2, 2, 7)
    np.testing.assert_array_equal(a.matrix, b.matrix)
    assert a.support_rank == 2
    pure = random_state(3, 1, 0)
    assert pure.min_eig == 0.0 and pure.support_rank == 1
    with pytest.raises(BadRank):
        random_state(2, 3, 0)


def test_random_state_ensemble_mean():
    rng = np.random.default_rng(0)
    mean = sum(random_state(2, 2, rng.integers(2**63)).matrix for _ in range(10_000)) / 10_000
    assert np.max(np.abs(mean - np.eye(2) / 2)) < 0.02


@given(seeds)
def test_random_tangent_is_tangent(seed):
    rho = random_state(3, 2, seed)
    X = random_tangent(rho, seed).matrix
    assert abs(np.trace(X)) < 1e-10
    Q = np.eye(3) - rho.support
    assert np.max(np.abs(Q @ X @ Q)) < 1e-10


# bases and serialization


@pytest.mark.parametrize("d", [2, 3, 4])
def test_hermitian_basis_orthonormal(d):
    B = hermitian_basis(d)
    G = np.einsum("iab,jab->ij", B.conj(), B)
    np.testing.assert_allclose(G, np.eye(d * d), atol=1e-12)
    np.testing.assert_allclose(B[0], np.eye(d) / np.sqrt(d), atol=1e-12)
    A = random_hermitian(d, d)
    np.testing.assert_allclose(from_coords(to_coords(A, B), B), A, atol=1e-12)


def test_bloch_round_trip():
    w = np.array([0.1, -0.2, 0.3])
    np.testing.assert_allclose(bloch_vector(bloch_state(w)), w, atol=1e-14)


def test_matrix_json_round_trip():
    A = random_hermitian(3, 5)
    obj = json.loads(json.dumps(matrix_to_json(A)))
    np.testing.assert_array_equal(matrix_from_json(obj), A)
    with pytest.raises(ValueError):
        matrix_from_json({"dim": 3, "re": [[1, 0], [0, 1]]})
