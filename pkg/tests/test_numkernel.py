import numpy as np
import pytest

from iterqpe.numkernel import (
    DimensionError,
    EigenDecomposition,
    check_state,
    hermitian_eigendecompose,
    is_unitary,
    max_abs,
    tensor_product,
    unitary_exp,
)

from conftest import random_hermitian

X = np.array([[0, 1], [1, 0]], dtype=complex)


def test_tensor_identity():
    np.testing.assert_array_equal(tensor_product(np.eye(2), np.eye(2)), np.eye(4))


def test_tensor_block_structure():
    proj0 = np.array([[1, 0], [0, 0]])
    m = tensor_product(X, proj0)
    assert m[2, 0] == 1
    assert m.shape == (4, 4)


def test_tensor_mixed_product(rng):
    for _ in range(20):
        a, b = (rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)) for _ in range(2))
        u, v = (rng.normal(size=2) + 1j * rng.normal(size=2) for _ in range(2))
        lhs = tensor_product(a, b) @ np.kron(u, v)
        rhs = np.kron(a @ u, b @ v)
        assert max_abs(lhs - rhs) <= 1e-12


def test_tensor_rejects_oversize():
    with pytest.raises(DimensionError):
        tensor_product(np.eye(64), np.eye(128))
    assert tensor_product(np.eye(2), np.eye(4), max_dim=8).shape == (8, 8)


def test_eigh_diagonal():
    d = hermitian_eigendecompose(np.diag([1.0, -1.0]))
    np.testing.assert_allclose(d.eigenvalues, [-1, 1])


def test_eigh_pauli_x():
    d = hermitian_eigendecompose(X)
    np.testing.assert_allclose(d.eigenvalues, [-1, 1], atol=1e-15)
    minus = np.array([1, -1]) / np.sqrt(2)
    plus = np.array([1, 1]) / np.sqrt(2)
    assert abs(abs(np.vdot(minus, d.eigenvector(0))) - 1) < 1e-12
    assert abs(abs(np.vdot(plus, d.eigenvector(1))) - 1) < 1e-12


@pytest.mark.parametrize("dim", [8, 16, 64, 256])
def test_eigh_reconstruction(rng, dim):
    h = random_hermitian(rng, dim)
    d = hermitian_eigendecompose(h)
    assert np.all(np.diff(d.eigenvalues) >= 0)
    assert max_abs(d.reconstruct() - h) <= 1e-9
    v = d.eigenvectors
    assert max_abs(v.conj().T @ v - np.eye(dim)) <= 1e-10


def test_eigh_rejects_non_hermitian():
    with pytest.raises(ValueError, match="not Hermitian"):
        hermitian_eigendecompose(np.array([[0, 1], [0, 0]]))


def test_eigendecomposition_is_immutable(rng):
    d = hermitian_eigendecompose(random_hermitian(rng, 4))
    with pytest.raises(ValueError):
        d.eigenvalues[0] = 3.0


def test_exp_zero_time_is_identity(rng):
    d = hermitian_eigendecompose(random_hermitian(rng, 8))
    assert max_abs(unitary_exp(d, 0.0) - np.eye(8)) <= 1e-12


def test_exp_diagonal_entries():
    energies = np.array([-0.3, 0.5, 2.0])
    d = EigenDecomposition(energies, np.eye(3, dtype=complex))
    u = unitary_exp(d, 1.7, sign=-1)
    np.testing.assert_allclose(np.diag(u), np.exp(-1j * energies * 1.7), atol=1e-15)
    u_plus = unitary_exp(d, 1.7, sign=1)
    np.testing.assert_allclose(np.diag(u_plus), np.exp(1j * energies * 1.7), atol=1e-15)


def test_exp_semigroup_and_unitarity(rng):
    for _ in range(100):
        d = hermitian_eigendecompose(random_hermitian(rng, 16))
        t1, t2 = rng.uniform(-5, 5, size=2)
        u1, u2 = unitary_exp(d, t1), unitary_exp(d, t2)
        assert is_unitary(u1)
        assert max_abs(u1 @ u2 - unitary_exp(d, t1 + t2)) <= 1e-10


def test_exp_rejects_bad_input(rng):
    d = hermitian_eigendecompose(random_hermitian(rng, 2))
    with pytest.raises(ValueError):
        unitary_exp(d, float("inf"))
    with pytest.raises(ValueError):
        unitary_exp(d, 1.0, sign=2)


def test_check_state():
    check_state([1, 0])
    with pytest.raises(ValueError, match="normalized"):
        check_state([1, 1])
