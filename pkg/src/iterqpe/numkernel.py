"""Dense complex linear algebra for small Hilbert spaces.

Vectors and matrices are plain ``numpy`` complex arrays. This module adds the
validation checks the rest of the package relies on (unitarity, Hermiticity,
normalization) and the Hermitian eigendecomposition that backs every
propagator.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

MAX_DIM = 2**12

UNITARY_TOL = 1e-10
HERMITIAN_TOL = 1e-12
NORM_TOL = 1e-12
RECONSTRUCTION_TOL = 1e-9


class DimensionError(ValueError):
    """Raised when an operand exceeds the configured dimension cap."""


class EigenConvergenceError(RuntimeError):
    """Raised when the Hermitian solver fails or returns a poor factorization."""

    def __init__(self, message: str, residual: float = float("nan")):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


def as_matrix(m) -> np.ndarray:
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2:
        raise ValueError(f"expected a 2-d matrix, got shape {a.shape}")
    return a


def max_abs(m: np.ndarray) -> float:
    return float(np.max(np.abs(m))) if m.size else 0.0


def is_hermitian(m, tol: float = HERMITIAN_TOL) -> bool:
    a = as_matrix(m)
    return a.shape[0] == a.shape[1] and max_abs(a - a.conj().T) <= tol


def is_unitary(m, tol: float = UNITARY_TOL) -> bool:
    a = as_matrix(m)
    if a.shape[0] != a.shape[1]:
        return False
    return max_abs(a.conj().T @ a - np.eye(a.shape[0])) <= tol


def check_state(v, tol: float = NORM_TOL) -> np.ndarray:
    """Return ``v`` as a complex 1-d array, raising if it is not a unit vector."""
    a = np.asarray(v, dtype=complex)
    if a.ndim != 1:
        raise ValueError(f"state must be 1-d, got shape {a.shape}")
    norm2 = float(np.vdot(a, a).real)
    if abs(norm2 - 1.0) > tol:
        raise ValueError(f"state is not normalized: sum |a|^2 = {norm2!r}")
    return a


def tensor_product(a, b, max_dim: int = MAX_DIM) -> np.ndarray:
    """Kronecker product ``a ⊗ b`` with the row/column dimension capped at ``max_dim``."""
    a = as_matrix(a)
    b = as_matrix(b)
    rows = a.shape[0] * b.shape[0]
    cols = a.shape[1] * b.shape[1]
    if max(rows, cols) > max_dim:
        raise DimensionError(f"tensor product of shape {rows}x{cols} exceeds cap {max_dim}")
    return np.kron(a, b)


@dataclass(frozen=True)
class EigenDecomposition:
    """Eigenvalues in ascending order and the matching orthonormal eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def __post_init__(self):
        # freeze the arrays so the value can be shared freely
        self.eigenvalues.setflags(write=False)
        self.eigenvectors.setflags(write=False)

    @property
    def dim(self) -> int:
        return len(self.eigenvalues)

    def eigenvector(self, j: int) -> np.ndarray:
        return np.array(self.eigenvectors[:, j])

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def hermitian_eigendecompose(h, max_dim: int = MAX_DIM) -> EigenDecomposition:
    """Diagonalize a Hermitian matrix.

    Raises ``ValueError`` for non-Hermitian input, ``DimensionError`` above the
    cap, and ``EigenConvergenceError`` if the solver fails or the factorization
    does not reproduce ``h`` to ``RECONSTRUCTION_TOL``.
    """
    h = as_matrix(h)
    if h.shape[0] > max_dim:
        raise DimensionError(f"dimension {h.shape[0]} exceeds cap {max_dim}")
    if not is_hermitian(h):
        raise ValueError(f"matrix is not Hermitian: max|H - H†| = {max_abs(h - h.conj().T):.3e}")
    try:
        w, v = scipy.linalg.eigh(h)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
        raise EigenConvergenceError(f"Hermitian solver failed: {exc}") from exc
    decomp = EigenDecomposition(np.asarray(w, dtype=float), np.asarray(v, dtype=complex))
    residual = max_abs(decomp.reconstruct() - h)
    orth = max_abs(v.conj().T @ v - np.eye(len(w)))
    if residual > RECONSTRUCTION_TOL or orth > UNITARY_TOL:
        raise EigenConvergenceError("eigendecomposition is inaccurate", max(residual, orth))
    return decomp


def unitary_exp(decomp: EigenDecomposition, tau: float, sign: int = -1) -> np.ndarray:
    """Return ``V diag(exp(sign * i * λ * tau)) V†``.

    ``sign=-1`` gives the forward propagator ``exp(-i H tau)``.
    """
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    if not np.isfinite(tau):
        raise ValueError(f"tau must be finite, got {tau!r}")
    angles = decomp.eigenvalues * tau
    if not np.all(np.isfinite(angles)):
        raise OverflowError(f"eigenvalue * tau overflows for tau={tau!r}")
    v = decomp.eigenvectors
    return (v * np.exp(sign * 1j * angles)) @ v.conj().T
