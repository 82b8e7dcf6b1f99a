"""Hamiltonians as Pauli sums, the two-site Hubbard model, and propagators.

Qubit convention: character ``k`` of a Pauli string acts on qubit ``k`` and
qubit 0 is the least significant bit of a computational basis index, so the
dense matrix of ``"XZ"`` is ``kron(Z, X)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from iterqpe.numkernel import (
    MAX_DIM,
    DimensionError,
    EigenDecomposition,
    hermitian_eigendecompose,
    tensor_product,
    unitary_exp,
)

PAULI_MATRICES = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

MAX_QUBITS = int(math.log2(MAX_DIM))


@dataclass(frozen=True)
class PauliTerm:
    coefficient: float
    string: str

    def __post_init__(self):
        if not isinstance(self.coefficient, (int, float)) or isinstance(self.coefficient, bool):
            raise TypeError(f"coefficient must be real, got {self.coefficient!r}")
        if not math.isfinite(self.coefficient):
            raise ValueError(f"coefficient must be finite, got {self.coefficient!r}")
        if not self.string or set(self.string) - set(PAULI_MATRICES):
            raise ValueError(f"invalid Pauli string {self.string!r}")
        object.__setattr__(self, "coefficient", float(self.coefficient))

    def matrix(self) -> np.ndarray:
        m = np.ones((1, 1), dtype=complex)
        for letter in self.string:
            m = tensor_product(PAULI_MATRICES[letter], m)
        return self.coefficient * m


@dataclass(frozen=True)
class PauliSum:
    """A real-weighted sum of Pauli strings on ``n_qubits`` qubits."""

    n_qubits: int
    terms: tuple[PauliTerm, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError("n_qubits must be positive")
        terms = tuple(self.terms)
        for term in terms:
            if len(term.string) != self.n_qubits:
                raise ValueError(
                    f"term {term.string!r} has {len(term.string)} letters, expected {self.n_qubits}"
                )
        object.__setattr__(self, "terms", terms)

    @classmethod
    def from_pairs(cls, n_qubits: int, pairs) -> PauliSum:
        """Build a sum from ``(coefficient, string)`` pairs, merging repeats and dropping zeros.

        The first occurrence of each string fixes its position in the term order.
        """
        merged: dict[str, float] = {}
        for coefficient, string in pairs:
            merged[string] = merged.get(string, 0.0) + coefficient
        return cls(n_qubits, tuple(PauliTerm(c, s) for s, c in merged.items() if c != 0))

    def to_text(self) -> str:
        return "".join(f"{term.coefficient!r} {term.string}\n" for term in self.terms)

    @classmethod
    def from_text(cls, text: str, n_qubits: int | None = None) -> PauliSum:
        """Parse the one-term-per-line ``coefficient PAULISTRING`` format.

        Blank lines and ``#`` comments are ignored. ``n_qubits`` is required
        only for an empty sum.
        """
        terms = []
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.replace("−", "-").split()
            if len(parts) != 2:
                raise ValueError(f"line {lineno}: expected 'coefficient PAULISTRING', got {raw!r}")
            try:
                coefficient = float(parts[0])
            except ValueError:
                raise ValueError(f"line {lineno}: bad coefficient {parts[0]!r}") from None
            terms.append(PauliTerm(coefficient, parts[1].upper()))
        if n_qubits is None:
            if not terms:
                raise ValueError("empty Pauli sum needs an explicit n_qubits")
            n_qubits = len(terms[0].string)
        return cls(n_qubits, tuple(terms))

    @classmethod
    def load(cls, path) -> PauliSum:
        return cls.from_text(Path(path).read_text())


def pauli_sum_to_matrix(h: PauliSum) -> np.ndarray:
    if h.n_qubits > MAX_QUBITS:
        raise DimensionError(f"{h.n_qubits} qubits exceeds the {MAX_QUBITS}-qubit cap")
    dim = 2**h.n_qubits
    m = np.zeros((dim, dim), dtype=complex)
    for term in h.terms:
        m += term.matrix()
    return m


# Jordan-Wigner building blocks, mode j -> qubit j.


def _string(n_qubits: int, letters: dict[int, str]) -> str:
    return "".join(letters.get(q, "I") for q in range(n_qubits))


def jw_hopping(i: int, j: int, n_qubits: int) -> list[tuple[float, str]]:
    """Pauli pairs for ``c†_i c_j + c†_j c_i``."""
    if i == j:
        raise ValueError("hopping needs two distinct modes")
    lo, hi = sorted((i, j))
    between = {q: "Z" for q in range(lo + 1, hi)}
    return [
        (0.5, _string(n_qubits, {**between, lo: "X", hi: "X"})),
        (0.5, _string(n_qubits, {**between, lo: "Y", hi: "Y"})),
    ]


def jw_number_product(i: int, j: int, n_qubits: int) -> list[tuple[float, str]]:
    """Pauli pairs for ``n_i n_j`` with ``n = (I - Z)/2``."""
    return [
        (0.25, _string(n_qubits, {})),
        (-0.25, _string(n_qubits, {i: "Z"})),
        (-0.25, _string(n_qubits, {j: "Z"})),
        (0.25, _string(n_qubits, {i: "Z", j: "Z"})),
    ]


@dataclass(frozen=True)
class HubbardParams:
    t: float = 1.0
    u: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.t) and math.isfinite(self.u)):
            raise ValueError("Hubbard parameters must be finite")


def hubbard_mode(site: int, spin: str) -> int:
    """Qubit index of spin-orbital (site, spin), ordering 1↑, 1↓, 2↑, 2↓."""
    return 2 * (site - 1) + {"up": 0, "down": 1}[spin]


def build_hubbard(params: HubbardParams) -> PauliSum:
    """Two-site Fermi-Hubbard Hamiltonian under Jordan-Wigner, 4 qubits."""
    pairs = []
    for spin in ("up", "down"):
        for c, s in jw_hopping(hubbard_mode(1, spin), hubbard_mode(2, spin), 4):
            pairs.append((-params.t * c, s))
    for site in (1, 2):
        for c, s in jw_number_product(hubbard_mode(site, "up"), hubbard_mode(site, "down"), 4):
            pairs.append((params.u * c, s))
    return PauliSum.from_pairs(4, pairs)


def number_operator(n_qubits: int) -> np.ndarray:
    """Dense total particle number, diagonal in the computational basis."""
    occupations = [bin(b).count("1") for b in range(2**n_qubits)]
    return np.diag(np.array(occupations, dtype=complex))


def spin_z_operator(n_qubits: int) -> np.ndarray:
    """Dense total S_z for the interleaved (↑, ↓) mode ordering."""
    values = []
    for b in range(2**n_qubits):
        sz = 0.0
        for q in range(n_qubits):
            if b >> q & 1:
                sz += 0.5 if q % 2 == 0 else -0.5
        values.append(sz)
    return np.diag(np.array(values, dtype=complex))


@dataclass(frozen=True)
class Propagator:
    """Generator of ``U_K(tau) = exp(-i H tau)`` for any ``tau`` from one diagonalization."""

    decomp: EigenDecomposition
    n_qubits: int

    @property
    def dim(self) -> int:
        return self.decomp.dim

    @property
    def energies(self) -> np.ndarray:
        return self.decomp.eigenvalues

    def eigenstate(self, j: int) -> np.ndarray:
        return self.decomp.eigenvector(j)

    def __call__(self, tau: float) -> np.ndarray:
        return unitary_exp(self.decomp, tau, sign=-1)


def exact_propagator(h: PauliSum) -> Propagator:
    return Propagator(hermitian_eigendecompose(pauli_sum_to_matrix(h)), h.n_qubits)


def scalar_propagator(energy: float) -> Propagator:
    """Propagator of ``H = energy * I`` on one qubit; every state is an eigenstate.

    Used to drive the circuit at a prescribed phase without a physical model.
    """
    e = np.array([energy, energy], dtype=float)
    return Propagator(EigenDecomposition(e, np.eye(2, dtype=complex)), 1)


def sector_eigenpairs(h_matrix: np.ndarray, n_particles: int) -> tuple[np.ndarray, np.ndarray]:
    """Diagonalize ``h_matrix`` inside a fixed particle-number sector.

    Returns ascending energies and eigenvectors embedded in the full space (as
    columns). The Hamiltonian must conserve particle number.
    """
    dim = h_matrix.shape[0]
    basis = [b for b in range(dim) if bin(b).count("1") == n_particles]
    if not basis:
        raise ValueError(f"no basis states with {n_particles} particles")
    block = h_matrix[np.ix_(basis, basis)]
    decomp = hermitian_eigendecompose(block)
    vectors = np.zeros((dim, len(basis)), dtype=complex)
    vectors[basis, :] = decomp.eigenvectors
    return np.array(decomp.eigenvalues), vectors


def _pauli_exp(term: PauliTerm, theta: float) -> np.ndarray:
    # exp(-i c theta P) = cos(c theta) I - i sin(c theta) P, since P^2 = I
    p = PauliTerm(1.0, term.string).matrix()
    angle = term.coefficient * theta
    return math.cos(angle) * np.eye(p.shape[0]) - 1j * math.sin(angle) * p


def trotter_propagator(h: PauliSum, tau: float, steps: int) -> np.ndarray:
    """First-order product formula ``(prod_k exp(-i c_k P_k tau/steps))**steps``.

    Terms are applied in list order, the first term acting first on the state.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    dim = 2**h.n_qubits
    step = np.eye(dim, dtype=complex)
    for term in h.terms:
        step = _pauli_exp(term, tau / steps) @ step
    return np.linalg.matrix_power(step, steps)


__all__ = [
    "PAULI_MATRICES",
    "HubbardParams",
    "PauliSum",
    "PauliTerm",
    "Propagator",
    "build_hubbard",
    "exact_propagator",
    "jw_hopping",
    "jw_number_product",
    "number_operator",
    "pauli_sum_to_matrix",
    "scalar_propagator",
    "sector_eigenpairs",
    "spin_z_operator",
    "trotter_propagator",
]
