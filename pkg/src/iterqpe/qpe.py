"""Phase estimation with a propagator: circuit simulation, closed form, sampling.

The eigenphase of energy ``E`` at time span ``alpha * delta_t`` is
``phi = E * alpha * delta_t / (2 pi)`` (hbar = 1). A perfect run of the
``N``-ancilla circuit measures ``x`` with probability

    Pr(x) = sin^2(pi (x - 2^N phi)) / (4^N sin^2(pi (x / 2^N - phi)))

which is what :func:`analytic_distribution` evaluates and what
:func:`simulate_circuit` reproduces gate stage by gate stage.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, replace

import numpy as np

from iterqpe.model import Propagator
from iterqpe.numkernel import MAX_DIM, DimensionError, check_state, tensor_product

MAX_ANCILLA = 12
SINGULAR_TOL = 1e-12
PROB_TOL = 1e-12
DEFAULT_BETA = 0.8

_HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)


@dataclass(frozen=True)
class QpeConfig:
    n_ancilla: int
    delta_t: float = 1.0
    alpha: float = 1

    def __post_init__(self):
        if not 1 <= self.n_ancilla <= MAX_ANCILLA:
            raise ValueError(f"n_ancilla must be in [1, {MAX_ANCILLA}], got {self.n_ancilla}")
        if not self.delta_t > 0 or not math.isfinite(self.delta_t):
            raise ValueError(f"delta_t must be positive, got {self.delta_t}")
        if not self.alpha >= 1 or not math.isfinite(self.alpha):
            raise ValueError(f"alpha must be >= 1, got {self.alpha}")

    @property
    def n_slots(self) -> int:
        return 2**self.n_ancilla

    @property
    def time_span(self) -> float:
        return self.alpha * self.delta_t

    def with_alpha(self, alpha) -> QpeConfig:
        return replace(self, alpha=alpha)

    def phase(self, energy: float) -> float:
        """Eigenphase in turns (not reduced mod 1)."""
        return energy * self.alpha * self.delta_t / (2 * math.pi)


@dataclass(frozen=True)
class OutcomeDistribution:
    """Probabilities of the ``2^N`` ancilla outcomes."""

    n_ancilla: int
    probs: np.ndarray

    def __post_init__(self):
        p = np.array(self.probs, dtype=float)
        if p.shape != (2**self.n_ancilla,):
            raise ValueError(f"expected {2**self.n_ancilla} probabilities, got shape {p.shape}")
        if np.any(p < -PROB_TOL) or np.any(p > 1 + PROB_TOL):
            raise ValueError("probabilities must lie in [0, 1]")
        if abs(p.sum() - 1.0) > PROB_TOL:
            raise ValueError(f"probabilities sum to {p.sum()!r}, not 1")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    def __len__(self):
        return len(self.probs)

    def __getitem__(self, x):
        return self.probs[x]

    def argmax(self) -> int:
        return int(np.argmax(self.probs))

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["x", "prob"])
        for x, p in enumerate(self.probs):
            writer.writerow([x, format(float(p), ".17g")])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> OutcomeDistribution:
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or rows[0] != ["x", "prob"]:
            raise ValueError("distribution CSV must start with header 'x,prob'")
        body = rows[1:]
        if [int(r[0]) for r in body] != list(range(len(body))):
            raise ValueError("distribution CSV rows must list x = 0, 1, 2, ... in order")
        n = len(body).bit_length() - 1
        return cls(n, np.array([float(r[1]) for r in body]))


@dataclass(frozen=True)
class PeakReport:
    """Most likely outcome ``y`` and the plateau of near-peak slots around it.

    ``plateau`` lists the slots from its left end to its right end in cyclic
    order, so it may wrap past ``2^N - 1`` back to ``0``.
    """

    y: int
    plateau: tuple[int, ...]
    n_ancilla: int

    def __post_init__(self):
        if self.y not in self.plateau:
            raise ValueError("peak must belong to its plateau")

    @property
    def c_slots(self) -> int:
        return len(self.plateau)

    @property
    def left_offset(self) -> int:
        """Number of plateau slots to the left of ``y``."""
        return self.plateau.index(self.y)


def circuit_stages(prop: Propagator, eigenstate, cfg: QpeConfig) -> list[np.ndarray]:
    """Joint register states after each circuit stage.

    Each state is an array of shape ``(2^N, d)``: row ``n`` is the system-register
    amplitude vector paired with ancilla basis state ``|n>`` (ancilla qubit ``j``
    is bit ``j`` of ``n``). Returned in order: initial, after Hadamards, after
    the controlled evolutions, after the Fourier stage.
    """
    psi = check_state(eigenstate)
    if psi.shape[0] != prop.dim:
        raise DimensionError(f"eigenstate has dimension {psi.shape[0]}, propagator {prop.dim}")
    m = cfg.n_slots
    if m * prop.dim > MAX_DIM:
        raise DimensionError(f"joint register dimension {m * prop.dim} exceeds cap {MAX_DIM}")

    phi1 = np.zeros((m, prop.dim), dtype=complex)
    phi1[0] = psi

    hadamards = np.ones((1, 1), dtype=complex)
    for _ in range(cfg.n_ancilla):
        hadamards = tensor_product(_HADAMARD, hadamards)
    phi2 = hadamards @ phi1

    # controlled-U(2^j * alpha * dt) on ancilla j, each power built from the eigenvalues
    phi3 = phi2.copy()
    rows = np.arange(m)
    for j in range(cfg.n_ancilla):
        u = prop(2**j * cfg.time_span)
        on = (rows >> j) & 1 == 1
        phi3[on] = phi3[on] @ u.T

    n = np.arange(m)
    fourier = np.exp(2j * np.pi * np.outer(n, n) / m) / math.sqrt(m)
    phi4 = fourier @ phi3
    return [phi1, phi2, phi3, phi4]


def simulate_circuit(prop: Propagator, eigenstate, cfg: QpeConfig) -> OutcomeDistribution:
    final = circuit_stages(prop, eigenstate, cfg)[-1]
    probs = np.sum(np.abs(final) ** 2, axis=1)
    return OutcomeDistribution(cfg.n_ancilla, probs)


def phase_distribution(phase: float, n_ancilla: int) -> OutcomeDistribution:
    """Closed-form outcome distribution for eigenphase ``phase`` (in turns)."""
    m = 2**n_ancilla
    x = np.arange(m)
    phase = phase % 1.0
    d = x / m - phase
    dist_to_int = np.abs(d - np.round(d))
    singular = dist_to_int < SINGULAR_TOL
    with np.errstate(divide="ignore", invalid="ignore"):
        p = np.sin(np.pi * (x - m * phase)) ** 2 / (m**2 * np.sin(np.pi * d) ** 2)
    p = np.where(singular, 1.0, p)
    return OutcomeDistribution(n_ancilla, p)


def analytic_distribution(energy: float, cfg: QpeConfig) -> OutcomeDistribution:
    return phase_distribution(cfg.phase(energy), cfg.n_ancilla)


def sample_distribution(dist: OutcomeDistribution, shots: int, seed: int) -> OutcomeDistribution:
    """Empirical frequencies of ``shots`` measurements drawn with a seeded generator."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    rng = np.random.default_rng(seed)
    p = np.clip(dist.probs, 0.0, None)
    counts = rng.multinomial(shots, p / p.sum())
    return OutcomeDistribution(dist.n_ancilla, counts / shots)


def detect_peak_plateau(dist: OutcomeDistribution, beta: float = DEFAULT_BETA) -> PeakReport:
    """Locate the peak and grow it into the cyclic run of slots with ``Pr >= beta * Pr(y)``."""
    if not 0 < beta <= 1:
        raise ValueError(f"beta must be in (0, 1], got {beta}")
    p = dist.probs
    m = len(p)
    y = int(np.argmax(p))
    threshold = beta * p[y]
    left = right = 0
    while left + right + 1 < m and p[(y - left - 1) % m] >= threshold:
        left += 1
    while left + right + 1 < m and p[(y + right + 1) % m] >= threshold:
        right += 1
    plateau = tuple((y + k) % m for k in range(-left, right + 1))
    return PeakReport(y, plateau, dist.n_ancilla)
