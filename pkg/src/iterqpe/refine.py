"""Iterative refinement of an eigenphase by intersecting stripe combs.

A QPE run at time span ``alpha * dt`` with integer ``alpha`` pins ``alpha * phi``
to one slot mod 1, which pins ``phi`` itself to a comb of ``alpha`` narrow
stripes spaced ``1/alpha`` apart. Intersecting the comb with the previous
estimate keeps a single stripe as long as the comb's gaps are at least as wide
as that estimate, which gives the ``(2^N - 1)^n`` schedule.

All interval bookkeeping uses :class:`fractions.Fraction`: stripe endpoints are
rationals in ``y``, ``alpha`` and ``2^N``, so intersections and widths are exact.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from iterqpe.model import Propagator
from iterqpe.qpe import (
    DEFAULT_BETA,
    OutcomeDistribution,
    PeakReport,
    QpeConfig,
    detect_peak_plateau,
    sample_distribution,
    simulate_circuit,
)

# alpha * dt must stay exactly representable as a float
MAX_ALPHA = 2**53
DEFAULT_MAX_ITERATIONS = 12
SAMPLED_RETRIES = 3
TRACE_SCHEMA = 1


class RefinementError(RuntimeError):
    """Refinement could not continue. ``trace`` holds the iterations completed so far."""

    def __init__(self, message: str, trace: RefinementTrace | None = None):
        super().__init__(message)
        self.trace = trace


class NoOverlap(RefinementError):
    """No stripe of the comb meets the previous estimate."""


class AmbiguousOverlap(RefinementError):
    """More than one stripe of the comb meets the previous estimate."""


class IterationCapExceeded(RefinementError):
    pass


def _frac(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


@dataclass(frozen=True)
class PhaseInterval:
    """Arc ``{center + d mod 1 : |d| <= half_width}`` of the unit phase circle."""

    center: Fraction
    half_width: Fraction

    def __post_init__(self):
        c = _frac(self.center) % 1
        h = _frac(self.half_width)
        if not 0 < h <= Fraction(1, 2):
            raise ValueError(f"half_width must be in (0, 1/2], got {h}")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "half_width", h)

    @classmethod
    def from_bounds(cls, lo, hi) -> PhaseInterval:
        lo, hi = _frac(lo), _frac(hi)
        return cls((lo + hi) / 2, (hi - lo) / 2)

    @property
    def width(self) -> Fraction:
        return 2 * self.half_width

    @property
    def lo(self) -> Fraction:
        """Left end, unwrapped around the center (may be negative)."""
        return self.center - self.half_width

    @property
    def hi(self) -> Fraction:
        return self.center + self.half_width

    @property
    def is_full_circle(self) -> bool:
        return self.half_width == Fraction(1, 2)

    def contains(self, phase) -> bool:
        d = (_frac(phase) - self.center) % 1
        return min(d, 1 - d) <= self.half_width

    def contains_interval(self, other: PhaseInterval) -> bool:
        if self.is_full_circle:
            return True
        shift = round(self.center - other.center)
        return self.lo <= other.lo + shift and other.hi + shift <= self.hi

    def bounds(self) -> tuple[float, float]:
        """``(lo, hi)`` as floats with ``lo`` in ``[0, 1)`` and ``hi = lo + width``."""
        lo = self.lo % 1
        return float(lo), float(lo + self.width)


@dataclass(frozen=True)
class CombFamily:
    """Stripes consistent with outcome(s) ``lo_slot .. lo_slot + c_slots - 1`` at span ``alpha``.

    Stripe ``k`` is ``[(lo_slot - 1/2)/(2^N alpha) + k/alpha,
    (lo_slot + c_slots - 1/2)/(2^N alpha) + k/alpha]`` for ``k = 0 .. alpha - 1``.
    """

    y: int
    alpha: int
    n_ancilla: int
    lo_slot: int | None = None
    c_slots: int = 1

    def __post_init__(self):
        if isinstance(self.alpha, bool) or int(self.alpha) != self.alpha or self.alpha < 1:
            raise ValueError(f"alpha must be a positive integer, got {self.alpha!r}")
        object.__setattr__(self, "alpha", int(self.alpha))
        if self.lo_slot is None:
            object.__setattr__(self, "lo_slot", self.y)
        if not 1 <= self.c_slots <= 2**self.n_ancilla:
            raise ValueError(f"c_slots must be in [1, 2^N], got {self.c_slots}")

    @property
    def n_slots(self) -> int:
        return 2**self.n_ancilla

    @property
    def stripe_width(self) -> Fraction:
        return Fraction(self.c_slots, self.n_slots * self.alpha)

    @property
    def gap(self) -> Fraction:
        return Fraction(1, self.alpha) - self.stripe_width

    def _offsets(self) -> tuple[Fraction, Fraction]:
        scale = self.n_slots * self.alpha
        a = (Fraction(self.lo_slot) - Fraction(1, 2)) / scale
        return a, a + self.stripe_width

    def stripe(self, k: int) -> PhaseInterval:
        a, b = self._offsets()
        shift = Fraction(k, self.alpha)
        return PhaseInterval.from_bounds(a + shift, b + shift)

    def stripes(self) -> list[PhaseInterval]:
        return [self.stripe(k) for k in range(self.alpha)]


def optimal_alpha(n: int, n_ancilla: int) -> int:
    """Time-span multiplier ``(2^N - 1)^n`` for iteration ``n``."""
    if n < 0:
        raise ValueError("iteration index must be non-negative")
    alpha = (2**n_ancilla - 1) ** n
    if alpha > MAX_ALPHA:
        raise OverflowError(f"alpha = (2^{n_ancilla} - 1)^{n} exceeds {MAX_ALPHA}")
    return alpha


def error_bound(c_slots: int, n_ancilla: int, n: int) -> float:
    """Additive phase error ``C / (2^N (2^N - 1)^n)``."""
    if c_slots < 1 or n_ancilla < 1 or n < 0:
        raise ValueError("c_slots and n_ancilla must be positive, n non-negative")
    return c_slots / (2**n_ancilla * (2**n_ancilla - 1) ** n)


def next_alpha(width, c_slots: int, n_ancilla: int) -> int:
    """Largest integer span whose comb gaps, for stripes of ``c_slots`` slots, are >= ``width``."""
    m = 2**n_ancilla
    return math.floor(Fraction(m - c_slots, m) / _frac(width))


def comb_from_outcome(report: PeakReport, alpha: int, n_ancilla: int) -> CombFamily:
    return CombFamily(
        y=report.y,
        alpha=alpha,
        n_ancilla=n_ancilla,
        lo_slot=report.y - report.left_offset,
        c_slots=report.c_slots,
    )


def intersect(prev: PhaseInterval, comb: CombFamily) -> PhaseInterval:
    """Cut ``prev`` down to the single comb stripe that overlaps it.

    Overlaps of zero length (stripes touching ``prev`` at an endpoint) do not
    count. Raises :class:`NoOverlap` or :class:`AmbiguousOverlap` when zero or
    several stripes overlap.
    """
    if prev.is_full_circle:
        raise ValueError("previous estimate must be a proper arc, not the full circle")
    a, b = comb._offsets()
    p, q = prev.lo, prev.hi
    alpha = comb.alpha
    # stripe k overlaps (p, q) iff a + k/alpha < q and b + k/alpha > p
    k_min = math.floor(alpha * (p - b)) + 1
    k_max = math.ceil(alpha * (q - a)) - 1
    pieces = []
    for k in range(k_min, k_max + 1):
        shift = Fraction(k, alpha)
        lo, hi = max(p, a + shift), min(q, b + shift)
        if hi > lo:
            pieces.append((lo, hi))
    if not pieces:
        raise NoOverlap(f"no stripe of the alpha={alpha} comb overlaps [{float(p)}, {float(q)}]")
    if len(pieces) > 1:
        raise AmbiguousOverlap(
            f"{len(pieces)} stripes of the alpha={alpha} comb overlap [{float(p)}, {float(q)}]"
        )
    return PhaseInterval.from_bounds(*pieces[0])


def phase_to_energy(interval: PhaseInterval, delta_t: float) -> tuple[float, float]:
    """Energy window ``2 pi [lo, hi] / dt`` (hbar = 1), unwrapped around the center."""
    if not delta_t > 0:
        raise ValueError("delta_t must be positive")
    scale = 2 * math.pi / delta_t
    return scale * float(interval.lo), scale * float(interval.hi)


@dataclass(frozen=True)
class RefinementRecord:
    n: int
    alpha: int
    y: int
    c_slots: int
    interval: PhaseInterval
    epsilon: float

    def to_dict(self) -> dict:
        lo, hi = self.interval.bounds()
        return {
            "n": self.n,
            "alpha": self.alpha,
            "y": self.y,
            "c_slots": self.c_slots,
            "interval_lo": lo,
            "interval_hi": hi,
            "epsilon": self.epsilon,
        }

    @classmethod
    def from_dict(cls, d: dict) -> RefinementRecord:
        return cls(
            n=int(d["n"]),
            alpha=int(d["alpha"]),
            y=int(d["y"]),
            c_slots=int(d["c_slots"]),
            interval=PhaseInterval.from_bounds(d["interval_lo"], d["interval_hi"]),
            epsilon=float(d["epsilon"]),
        )


@dataclass(frozen=True)
class RefinementTrace:
    n_ancilla: int
    delta_t: float
    iterations: tuple[RefinementRecord, ...] = field(default_factory=tuple)

    @property
    def final(self) -> RefinementRecord:
        return self.iterations[-1]

    @property
    def final_interval(self) -> PhaseInterval:
        return self.final.interval

    @property
    def final_energy_low(self) -> float:
        return phase_to_energy(self.final_interval, self.delta_t)[0]

    @property
    def final_energy_high(self) -> float:
        return phase_to_energy(self.final_interval, self.delta_t)[1]

    def to_dict(self) -> dict:
        d = {
            "schema": TRACE_SCHEMA,
            "n_ancilla": self.n_ancilla,
            "delta_t": self.delta_t,
            "iterations": [r.to_dict() for r in self.iterations],
        }
        if self.iterations:
            d["final_energy_low"] = self.final_energy_low
            d["final_energy_high"] = self.final_energy_high
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> RefinementTrace:
        if d.get("schema") != TRACE_SCHEMA:
            raise ValueError(f"unsupported trace schema {d.get('schema')!r}")
        return cls(
            n_ancilla=int(d["n_ancilla"]),
            delta_t=float(d["delta_t"]),
            iterations=tuple(RefinementRecord.from_dict(r) for r in d["iterations"]),
        )

    @classmethod
    def from_json(cls, text: str) -> RefinementTrace:
        return cls.from_dict(json.loads(text))


def refine_phase(
    distribution: Callable[[int], OutcomeDistribution],
    cfg: QpeConfig,
    eps_max: float,
    mode: str = "exact",
    shots: int | None = None,
    seed: int | None = None,
    beta: float | None = None,
    max_iterations: int = DEFAULT_MAX_ITERATIONS,
) -> RefinementTrace:
    """Run the refinement loop on any source of outcome distributions.

    ``distribution(alpha)`` must return the noiseless outcome distribution at
    time span ``alpha * cfg.delta_t``. In ``"sampled"`` mode it is replaced by
    the frequencies of ``shots`` seeded measurements, and an iteration whose
    comb misses the previous estimate is re-measured up to
    ``SAMPLED_RETRIES`` times before giving up.

    ``beta`` is the plateau threshold. By default exact mode keeps only the
    nearest-integer peak (``beta = 1``) and sampled mode uses ``DEFAULT_BETA``.
    """
    if mode not in ("exact", "sampled"):
        raise ValueError(f"mode must be 'exact' or 'sampled', got {mode!r}")
    if mode == "sampled" and (shots is None or shots < 1):
        raise ValueError("sampled mode needs shots >= 1")
    if not eps_max > 0:
        raise ValueError("eps_max must be positive")
    if beta is None:
        beta = 1.0 if mode == "exact" else DEFAULT_BETA
    n_anc = cfg.n_ancilla
    rng = np.random.default_rng(seed)
    records: list[RefinementRecord] = []

    def trace() -> RefinementTrace:
        return RefinementTrace(n_anc, cfg.delta_t, tuple(records))

    alpha = 1
    prev: PhaseInterval | None = None
    n = 0
    while True:
        retries = SAMPLED_RETRIES if mode == "sampled" else 0
        for attempt in range(retries + 1):
            dist = distribution(alpha)
            if mode == "sampled":
                dist = sample_distribution(dist, shots, int(rng.integers(2**63)))
            report = detect_peak_plateau(dist, beta)
            comb = comb_from_outcome(report, alpha, n_anc)
            try:
                interval = comb.stripe(0) if prev is None else intersect(prev, comb)
                break
            except NoOverlap as exc:
                if attempt == retries:
                    raise NoOverlap(str(exc), trace()) from None
            except AmbiguousOverlap as exc:
                raise AmbiguousOverlap(str(exc), trace()) from None

        epsilon = float(interval.width)
        records.append(RefinementRecord(n, alpha, report.y, report.c_slots, interval, epsilon))
        if epsilon <= eps_max:
            return trace()
        if n >= max_iterations:
            raise IterationCapExceeded(
                f"error {epsilon:.3e} still above {eps_max:.3e} after {max_iterations} iterations",
                trace(),
            )
        if interval.is_full_circle:
            raise AmbiguousOverlap("plateau covers every slot; the phase is undetermined", trace())
        new_alpha = next_alpha(interval.width, report.c_slots, n_anc)
        if new_alpha <= alpha:
            raise RefinementError(
                f"cannot lengthen the time span beyond alpha={alpha} "
                f"with {report.c_slots} plateau slot(s) on {n_anc} ancilla qubit(s)",
                trace(),
            )
        if new_alpha > MAX_ALPHA:
            raise RefinementError(f"alpha {new_alpha} exceeds {MAX_ALPHA}", trace())
        alpha = new_alpha
        prev = interval
        n += 1


def run_refinement(
    prop: Propagator,
    eigenstate,
    cfg: QpeConfig,
    eps_max: float,
    mode: str = "exact",
    shots: int | None = None,
    seed: int | None = None,
    beta: float | None = None,
    max_iterations: int = DEFAULT_MAX_ITERATIONS,
) -> RefinementTrace:
    """Iterative QPE on ``prop`` with ``eigenstate`` in the system register.

    Every iteration simulates the full circuit at the current span
    ``alpha * cfg.delta_t``; ``cfg.alpha`` itself is ignored.
    """

    def distribution(alpha: int) -> OutcomeDistribution:
        return simulate_circuit(prop, eigenstate, cfg.with_alpha(alpha))

    return refine_phase(distribution, cfg, eps_max, mode, shots, seed, beta, max_iterations)
