"""Exit criteria. Each test records one PASS/FAIL line, printed in the pytest summary.

Run alone with ``pytest tests/test_acceptance.py`` or ``python tests/test_acceptance.py``.
"""

import math
import time
from fractions import Fraction

import numpy as np
import pytest

from iterqpe.model import (
    HubbardParams,
    Propagator,
    build_hubbard,
    exact_propagator,
    pauli_sum_to_matrix,
    sector_eigenpairs,
    trotter_propagator,
)
from iterqpe.numkernel import hermitian_eigendecompose, max_abs
from iterqpe.qpe import (
    QpeConfig,
    analytic_distribution,
    detect_peak_plateau,
    phase_distribution,
    simulate_circuit,
)
from iterqpe.refine import AmbiguousOverlap, CombFamily, error_bound, intersect, refine_phase, run_refinement

from conftest import random_hermitian
from test_model import hubbard_oracle

RESULTS: list[str] = []
SEED = 1234


def record(number, title, ok, detail, elapsed=None, budget=None):
    timing = ""
    if elapsed is not None:
        timing = f" [{elapsed:.2f}s / <{budget}s]" if budget else f" [{elapsed:.2f}s]"
    within = budget is None or elapsed < budget
    status = "PASS" if ok and within else "FAIL"
    RESULTS.append(f"AC{number} {status}: {title} -- {detail}{timing}")
    assert ok, detail
    assert within, f"took {elapsed:.2f}s, budget {budget}s"


def oracle_top_energy():
    """Highest half-filling eigenvalue from the second-quantized oracle matrix."""
    h = hubbard_oracle(1.0, 1.0)
    basis = [b for b in range(16) if bin(b).count("1") == 2]
    return float(np.linalg.eigvalsh(h[np.ix_(basis, basis)])[-1])


@pytest.fixture(scope="module")
def top_state():
    h = build_hubbard(HubbardParams(1.0, 1.0))
    energies, vectors = sector_eigenpairs(pauli_sum_to_matrix(h), 2)
    return exact_propagator(h), float(energies[-1]), vectors[:, -1]


def test_ac1_exact_integer_phase():
    start = time.perf_counter()
    worst = 0.0
    for n_anc in range(1, 7):
        m = 2**n_anc
        for y in range(m):
            for dist in (
                phase_distribution(y / m, n_anc),
                analytic_distribution(2 * math.pi * y / m, QpeConfig(n_anc, 1.0)),
            ):
                expected = np.zeros(m)
                expected[y] = 1.0
                worst = max(worst, float(np.max(np.abs(dist.probs - expected))))
    elapsed = time.perf_counter() - start
    record(1, "Pr(y)=1 at phase y/2^N, N=1..6", worst <= 1e-12, f"max deviation {worst:.2e} (tol 1e-12)", elapsed, 1)


def test_ac2_circuit_matches_formula():
    rng = np.random.default_rng(SEED)
    start = time.perf_counter()
    worst = 0.0
    for n_anc in (2, 3, 4):
        for _ in range(100):
            decomp = hermitian_eigendecompose(random_hermitian(rng, 4) * rng.uniform(0.5, 5))
            prop = Propagator(decomp, 2)
            j = int(rng.integers(4))
            cfg = QpeConfig(n_anc, float(rng.uniform(0.1, 1.5)))
            circuit = simulate_circuit(prop, decomp.eigenvector(j), cfg)
            formula = analytic_distribution(float(decomp.eigenvalues[j]), cfg)
            worst = max(worst, float(np.max(np.abs(circuit.probs - formula.probs))))
    elapsed = time.perf_counter() - start
    record(2, "circuit vs closed form, N=2,3,4 x 100 energies", worst <= 1e-10, f"max deviation {worst:.2e} (tol 1e-10)", elapsed, 30)


def test_ac3_peak_probability_bound():
    rng = np.random.default_rng(SEED)
    start = time.perf_counter()
    lowest = 1.0
    for phase in rng.uniform(0, 1, size=1000):
        for n_anc in (1, 2, 3, 4, 5, 6):
            dist = phase_distribution(phase, n_anc)
            lowest = min(lowest, float(dist[dist.argmax()]))
    elapsed = time.perf_counter() - start
    bound = 4 / math.pi**2 - 1e-12
    record(3, "Pr(y) >= 4/pi^2 over 1000 phases", lowest >= bound, f"min Pr(y) {lowest:.6f} vs {bound:.6f}", elapsed, 5)


def test_ac4_hubbard_spectrum_anchor(top_state):
    _, energy, _ = top_state
    exact = (1 + math.sqrt(17)) / 2
    oracle = oracle_top_energy()
    ok = abs(energy - exact) <= 1e-9 and abs(oracle - exact) <= 1e-9 and round(energy, 2) == 2.56
    record(4, "Hubbard(1,1) highest half-filling energy", ok, f"E_h {energy!r}, oracle {oracle!r}, (1+sqrt17)/2 {exact!r}")


def test_ac5_fig3c_peak(top_state):
    prop, _, psi = top_state
    start = time.perf_counter()
    dist = simulate_circuit(prop, psi, QpeConfig(4, 1.0))
    order = [int(x) for x in np.argsort(dist.probs)[::-1][:2]]
    plateau = set(detect_peak_plateau(dist, 0.8).plateau)
    elapsed = time.perf_counter() - start
    ok = order == [7, 6] and plateau == {6, 7}
    detail = f"top two {order}, Pr(7)={dist[7]:.4f}, Pr(6)={dist[6]:.4f}, plateau {sorted(plateau)}"
    record(5, "N=4 peak 7, runner-up 6, plateau {6,7}", ok, detail, elapsed, 1)


def test_ac6_width_law(top_state):
    prop, _, psi = top_state
    true_phase = oracle_top_energy() / (2 * math.pi)
    start = time.perf_counter()
    problems = []
    for n_anc in (2, 3, 4):
        trace = run_refinement(prop, psi, QpeConfig(n_anc, 1.0), eps_max=error_bound(1, n_anc, 4))
        if len(trace.iterations) != 5:
            problems.append(f"N={n_anc}: {len(trace.iterations)} iterations")
        for r in trace.iterations:
            if r.interval.width != Fraction(1, 2**n_anc * (2**n_anc - 1) ** r.n):
                problems.append(f"N={n_anc} n={r.n}: width {r.interval.width}")
            if r.epsilon != error_bound(1, n_anc, r.n):
                problems.append(f"N={n_anc} n={r.n}: epsilon {r.epsilon}")
            if not r.interval.contains(true_phase):
                problems.append(f"N={n_anc} n={r.n}: misses phase")
    elapsed = time.perf_counter() - start
    record(6, "widths 1/(2^N(2^N-1)^n), N=2,3,4, n<=4, contain phase", not problems, "; ".join(problems) or "15 trace rows exact", elapsed, 5)


def test_ac7_comb_uniqueness():
    rng = np.random.default_rng(SEED)
    start = time.perf_counter()
    ambiguous = 0
    for phase in rng.uniform(0, 1, size=1000):
        for n_anc in (2, 3, 4):
            source = lambda a, p=phase, n=n_anc: phase_distribution(a * p, n)
            try:
                refine_phase(source, QpeConfig(n_anc), eps_max=error_bound(1, n_anc, 3))
            except AmbiguousOverlap:
                ambiguous += 1
    violated = {}
    for n_anc in (2, 3, 4):
        m = 2**n_anc
        for phase in np.linspace(0, 1, 4001)[:-1]:
            first = CombFamily(y=phase_distribution(phase, n_anc).argmax(), alpha=1, n_ancilla=n_anc).stripe(0)
            y = phase_distribution(m * phase, n_anc).argmax()
            try:
                intersect(first, CombFamily(y=y, alpha=m, n_ancilla=n_anc))
            except AmbiguousOverlap:
                violated[n_anc] = float(phase)
                break
    elapsed = time.perf_counter() - start
    ok = ambiguous == 0 and set(violated) == {2, 3, 4}
    detail = f"{ambiguous} ambiguous of 3000 on schedule; alpha=2^N ambiguous at {violated}"
    record(7, "unique stripe on optimal schedule, ambiguity at alpha=2^N", ok, detail, elapsed, 10)


def test_ac8_trotter_convergence():
    h = build_hubbard(HubbardParams(1.0, 1.0))
    start = time.perf_counter()
    exact = exact_propagator(h)(0.5)
    errors = [max_abs(trotter_propagator(h, 0.5, s) - exact) for s in (1, 2, 4, 8, 16)]
    ratios = [a / b for a, b in zip(errors, errors[1:])]
    elapsed = time.perf_counter() - start
    ok = all(b < a for a, b in zip(errors, errors[1:])) and all(1.6 <= r <= 2.4 for r in ratios)
    detail = "errors " + ", ".join(f"{e:.3e}" for e in errors) + "; ratios " + ", ".join(f"{r:.3f}" for r in ratios)
    record(8, "first-order Trotter convergence, tau=0.5", ok, detail, elapsed, 5)


def test_ac9_sampled_end_to_end(top_state):
    prop, energy, psi = top_state
    start = time.perf_counter()
    trace = run_refinement(
        prop, psi, QpeConfig(3, 1.0), eps_max=error_bound(1, 3, 3), mode="sampled", shots=10**5, seed=SEED
    )
    elapsed = time.perf_counter() - start
    phase = energy / (2 * math.pi)
    ok = len(trace.iterations) == 4 and trace.final_interval.contains(phase)
    lo, hi = trace.final_interval.bounds()
    detail = f"{len(trace.iterations) - 1} refinement iterations, final [{lo:.6f}, {hi:.6f}] vs phase {phase:.6f}"
    record(9, "sampled mode, N=3, 1e5 shots, 3 iterations", ok, detail, elapsed)


if __name__ == "__main__":
    import sys

    code = pytest.main([__file__, "-q"])
    sys.exit(code)
