"""Command-line experiment runner.

Subcommands:
  distribution   outcome distribution of one QPE run, written as ``x,prob`` CSV
  iterate        iterative refinement, written as a JSON trace
  width-sweep    estimate width per (N, n) on the optimal schedule, as ``N,n,width`` CSV
  hubbard-info   spectrum of the two-site Hubbard model by particle-number sector

Any flag can also come from a ``--config`` file of ``key = value`` lines whose
keys are the flag names without the leading dashes. Flags given on the
command line override the file.

Exit codes: 0 success, 2 invalid configuration, 3 refinement failure,
4 file I/O error.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from iterqpe.model import (
    HubbardParams,
    PauliSum,
    build_hubbard,
    exact_propagator,
    pauli_sum_to_matrix,
    scalar_propagator,
    sector_eigenpairs,
)
from iterqpe.qpe import (
    DEFAULT_BETA,
    QpeConfig,
    analytic_distribution,
    detect_peak_plateau,
    sample_distribution,
    simulate_circuit,
)
from iterqpe.refine import (
    DEFAULT_MAX_ITERATIONS,
    RefinementError,
    error_bound,
    refine_phase,
    run_refinement,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_REFINEMENT = 3
EXIT_IO = 4

HALF_FILLING = 2


class ConfigError(ValueError):
    pass


def read_config(path) -> dict[str, str]:
    """Parse a flat ``key = value`` file; ``#`` starts a comment."""
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        values[key.strip().replace("-", "_")] = value.strip()
    return values


def write_atomic(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(text: str, out) -> None:
    if out:
        write_atomic(out, text)
    else:
        sys.stdout.write(text)


def _int_list(text: str) -> list[int]:
    return [int(part) for part in text.split(",") if part.strip()]


def _add_model_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("model")
    g.add_argument("--model", choices=["hubbard", "pauli", "phase"], default="hubbard")
    g.add_argument("--t", type=float, default=1.0, help="Hubbard transfer integral")
    g.add_argument("--u", type=float, default=1.0, help="Hubbard on-site interaction")
    g.add_argument("--pauli-file", help="Pauli-sum text file (model=pauli)")
    g.add_argument("--phase", type=float, help="synthetic eigenphase in turns (model=phase)")
    g.add_argument(
        "--state-index",
        type=int,
        default=-1,
        help="eigenstate index in ascending energy order, negative counts from the top; "
        "for hubbard the half-filling sector is used (default: highest)",
    )


def _add_qpe_flags(p: argparse.ArgumentParser, sampling: bool = True) -> None:
    g = p.add_argument_group("phase estimation")
    g.add_argument("--n-ancilla", type=int, default=3)
    g.add_argument("--delta-t", type=float, default=1.0)
    g.add_argument(
        "--beta",
        type=float,
        default=None,
        help=f"plateau threshold (default {DEFAULT_BETA}; exact-mode refinement uses 1)",
    )
    if sampling:
        g.add_argument("--mode", choices=["exact", "sampled"], default="exact")
        g.add_argument("--shots", type=int, default=100_000)
        g.add_argument("--seed", type=int, default=0)


def build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    parser = argparse.ArgumentParser(prog="iterqpe", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    commands = {}

    p = sub.add_parser("distribution", help="QPE outcome distribution as CSV")
    _add_model_flags(p)
    _add_qpe_flags(p)
    p.add_argument("--alpha", type=int, default=1, help="time-span multiplier")
    commands["distribution"] = p

    p = sub.add_parser("iterate", help="iterative refinement trace as JSON")
    _add_model_flags(p)
    _add_qpe_flags(p)
    p.add_argument("--eps-max", type=float, default=1e-3)
    p.add_argument("--max-iter", type=int, default=DEFAULT_MAX_ITERATIONS)
    commands["iterate"] = p

    p = sub.add_parser("width-sweep", help="estimate widths over N and iterations as CSV")
    p.add_argument("--n-list", type=_int_list, default=[2, 3, 4])
    p.add_argument("--max-iter", type=int, default=4)
    p.add_argument(
        "--check",
        action="store_true",
        help="also run exact refinement on the model and fail unless widths agree",
    )
    _add_model_flags(p)
    _add_qpe_flags(p, sampling=False)
    commands["width-sweep"] = p

    p = sub.add_parser("hubbard-info", help="print the two-site Hubbard spectrum")
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--u", type=float, default=1.0)
    p.add_argument("--delta-t", type=float, default=1.0)
    commands["hubbard-info"] = p

    for p in commands.values():
        p.add_argument("--out", help="output file (default: standard output)")
        p.add_argument("--config", help="key = value file supplying flag defaults")
    return parser, commands


def parse_args(argv=None) -> argparse.Namespace:
    parser, commands = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        sub = commands[args.command]
        values = read_config(args.config)
        known = {a.dest: a for a in sub._actions}
        defaults = {}
        for key, raw in values.items():
            action = known.get(key)
            if action is None or key in ("config", "help"):
                raise ConfigError(f"unknown key {key!r} for '{args.command}' in {args.config}")
            if action.nargs == 0:
                defaults[key] = raw.lower() in ("1", "true", "yes", "on")
            else:
                try:
                    defaults[key] = action.type(raw) if action.type else raw
                except ValueError as exc:
                    raise ConfigError(f"bad value for {key!r}: {raw!r} ({exc})") from None
                if action.choices and defaults[key] not in action.choices:
                    raise ConfigError(f"{key!r} must be one of {list(action.choices)}")
        sub.set_defaults(**defaults)
        args = parser.parse_args(argv)
    return args


def select_system(args, delta_t: float):
    """Return ``(propagator, eigenstate, energy, label)`` for the configured model."""
    if args.model == "phase":
        if args.phase is None:
            raise ConfigError("model=phase needs --phase")
        energy = 2 * math.pi * args.phase / delta_t
        prop = scalar_propagator(energy)
        return prop, prop.eigenstate(0), energy, f"phase {args.phase!r}"
    if args.model == "pauli":
        if not args.pauli_file:
            raise ConfigError("model=pauli needs --pauli-file")
        h = PauliSum.load(args.pauli_file)
        prop = exact_propagator(h)
        energies, vectors = prop.energies, prop.decomp.eigenvectors
        label = f"{args.pauli_file}"
    else:
        h = build_hubbard(HubbardParams(args.t, args.u))
        prop = exact_propagator(h)
        energies, vectors = sector_eigenpairs(pauli_sum_to_matrix(h), HALF_FILLING)
        label = f"hubbard t={args.t!r} u={args.u!r} half-filling"
    n = len(energies)
    if not -n <= args.state_index < n:
        raise ConfigError(f"state-index {args.state_index} out of range for {n} eigenstates")
    j = args.state_index % n
    return prop, np.array(vectors[:, j]), float(energies[j]), f"{label} state {j}"


def cmd_distribution(args) -> int:
    cfg = QpeConfig(args.n_ancilla, args.delta_t, args.alpha)
    prop, psi, energy, label = select_system(args, args.delta_t)
    dist = simulate_circuit(prop, psi, cfg)
    if args.mode == "sampled":
        dist = sample_distribution(dist, args.shots, args.seed)
    report = detect_peak_plateau(dist, DEFAULT_BETA if args.beta is None else args.beta)
    _emit(dist.to_csv(), args.out)
    stream = sys.stdout if args.out else sys.stderr
    print(f"system: {label}, E = {energy!r}, phase = {cfg.phase(energy) % 1!r}", file=stream)
    print(
        f"peak x = {report.y} (Pr = {dist[report.y]:.6f}), "
        f"plateau = {list(report.plateau)}, C = {report.c_slots}",
        file=stream,
    )
    return EXIT_OK


def cmd_iterate(args) -> int:
    cfg = QpeConfig(args.n_ancilla, args.delta_t)
    prop, psi, energy, label = select_system(args, args.delta_t)
    stream = sys.stdout if args.out else sys.stderr
    try:
        trace = run_refinement(
            prop,
            psi,
            cfg,
            args.eps_max,
            mode=args.mode,
            shots=args.shots,
            seed=args.seed,
            beta=args.beta,
            max_iterations=args.max_iter,
        )
    except RefinementError as exc:
        if exc.trace is not None and exc.trace.iterations:
            _emit(exc.trace.to_json(), args.out)
        print(f"refinement failed: {exc}", file=sys.stderr)
        return EXIT_REFINEMENT
    _emit(trace.to_json(), args.out)
    print(f"system: {label}, E = {energy!r}", file=stream)
    for r in trace.iterations:
        print(f"n={r.n} alpha={r.alpha} y={r.y} C={r.c_slots} epsilon={r.epsilon:.6g}", file=stream)
    print(
        f"energy in [{trace.final_energy_low!r}, {trace.final_energy_high!r}]",
        file=stream,
    )
    return EXIT_OK


def cmd_width_sweep(args) -> int:
    rows = ["N,n,width\n"]
    for n_anc in args.n_list:
        if n_anc < 2:
            raise ConfigError("width sweep needs N >= 2; one ancilla cannot be refined")
        for n in range(args.max_iter + 1):
            rows.append(f"{n_anc},{n},{format(error_bound(1, n_anc, n), '.17g')}\n")
        if args.check:
            cfg = QpeConfig(n_anc, args.delta_t)
            _, _, energy, _ = select_system(args, args.delta_t)
            eps = error_bound(1, n_anc, args.max_iter)
            try:
                trace = refine_phase(
                    lambda a: analytic_distribution(energy, cfg.with_alpha(a)),
                    cfg,
                    eps,
                    beta=args.beta,
                    max_iterations=args.max_iter,
                )
            except RefinementError as exc:
                print(f"N={n_anc}: refinement failed: {exc}", file=sys.stderr)
                return EXIT_REFINEMENT
            measured = [r.epsilon for r in trace.iterations]
            expected = [error_bound(1, n_anc, n) for n in range(args.max_iter + 1)]
            if measured != expected:
                print(f"N={n_anc}: measured widths {measured} != {expected}", file=sys.stderr)
                return EXIT_REFINEMENT
    _emit("".join(rows), args.out)
    return EXIT_OK


def cmd_hubbard_info(args) -> int:
    h = build_hubbard(HubbardParams(args.t, args.u))
    m = pauli_sum_to_matrix(h)
    lines = ["n_particles,index,energy\n"]
    report = [f"two-site Hubbard t={args.t!r} u={args.u!r}, {len(h.terms)} Pauli terms"]
    for n_particles in range(5):
        energies, _ = sector_eigenpairs(m, n_particles)
        for j, e in enumerate(energies):
            lines.append(f"{n_particles},{j},{format(float(e), '.17g')}\n")
        report.append(f"  N={n_particles}: " + ", ".join(f"{e:.6f}" for e in energies))
    top = float(sector_eigenpairs(m, HALF_FILLING)[0][-1])
    phase = top * args.delta_t / (2 * math.pi)
    report.append(f"highest half-filling energy {top!r}; phase at dt={args.delta_t!r}: {phase!r}")
    if args.out:
        write_atomic(args.out, "".join(lines))
    print("\n".join(report))
    return EXIT_OK


COMMANDS = {
    "distribution": cmd_distribution,
    "iterate": cmd_iterate,
    "width-sweep": cmd_width_sweep,
    "hubbard-info": cmd_hubbard_info,
}


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
        return COMMANDS[args.command](args)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
