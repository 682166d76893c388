"""Command-line interface: check, synth, verify, bench, and demo.

Exit codes are a stable contract: 0 success, 2 malformed input, 3 the
problem is not exactly mappable, 4 the template search was exhausted.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from pathlib import Path

import numpy as np

from .apps import (
    BlockSpec,
    cat_state_circuit,
    cat_state_target,
    heisenberg_block_system,
    heisenberg_hamiltonian,
)
from .circuit import Circuit, ConnectivityGraph, GateKind, apply
from .instantiate import InstantiateConfig
from .parallel import ordered_map
from .problem import ProblemFormatError, load_problem
from .qasm import QasmError, emit_qasm, parse_qasm
from .states import (
    DEFAULT_SOLVABILITY_TOL,
    StateSystem,
    StateVector,
    UnsolvableSystemError,
    check_solvable,
    haar_unitary,
    restrict_unitary,
)
from .synth import SynthConfig, SynthesisResult, synthesize

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_INPUT = 2
EXIT_UNSOLVABLE = 3
EXIT_EXHAUSTED = 4

_GATE_NAMES = {
    GateKind.RX: "RXGate",
    GateKind.RY: "RYGate",
    GateKind.RZ: "RZGate",
    GateKind.U3: "U3Gate",
    GateKind.CNOT: "CNOTGate",
}


def aligned_distances(targets: list[StateVector], sims: list[StateVector]) -> list[float]:
    """Norm distances after one global phase fixed on the first pair.

    A valid solution maps every pair with a single shared phase, so the
    phase that best aligns the first simulated output is applied globally
    rather than per pair.
    """
    overlap = np.vdot(targets[0].amps, sims[0].amps)
    phase = overlap / abs(overlap) if abs(overlap) > 1e-12 else 1.0
    return [
        float(np.linalg.norm(sim.amps - phase * tgt.amps))
        for tgt, sim in zip(targets, sims)
    ]


def _simulate_pairs(c: Circuit, params: np.ndarray, sys: StateSystem) -> list[float]:
    sims = [apply(c, params, vin) for vin in sys.inputs]
    return aligned_distances(sys.outputs, sims)


def _parse_coupling(spec: str, n: int) -> ConnectivityGraph:
    pairs = []
    for chunk in spec.split(","):
        a, _, b = chunk.partition("-")
        try:
            pairs.append((int(a), int(b)))
        except ValueError:
            raise ProblemFormatError(f"bad coupling edge {chunk!r}; expected 'a-b'") from None
    return ConnectivityGraph.from_pairs(n, pairs)


def _gate_count_record(c: Circuit) -> dict[str, int]:
    return {_GATE_NAMES[kind]: count for kind, count in sorted(c.gate_counts().items(), key=lambda kv: kv[0].name)}


def _cmd_check(args) -> int:
    system, _ = load_problem(args.problem)
    report = check_solvable(system, args.tol)
    print(f"n = {system.n}, m = {system.m}")
    print(f"gram mismatch: {report.max_abs_mismatch:.12e} (tolerance {report.tolerance_used:.3e})")
    print(f"verdict: {'solvable' if report.solvable else 'unsolvable'}")
    return EXIT_OK if report.solvable else EXIT_UNSOLVABLE


def _cmd_synth(args) -> int:
    system, file_coupling = load_problem(args.problem)
    coupling = file_coupling
    if args.coupling:
        coupling = _parse_coupling(args.coupling, system.n)
    cfg = SynthConfig(
        instantiate=InstantiateConfig(success_threshold=args.threshold, seed=args.seed),
        max_two_qubit_gates=args.max_cnots,
        coupling=coupling,
        timeout_seconds=args.timeout,
    )
    result = synthesize(system, cfg, solvability_tol=args.tol)

    qasm_path = Path(args.qasm_out) if args.qasm_out else Path(args.problem).with_suffix(".qasm")
    qasm_path.write_text(emit_qasm(result.circuit, result.params))
    distances = _simulate_pairs(result.circuit, result.params, system)
    record = {
        "n": system.n,
        "m": system.m,
        "converged": result.converged,
        "gate_counts": _gate_count_record(result.circuit),
        "cnot_count": result.cnot_count,
        "final_cost": result.final_cost,
        "distances": distances,
        "elapsed_seconds": result.elapsed_seconds,
        "nodes_explored": result.nodes_explored,
        "qasm_file": str(qasm_path),
    }
    text = json.dumps(record, indent=2)
    if args.result_out:
        Path(args.result_out).write_text(text + "\n")
    else:
        print(text)
    return EXIT_OK if result.converged else EXIT_EXHAUSTED


def _cmd_verify(args) -> int:
    system, _ = load_problem(args.problem)
    circuit, params = parse_qasm(Path(args.qasm).read_text())
    if circuit.n != system.n:
        print(f"error: circuit has {circuit.n} qubits but problem has {system.n}", file=sys.stderr)
        return EXIT_INPUT
    distances = _simulate_pairs(circuit, params, system)
    for i, d in enumerate(distances):
        print(f"pair {i}: distance {d:.12e}")
    worst = max(distances)
    print(f"max distance: {worst:.12e} (tolerance {args.tol:.3e})")
    return EXIT_OK if worst <= args.tol else EXIT_FAIL


def _bench_shot(n: int, shot_seed: int, threshold: float) -> list[dict]:
    u = haar_unitary(2**n, seed=shot_seed)
    rows = []
    for m in range(1, 2**n + 1):
        system = restrict_unitary(u, range(m))
        cfg = SynthConfig(
            instantiate=InstantiateConfig(success_threshold=threshold, seed=shot_seed)
        )
        start = time.perf_counter()
        result = synthesize(system, cfg)
        elapsed = time.perf_counter() - start
        rows.append(
            {
                "n": n,
                "m": m,
                "seed": shot_seed,
                "cnot_count": result.cnot_count,
                "final_cost": result.final_cost,
                "elapsed_seconds": elapsed,
                "converged": result.converged,
            }
        )
    return rows


BENCH_COLUMNS = ["n", "m", "seed", "cnot_count", "final_cost", "elapsed_seconds", "converged"]


def bench_rows(n: int, shots: int, seed: int, threshold: float = 1e-8) -> list[dict]:
    """One synthesis row per (shot seed, m) cell, sorted by (seed, m)."""
    shot_seeds = [seed + s for s in range(shots)]
    per_shot = ordered_map(lambda s: _bench_shot(n, s, threshold), shot_seeds)
    rows = [row for shot in per_shot for row in shot]
    rows.sort(key=lambda r: (r["seed"], r["m"]))
    return rows


def format_bench_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(BENCH_COLUMNS)
    for row in rows:
        writer.writerow(
            [
                row["n"],
                row["m"],
                row["seed"],
                row["cnot_count"],
                f"{row['final_cost']:.17g}",
                f"{row['elapsed_seconds']:.6f}",
                int(row["converged"]),
            ]
        )
    return buf.getvalue()


def _cmd_bench(args) -> int:
    if args.n not in (2, 3, 4):
        print(f"error: bench supports n in {{2, 3, 4}}, got {args.n}", file=sys.stderr)
        return EXIT_INPUT
    rows = bench_rows(args.n, args.shots, args.seed, args.threshold)
    text = format_bench_csv(rows)
    if args.csv_out:
        Path(args.csv_out).write_text(text)
        print(f"wrote {len(rows)} rows to {args.csv_out}")
    else:
        print(text, end="")
    return EXIT_OK


def _singlet_blocks(count: int) -> list[BlockSpec]:
    phi1 = StateVector.basis(2, 0)
    phi2 = StateVector(np.array([0, 1, -1, 0]) / np.sqrt(2))
    return [BlockSpec(2, phi1, phi2) for _ in range(count)]


def _blocks_from_file(path: str) -> list[BlockSpec]:
    doc = json.loads(Path(path).read_text())
    if not isinstance(doc, list) or not doc:
        raise ProblemFormatError("blocks file: expected a nonempty JSON list")
    blocks = []
    for i, item in enumerate(doc):
        if not isinstance(item, dict) or "phi1" not in item or "phi2" not in item:
            raise ProblemFormatError(f"blocks[{i}]: expected an object with 'phi1' and 'phi2'")
        try:
            phi1 = StateVector(np.array([complex(re, im) for re, im in item["phi1"]]))
            phi2 = StateVector(np.array([complex(re, im) for re, im in item["phi2"]]))
            blocks.append(BlockSpec(phi1.n, phi1, phi2))
        except (TypeError, ValueError) as exc:
            raise ProblemFormatError(f"blocks[{i}]: {exc}") from exc
    return blocks


def _cmd_demo_cat(args) -> int:
    if args.blocks_file:
        blocks = _blocks_from_file(args.blocks_file)
    elif args.preset == "singlet":
        blocks = _singlet_blocks(args.blocks)
    else:
        print(f"error: unknown preset {args.preset!r}", file=sys.stderr)
        return EXIT_INPUT
    cfg = SynthConfig(instantiate=InstantiateConfig(seed=args.seed))
    circuit, params = cat_state_circuit(blocks, cfg)
    target = cat_state_target(blocks)
    produced = apply(circuit, params, StateVector.basis(circuit.n, 0))
    fidelity = abs(np.vdot(target.amps, produced.amps)) ** 2
    print(f"n = {circuit.n}, blocks = {len(blocks)}, cnots = {circuit.cnot_count}")
    print(f"fidelity vs analytic target: {fidelity:.12f}")
    if args.qasm_out:
        Path(args.qasm_out).write_text(emit_qasm(circuit, params))
        print(f"wrote {args.qasm_out}")
    return EXIT_OK if fidelity >= 1 - 1e-5 else EXIT_FAIL


def _cmd_demo_heisenberg(args) -> int:
    from scipy.linalg import expm

    system = heisenberg_block_system(args.t)
    cfg = SynthConfig(instantiate=InstantiateConfig(seed=args.seed))
    result = synthesize(system, cfg)
    if not result.converged:
        print("error: block synthesis exhausted", file=sys.stderr)
        return EXIT_EXHAUSTED
    evolution = expm(-1j * heisenberg_hamiltonian() * args.t)
    rng = np.random.default_rng(args.seed)
    worst = 0.0
    for _ in range(20):
        coeff = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        coeff /= np.linalg.norm(coeff)
        psi = np.zeros(4, dtype=complex)
        psi[1], psi[2] = coeff
        out = apply(result.circuit, result.params, StateVector(psi))
        want = evolution @ psi
        overlap = np.vdot(want, out.amps)
        phase = overlap / abs(overlap) if abs(overlap) > 1e-12 else 1.0
        worst = max(worst, float(np.linalg.norm(out.amps - phase * want)))
    print(f"t = {args.t}, cnots = {result.cnot_count}, final cost = {result.final_cost:.3e}")
    print(f"max distance vs exact evolution on 20 span vectors: {worst:.12e}")
    if args.qasm_out:
        Path(args.qasm_out).write_text(emit_qasm(result.circuit, result.params))
        print(f"wrote {args.qasm_out}")
    return EXIT_OK if worst <= 1e-3 else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="msprep",
        description="Synthesize quantum circuits mapping m input states to m output states.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_check = sub.add_parser("check", help="test whether a problem is exactly mappable")
    p_check.add_argument("problem", help="problem JSON file")
    p_check.add_argument("--tol", type=float, default=DEFAULT_SOLVABILITY_TOL)
    p_check.set_defaults(func=_cmd_check)

    p_synth = sub.add_parser("synth", help="synthesize a circuit for a problem")
    p_synth.add_argument("problem")
    p_synth.add_argument("--threshold", type=float, default=1e-8, help="success cost threshold")
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.add_argument("--max-cnots", type=int, default=None)
    p_synth.add_argument("--qasm-out", default=None)
    p_synth.add_argument("--result-out", default=None)
    p_synth.add_argument("--coupling", default=None, help="edges like '0-1,1-2' (overrides file)")
    p_synth.add_argument("--timeout", type=float, default=None)
    p_synth.add_argument("--tol", type=float, default=DEFAULT_SOLVABILITY_TOL)
    p_synth.set_defaults(func=_cmd_synth)

    p_verify = sub.add_parser("verify", help="simulate a QASM circuit against a problem")
    p_verify.add_argument("problem")
    p_verify.add_argument("qasm")
    p_verify.add_argument("--tol", type=float, default=1e-3)
    p_verify.set_defaults(func=_cmd_verify)

    p_bench = sub.add_parser("bench", help="random-unitary column-mapping benchmark")
    p_bench.add_argument("--n", type=int, required=True, choices=(2, 3, 4))
    p_bench.add_argument("--shots", type=int, default=10)
    p_bench.add_argument("--seed", type=int, default=0)
    p_bench.add_argument("--threshold", type=float, default=1e-8)
    p_bench.add_argument("--csv-out", default=None)
    p_bench.set_defaults(func=_cmd_bench)

    p_demo = sub.add_parser("demo", help="application demos")
    demo_sub = p_demo.add_subparsers(dest="demo", required=True)

    p_cat = demo_sub.add_parser("cat", help="blockwise cat-state preparation")
    p_cat.add_argument("--preset", default="singlet", choices=("singlet",))
    p_cat.add_argument("--blocks", type=int, default=2)
    p_cat.add_argument("--blocks-file", default=None)
    p_cat.add_argument("--seed", type=int, default=0)
    p_cat.add_argument("--qasm-out", default=None)
    p_cat.set_defaults(func=_cmd_demo_cat)

    p_heis = demo_sub.add_parser("heisenberg", help="block-restricted two-spin evolution")
    p_heis.add_argument("--t", type=float, required=True)
    p_heis.add_argument("--seed", type=int, default=0)
    p_heis.add_argument("--qasm-out", default=None)
    p_heis.set_defaults(func=_cmd_demo_heisenberg)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ProblemFormatError, QasmError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except UnsolvableSystemError as exc:
        print(f"error: {exc}", file=sys.stderr)
        report = exc.report
        print(f"gram mismatch: {report.max_abs_mismatch:.12e}", file=sys.stderr)
        return EXIT_UNSOLVABLE


if __name__ == "__main__":
    sys.exit(main())
