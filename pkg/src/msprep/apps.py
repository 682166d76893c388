"""Application constructors: cat-state circuits and block-restricted evolution.

A cat state (|phi_1> + |phi_2>)/sqrt(2) whose branches factor over qubit
blocks with orthogonal local states is built from a GHZ backbone over one
designated qubit per block plus an independently synthesized two-state
mapping per block.  The two-spin exchange Hamiltonian's middle block gives
a worked example of restricting evolution to a symmetry sector.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circuit import Circuit, GateKind, concat, remap_qubits
from .parallel import ordered_map
from .states import StateSystem, StateVector
from .synth import SynthConfig, SynthesisResult, synthesize

# U3(pi/2, 0, pi) is exactly the Hadamard matrix
_H_ANGLES = (np.pi / 2, 0.0, np.pi)


@dataclass(frozen=True)
class BlockSpec:
    """One block's qubit count and its two orthogonal local states."""

    k: int
    phi1: StateVector
    phi2: StateVector

    def __post_init__(self):
        if self.phi1.n != self.k or self.phi2.n != self.k:
            raise ValueError(f"block states must live on k={self.k} qubits")
        overlap = abs(np.vdot(self.phi1.amps, self.phi2.amps))
        if overlap > 1e-8:
            raise ValueError(f"block states must be orthogonal, got |<phi1|phi2>| = {overlap:.3e}")


def ghz_ladder(q: int) -> tuple[Circuit, np.ndarray]:
    """Ladder circuit preparing (|0...0> + |1...1>)/sqrt(2) from |0...0>.

    A Hadamard-equivalent U3 on qubit 0 followed by the CNOT chain
    0->1, 1->2, ...; returns the circuit with its parameter values.
    """
    if q < 1:
        raise ValueError("need at least one qubit")
    ops: list[tuple[GateKind, tuple[int, ...]]] = [(GateKind.U3, (0,))]
    ops.extend((GateKind.CNOT, (i, i + 1)) for i in range(q - 1))
    return Circuit.from_ops(q, ops), np.array(_H_ANGLES)


def block_system(spec: BlockSpec) -> StateSystem:
    """Per-block mapping: |0...0> to phi1 and |10...0> to phi2."""
    return StateSystem(
        [
            (StateVector.basis(spec.k, 0), spec.phi1),
            (StateVector.basis(spec.k, 1 << (spec.k - 1)), spec.phi2),
        ]
    )


def cat_state_target(blocks: list[BlockSpec]) -> StateVector:
    """The analytic cat state (tensor of phi1's + tensor of phi2's)/sqrt(2)."""
    branch1 = np.ones(1, dtype=complex)
    branch2 = np.ones(1, dtype=complex)
    for spec in blocks:
        branch1 = np.kron(branch1, spec.phi1.amps)
        branch2 = np.kron(branch2, spec.phi2.amps)
    return StateVector((branch1 + branch2) / np.sqrt(2))


def cat_state_circuit(
    blocks: list[BlockSpec], cfg: SynthConfig | None = None
) -> tuple[Circuit, np.ndarray]:
    """Circuit preparing the blockwise cat state from |0...0>.

    A GHZ ladder over each block's first qubit creates the two-branch
    superposition; each block's circuit then maps |0...0> to phi1 on the
    lower branch and |10...0> to phi2 on the upper branch.  Both branches
    pick up the same accumulated phase, so the relative phase of the
    superposition stays +1.  Block syntheses are independent and may run
    concurrently.

    Raises RuntimeError if any block's synthesis exhausts its search.
    """
    if not blocks:
        raise ValueError("need at least one block")
    n = sum(spec.k for spec in blocks)
    offsets = np.concatenate([[0], np.cumsum([spec.k for spec in blocks])])[:-1]
    designated = [int(o) for o in offsets]

    backbone_ops: list[tuple[GateKind, tuple[int, ...]]] = [(GateKind.U3, (designated[0],))]
    backbone_ops.extend(
        (GateKind.CNOT, (designated[i], designated[i + 1])) for i in range(len(blocks) - 1)
    )
    backbone = Circuit.from_ops(n, backbone_ops)

    def _solve(spec: BlockSpec) -> SynthesisResult:
        return synthesize(block_system(spec), cfg)

    results = ordered_map(_solve, blocks)
    parts: list[tuple[Circuit, np.ndarray]] = [(backbone, np.array(_H_ANGLES))]
    for spec, offset, result in zip(blocks, designated, results):
        if not result.converged:
            raise RuntimeError(
                f"block synthesis failed at cost {result.final_cost:.3e} "
                f"after {result.nodes_explored} templates"
            )
        mapping = range(offset, offset + spec.k)
        parts.append((remap_qubits(result.circuit, n, mapping), result.params))
    return concat(n, parts)


def heisenberg_hamiltonian() -> np.ndarray:
    """Two-spin exchange Hamiltonian with one off-diagonal symmetry block."""
    return np.array(
        [
            [1, 0, 0, 0],
            [0, -1, 2, 0],
            [0, 2, -1, 0],
            [0, 0, 0, 1],
        ],
        dtype=complex,
    )


def heisenberg_block_system(t: float) -> StateSystem:
    """Action of the two-spin evolution at time ``t`` on the {|01>,|10>} block.

    The evolution operator keeps the middle block closed, so its action
    there has the closed form
    |01> -> e^{it}(cos(2t)|01> - i sin(2t)|10>) and the |10> image with the
    roles swapped.  Synthesizing just this system leaves the outer block
    free, which in general shortens the circuit versus the full operator.
    """
    phase = np.exp(1j * t)
    c, s = np.cos(2 * t), np.sin(2 * t)
    img01 = np.array([0, phase * c, -1j * phase * s, 0])
    img10 = np.array([0, -1j * phase * s, phase * c, 0])
    return StateSystem(
        [
            (StateVector.basis(2, 1), StateVector(img01)),
            (StateVector.basis(2, 2), StateVector(img10)),
        ]
    )
