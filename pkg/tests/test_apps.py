"""Tests for cat-state construction and block-restricted evolution."""

import numpy as np
import pytest
from scipy.linalg import expm

from msprep import (
    BlockSpec,
    InstantiateConfig,
    StateVector,
    SynthConfig,
    apply,
    cat_state_circuit,
    cat_state_target,
    check_solvable,
    ghz_ladder,
    heisenberg_block_system,
    heisenberg_hamiltonian,
    synthesize,
)
from msprep.apps import block_system

from conftest import SQ2, state


def fidelity(a: np.ndarray, b: np.ndarray) -> float:
    return abs(np.vdot(a, b)) ** 2


def cat_fidelity(blocks, seed=0) -> float:
    cfg = SynthConfig(instantiate=InstantiateConfig(seed=seed))
    circuit, params = cat_state_circuit(blocks, cfg)
    produced = apply(circuit, params, StateVector.basis(circuit.n, 0))
    return fidelity(cat_state_target(blocks).amps, produced.amps)


def two_qubit_block(a, b, c, d) -> BlockSpec:
    phi1 = state(np.array([a, 0, 0, b]) / np.hypot(abs(a), abs(b)))
    phi2 = state(np.array([0, c, d, 0]) / np.hypot(abs(c), abs(d)))
    return BlockSpec(2, phi1, phi2)


class TestGhzLadder:
    def test_single_qubit_plus_state(self):
        circuit, params = ghz_ladder(1)
        out = apply(circuit, params, StateVector.basis(1, 0))
        assert np.allclose(out.amps, np.array([1, 1]) / SQ2, atol=1e-12)

    def test_bell_pair(self):
        circuit, params = ghz_ladder(2)
        out = apply(circuit, params, StateVector.basis(2, 0))
        expected = np.array([1, 0, 0, 1]) / SQ2
        assert np.linalg.norm(out.amps - expected) < 1e-10

    def test_three_qubits(self):
        circuit, params = ghz_ladder(3)
        out = apply(circuit, params, StateVector.basis(3, 0))
        expected = np.zeros(8)
        expected[0] = expected[7] = 1 / SQ2
        assert np.linalg.norm(out.amps - expected) < 1e-10


class TestBlockSpec:
    def test_rejects_non_orthogonal(self):
        v = StateVector.basis(1, 0)
        with pytest.raises(ValueError, match="orthogonal"):
            BlockSpec(1, v, v)

    def test_rejects_wrong_size(self):
        with pytest.raises(ValueError, match="k="):
            BlockSpec(2, StateVector.basis(1, 0), StateVector.basis(1, 1))

    def test_block_system_is_solvable(self):
        spec = two_qubit_block(1, 1, 1, -1)
        assert check_solvable(block_system(spec)).solvable


class TestCatState:
    def test_single_qubit_blocks_reproduce_ghz(self):
        blocks = [BlockSpec(1, StateVector.basis(1, 0), StateVector.basis(1, 1))] * 3
        assert cat_fidelity(blocks) >= 1 - 1e-6

    def test_two_block_product_form(self):
        # (a,b,c,d) = (1,0,0,1): branches |00>|00> and |10>|10>
        blocks = [two_qubit_block(1, 0, 0, 1)] * 2
        target = cat_state_target(blocks)
        expected = np.zeros(16)
        expected[0b0000] = expected[0b1010] = 1 / SQ2
        assert np.linalg.norm(target.amps - expected) < 1e-12
        assert cat_fidelity(blocks) >= 1 - 1e-6

    def test_random_amplitude_blocks(self):
        rng = np.random.default_rng(40)
        a, b = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        c, d = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        blocks = [two_qubit_block(a, b, c, d)] * 2
        assert cat_fidelity(blocks) >= 1 - 1e-5

    def test_singlet_reference_superposition(self):
        singlet = state([0, 1 / SQ2, -1 / SQ2, 0])
        blocks = [BlockSpec(2, StateVector.basis(2, 0), singlet)] * 2
        target = cat_state_target(blocks)
        # explicit four-qubit form: (|0000> + singlet x singlet)/sqrt(2)
        expected = np.kron([1, 0, 0, 0], [1, 0, 0, 0]).astype(complex)
        expected = (expected + np.kron(singlet.amps, singlet.amps)) / SQ2
        assert np.linalg.norm(target.amps - expected) < 1e-12
        assert cat_fidelity(blocks) >= 1 - 1e-6

    def test_mixed_block_sizes(self):
        blocks = [
            BlockSpec(1, StateVector.basis(1, 0), StateVector.basis(1, 1)),
            two_qubit_block(1, 1j, 1, -1),
        ]
        assert cat_fidelity(blocks) >= 1 - 1e-5

    def test_empty_block_list_rejected(self):
        with pytest.raises(ValueError, match="block"):
            cat_state_circuit([])


class TestHeisenbergBlock:
    def test_time_zero_is_identity_on_block(self):
        sys = heisenberg_block_system(0.0)
        assert np.array_equal(sys.v_matrix, sys.w_matrix)

    def test_quarter_pi_swaps_with_phase(self):
        sys = heisenberg_block_system(np.pi / 4)
        expected = -1j * np.exp(1j * np.pi / 4) * StateVector.basis(2, 2).amps
        assert np.max(np.abs(sys.outputs[0].amps - expected)) < 1e-12

    @pytest.mark.parametrize("t", [0.0, 0.3, 1.1, 2.0, np.pi])
    def test_solvable_for_any_time(self, t):
        report = check_solvable(heisenberg_block_system(t))
        assert report.solvable
        assert np.allclose(report.gram_in.entries, np.eye(2), atol=1e-12)

    @pytest.mark.parametrize("t", [0.3, 1.1])
    def test_closed_form_matches_matrix_exponential(self, t):
        u = expm(-1j * heisenberg_hamiltonian() * t)
        sys = heisenberg_block_system(t)
        assert np.max(np.abs(sys.outputs[0].amps - u[:, 1])) < 1e-12
        assert np.max(np.abs(sys.outputs[1].amps - u[:, 2])) < 1e-12

    def test_synthesized_block_acts_correctly_on_span(self):
        t = 0.7
        cfg = SynthConfig(instantiate=InstantiateConfig(seed=1))
        res = synthesize(heisenberg_block_system(t), cfg)
        assert res.converged
        u = expm(-1j * heisenberg_hamiltonian() * t)
        rng = np.random.default_rng(41)
        for _ in range(20):
            coeff = rng.standard_normal(2) + 1j * rng.standard_normal(2)
            coeff /= np.linalg.norm(coeff)
            psi = np.zeros(4, dtype=complex)
            psi[1], psi[2] = coeff
            out = apply(res.circuit, res.params, StateVector(psi)).amps
            want = u @ psi
            overlap = np.vdot(want, out)
            phase = overlap / abs(overlap)
            assert np.linalg.norm(out - phase * want) <= 1e-3
