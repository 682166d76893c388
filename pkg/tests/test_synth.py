"""Tests for the bottom-up CNOT-minimizing template search."""

import numpy as np
import pytest

from msprep import (
    ConnectivityGraph,
    GateKind,
    InstantiateConfig,
    StateSystem,
    StateVector,
    SynthConfig,
    UnsolvableSystemError,
    apply,
    haar_unitary,
    pad_isometry,
    restrict_unitary,
    synthesize,
    synthesize_via_completion,
)

from conftest import random_solvable_system, random_state


def aligned_max_distance(result, sys) -> float:
    outs = [apply(result.circuit, result.params, vin).amps for vin in sys.inputs]
    trace = sum(np.vdot(w.amps, o) for w, o in zip(sys.outputs, outs))
    phase = trace / abs(trace) if abs(trace) > 1e-12 else 1.0
    return max(
        float(np.linalg.norm(o - phase * w.amps)) for w, o in zip(sys.outputs, outs)
    )


class TestSynthesize:
    def test_example2_needs_exactly_two_cnots(self, example2):
        res = synthesize(example2, SynthConfig(instantiate=InstantiateConfig(seed=0)))
        assert res.converged
        assert res.cnot_count == 2
        assert res.final_cost <= 1e-8

    def test_single_state_preparation_uses_at_most_one_cnot(self):
        rng = np.random.default_rng(30)
        for seed in range(5):
            sys = pad_isometry([random_state(rng, 2)], n_in=0)
            res = synthesize(sys, SynthConfig(instantiate=InstantiateConfig(seed=seed)))
            assert res.converged and res.cnot_count <= 1

    def test_full_two_qubit_unitary_uses_at_most_three_cnots(self):
        for seed in range(5):
            sys = restrict_unitary(haar_unitary(4, seed=seed), range(4))
            res = synthesize(sys, SynthConfig(instantiate=InstantiateConfig(seed=seed)))
            assert res.converged and res.cnot_count <= 3

    def test_identity_mapping_returns_gateless_circuit(self):
        sys = StateSystem(
            [(StateVector.basis(2, i), StateVector.basis(2, i)) for i in range(4)]
        )
        res = synthesize(sys)
        assert res.converged
        assert len(res.circuit.gates) == 0
        assert res.cnot_count == 0

    def test_coupling_respected(self):
        line = ConnectivityGraph.from_pairs(3, [(0, 1), (1, 2)])
        sys = restrict_unitary(haar_unitary(8, seed=2), range(2))
        cfg = SynthConfig(instantiate=InstantiateConfig(seed=2), coupling=line)
        res = synthesize(sys, cfg)
        assert res.converged
        for gate in res.circuit.gates:
            if gate.kind is GateKind.CNOT:
                assert line.has_edge(*gate.qubits)

    def test_example2_single_edge_coupling_same_count(self, example2):
        only_edge = ConnectivityGraph.from_pairs(2, [(0, 1)])
        cfg = SynthConfig(instantiate=InstantiateConfig(seed=0), coupling=only_edge)
        res = synthesize(example2, cfg)
        assert res.converged and res.cnot_count == 2

    def test_successes_verify_by_simulation(self):
        rng = np.random.default_rng(31)
        for seed in range(8):
            sys = random_solvable_system(rng, 2, int(rng.integers(1, 5)))
            res = synthesize(sys, SynthConfig(instantiate=InstantiateConfig(seed=seed)))
            assert res.converged
            assert res.final_cost <= 1e-8  # never a success above threshold
            assert aligned_max_distance(res, sys) <= 1e-3

    def test_cnot_count_field_matches_circuit(self, example2):
        res = synthesize(example2, SynthConfig(instantiate=InstantiateConfig(seed=1)))
        assert res.cnot_count == res.circuit.cnot_count

    def test_exhaustion_returns_best_effort(self, example2):
        cfg = SynthConfig(instantiate=InstantiateConfig(seed=0), max_two_qubit_gates=0)
        res = synthesize(example2, cfg)
        assert not res.converged
        assert res.final_cost > 1e-8
        assert res.cnot_count == 0

    def test_timeout_returns_best_effort(self, example2):
        cfg = SynthConfig(instantiate=InstantiateConfig(seed=0), timeout_seconds=0.0)
        res = synthesize(example2, cfg)
        assert not res.converged

    def test_refuses_unsolvable(self, example4):
        with pytest.raises(UnsolvableSystemError):
            synthesize(example4)

    def test_deterministic(self, example2):
        cfg = SynthConfig(instantiate=InstantiateConfig(seed=4))
        a = synthesize(example2, cfg)
        b = synthesize(example2, cfg)
        assert a.cnot_count == b.cnot_count
        assert np.array_equal(a.params, b.params)
        assert a.nodes_explored == b.nodes_explored


class TestCompletionBaseline:
    def test_example1_identity_completion_needs_no_gates(self, example1):
        res = synthesize_via_completion(example1)
        assert res.converged and res.cnot_count == 0

    def test_swapped_completion_needs_one_cnot(self):
        # exchanging the images of |10> and |11> turns the completion into a CNOT
        swapped = np.eye(4, dtype=complex)[:, [0, 1, 3, 2]]
        res = synthesize(restrict_unitary(swapped, range(4)))
        assert res.converged and res.cnot_count == 1

    def test_direct_never_beaten_by_pinned_completion(self):
        rng = np.random.default_rng(32)
        cfg = lambda s: SynthConfig(instantiate=InstantiateConfig(seed=s))  # noqa: E731
        for seed in range(50):
            sys = random_solvable_system(rng, 2, 2)
            direct = synthesize(sys, cfg(seed))
            baseline = synthesize_via_completion(sys, cfg(seed))
            assert direct.converged and baseline.converged
            assert baseline.cnot_count >= direct.cnot_count
