"""Tests for multistart parameter fitting."""

import numpy as np
import pytest

from msprep import (
    Circuit,
    CostContext,
    GateKind,
    InstantiateConfig,
    StateSystem,
    StateVector,
    UnsolvableSystemError,
    apply,
    instantiate,
    msp_cost,
)
from msprep.instantiate import _minimize_once, start_angles

from conftest import make_eq4_circuit, random_solvable_system


def free_eq4_template() -> Circuit:
    return make_eq4_circuit()


def product_unitary_cost_floor() -> float:
    """Brute-force floor of the example-2 cost over product unitaries.

    For U = A (x) B the trace is A00*B00 + (A01*B11 - A11*B01)/sqrt(2); the
    free phases align both terms, leaving max over column angles a, b of
    cos(a)cos(b) + sin(a+b)/sqrt(2).  Grid that 2D surface.
    """
    a = np.linspace(0, np.pi / 2, 2001)
    ca, cb = np.cos(a)[:, None], np.cos(a)[None, :]
    sab = np.sin(a[:, None] + a[None, :])
    best = np.max(ca * cb + sab / np.sqrt(2))
    return 1 - best / 2


class TestInstantiate:
    def test_published_template_converges(self, example2):
        res = instantiate(free_eq4_template(), example2, InstantiateConfig(seed=3))
        assert res.converged
        assert res.final_cost < 1e-8

    def test_empty_circuit_on_identity_mapping(self):
        sys = StateSystem(
            [(StateVector.basis(2, i), StateVector.basis(2, i)) for i in range(3)]
        )
        res = instantiate(Circuit.from_ops(2, []), sys)
        assert res.converged
        assert res.final_cost < 1e-12
        assert res.iterations_total == 0 and res.starts_used == 0

    def test_single_rotation_layer_cannot_entangle(self, example2):
        floor = product_unitary_cost_floor()
        assert floor >= 0.1
        layer = Circuit.from_ops(2, [(GateKind.U3, (0,)), (GateKind.U3, (1,))])
        res = instantiate(layer, example2, InstantiateConfig(seed=0))
        assert not res.converged
        assert res.final_cost >= 0.1
        # the optimizer should still reach the product-unitary floor
        assert res.final_cost <= floor + 1e-6

    def test_deterministic_bit_for_bit(self, example2):
        cfg = InstantiateConfig(seed=11, num_starts=3)
        first = instantiate(free_eq4_template(), example2, cfg)
        second = instantiate(free_eq4_template(), example2, cfg)
        assert np.array_equal(first.params, second.params)
        assert first.final_cost == second.final_cost
        assert first.iterations_total == second.iterations_total

    def test_final_cost_is_minimum_over_starts(self, example2):
        # single-layer template never converges, so all starts run
        layer = Circuit.from_ops(2, [(GateKind.U3, (0,)), (GateKind.U3, (1,))])
        cfg = InstantiateConfig(seed=2, num_starts=4)
        res = instantiate(layer, example2, cfg)
        assert res.starts_used == 4
        ctx = CostContext.from_system(example2)
        manual = []
        for j in range(4):
            x0 = start_angles(cfg.seed, j, layer.num_params)
            _, value, _, _ = _minimize_once(ctx, layer, x0, cfg)
            manual.append(value)
        assert res.final_cost == min(manual)

    def test_cost_non_increasing_along_accepted_iterates(self, example2):
        layer = free_eq4_template()
        ctx = CostContext.from_system(example2)
        cfg = InstantiateConfig(seed=5)
        from msprep.cost import circuit_cost

        x0 = start_angles(cfg.seed, 0, layer.num_params)
        params, value, nit, history = _minimize_once(ctx, layer, x0, cfg)
        assert history is not None and len(history) == nit + 1
        assert abs(history[0] - circuit_cost(ctx, layer, x0)) < 1e-14
        assert abs(history[-1] - value) < 1e-14
        assert len(history) > 2
        assert np.all(np.diff(history) <= 1e-14)

    def test_converged_result_maps_all_pairs(self):
        rng = np.random.default_rng(21)
        for _ in range(10):
            sys = random_solvable_system(rng, 2, 2)
            template = _three_cnot_template()
            res = instantiate(template, sys, InstantiateConfig(seed=7))
            if not res.converged:
                continue
            bound = np.sqrt(2 * sys.m * 1e-8)
            outs = [apply(template, res.params, vin).amps for vin in sys.inputs]
            trace = sum(np.vdot(w.amps, o) for w, o in zip(sys.outputs, outs))
            phase = trace / abs(trace)
            for vout, out in zip(sys.outputs, outs):
                assert np.linalg.norm(out - phase * vout.amps) <= bound

    def test_refuses_unsolvable_with_report(self, example4):
        with pytest.raises(UnsolvableSystemError) as err:
            instantiate(free_eq4_template(), example4)
        assert err.value.report.max_abs_mismatch == pytest.approx(0.20710678, abs=1e-6)

    def test_warm_start_length_checked(self, example2):
        with pytest.raises(ValueError, match="warm start"):
            instantiate(free_eq4_template(), example2, warm_start=np.zeros(3))

    def test_early_exit_on_first_converged_start(self, example2):
        res = instantiate(free_eq4_template(), example2, InstantiateConfig(seed=3, num_starts=8))
        assert res.converged
        assert res.starts_used < 8


def _three_cnot_template() -> Circuit:
    k = GateKind
    ops = [(k.U3, (0,)), (k.U3, (1,))]
    for _ in range(3):
        ops += [(k.CNOT, (0, 1)), (k.U3, (0,)), (k.U3, (1,))]
    return Circuit.from_ops(2, ops)


class TestStartAngles:
    def test_keyed_by_seed_and_start(self):
        a = start_angles(1, 0, 5)
        b = start_angles(1, 1, 5)
        c = start_angles(2, 0, 5)
        assert not np.allclose(a, b)
        assert not np.allclose(a, c)
        assert np.array_equal(a, start_angles(1, 0, 5))

    def test_range(self):
        angles = start_angles(9, 4, 1000)
        assert np.all(angles >= 0) and np.all(angles < 2 * np.pi)


class TestConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            InstantiateConfig(success_threshold=2.0)
        with pytest.raises(ValueError):
            InstantiateConfig(num_starts=0)
        with pytest.raises(ValueError):
            InstantiateConfig(gradient_tolerance=0.0)
