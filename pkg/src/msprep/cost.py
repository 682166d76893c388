"""Trace cost for multi-state mapping, its gradient, and special cases.

The cost of a circuit unitary U against paired column matrices V, W is
1 - |Tr[U V W^dag]| / m, which is 0 exactly when U maps every input column to
its output up to one shared global phase, and at most 1 for any unitary.
With m = 1 it reduces to the state-preparation cost and with V = Id to the
full unitary-synthesis cost.
"""

from __future__ import annotations

import numpy as np

from . import _kernels
from .circuit import (
    Circuit,
    GateKind,
    _apply_1q_tensor,
    _apply_cnot_tensor,
    _check_params,
    gate_derivatives,
    gate_matrix,
)
from .states import DEFAULT_SOLVABILITY_TOL, StateSystem, StateVector, orthonormalize

# |Tr| below this is treated as the (measure-zero) non-differentiable point:
# the gradient is reported as zero and restarts are left to escape it.
DEGENERATE_TRACE = 1e-12

# Largest register for which costs go through the materialized circuit
# unitary; beyond it the trace is accumulated statevector by statevector.
_DENSE_QUBIT_LIMIT = 8


class RankDeficientError(ValueError):
    """Raised when an operation needs linearly independent input states."""


class CostContext:
    """Precomputed pairing data for repeated cost evaluations.

    Immutable; safe to share read-only across concurrent optimizer restarts.
    """

    __slots__ = ("v_mat", "w_mat", "m", "pairing", "n")

    def __init__(self, v_mat, w_mat):
        v = np.array(v_mat, dtype=complex)
        w = np.array(w_mat, dtype=complex)
        if v.ndim != 2 or v.shape != w.shape:
            raise ValueError(f"column matrices must share a 2D shape, got {v.shape} and {w.shape}")
        dim = v.shape[0]
        if dim < 2 or dim & (dim - 1):
            raise ValueError(f"row count {dim} is not a power of two >= 2")
        self.v_mat = v
        self.w_mat = w
        self.m = v.shape[1]
        self.n = dim.bit_length() - 1
        self.pairing = v @ w.conj().T

    @classmethod
    def from_system(cls, sys: StateSystem) -> "CostContext":
        return cls(sys.v_matrix, sys.w_matrix)


def msp_cost(ctx: CostContext, u: np.ndarray) -> float:
    """Mapping cost of a unitary: 1 - |Tr[u @ V @ W^dag]| / m."""
    u = np.asarray(u, dtype=complex)
    dim = ctx.v_mat.shape[0]
    if u.shape != (dim, dim):
        raise ValueError(f"expected a {dim}x{dim} unitary, got shape {u.shape}")
    return 1.0 - abs(np.trace(u @ ctx.pairing)) / ctx.m


def state_prep_cost(target: StateVector, u: np.ndarray) -> float:
    """Preparation cost 1 - |<target| u |0...0>|; the m = 1 special case."""
    u = np.asarray(u, dtype=complex)
    if u.shape != (target.dim, target.dim):
        raise ValueError(f"expected a {target.dim}x{target.dim} unitary, got shape {u.shape}")
    return 1.0 - abs(np.vdot(target.amps, u[:, 0]))


def _grad_from_trace(trace: complex, dtrace: np.ndarray, m: int) -> np.ndarray:
    mag = abs(trace)
    if mag < DEGENERATE_TRACE:
        # non-differentiable point; report a zero gradient
        return np.zeros(dtrace.shape[0])
    return -(np.conj(trace) * dtrace).real / (m * mag)


def _trace_and_grad_states(c: Circuit, params: np.ndarray, ctx: CostContext):
    """Trace and gradient accumulated as sum_i <w_i|U|v_i> over statevectors.

    Algebraically identical to the dense path but never materializes the
    circuit unitary: forward input columns and adjoint output columns meet
    at each parameterized gate's site.
    """
    n = c.n
    shape = [2] * n + [ctx.m]
    forward = [ctx.v_mat.reshape(shape)]
    for gate in c.gates:
        cur = forward[-1]
        if gate.kind is GateKind.CNOT:
            forward.append(_apply_cnot_tensor(cur, gate.qubits[0], gate.qubits[1]))
        else:
            local = gate_matrix(gate.kind, params[gate.param_offset : gate.param_offset + gate.kind.num_params])
            forward.append(_apply_1q_tensor(cur, local, gate.qubits[0]))
    w = ctx.w_mat.reshape(shape)
    trace = complex(np.sum(np.conj(w) * forward[-1]))
    dtrace = np.zeros(c.num_params, dtype=complex)
    back = w
    for i in range(len(c.gates) - 1, -1, -1):
        gate = c.gates[i]
        if gate.kind is GateKind.CNOT:
            back = _apply_cnot_tensor(back, gate.qubits[0], gate.qubits[1])
            continue
        local_params = params[gate.param_offset : gate.param_offset + gate.kind.num_params]
        for k, dg in enumerate(gate_derivatives(gate.kind, local_params)):
            shifted = _apply_1q_tensor(forward[i], dg, gate.qubits[0])
            dtrace[gate.param_offset + k] = np.sum(np.conj(back) * shifted)
        local = gate_matrix(gate.kind, local_params)
        back = _apply_1q_tensor(back, local.conj().T, gate.qubits[0])
    return trace, dtrace


def msp_cost_and_grad(ctx: CostContext, c: Circuit, params) -> tuple[float, np.ndarray]:
    """Cost of the circuit at the given parameters plus its full gradient.

    Matches ``msp_cost(ctx, unitary_of(c, params))``; the gradient follows
    the trace derivative through each gate.  At the non-differentiable point
    |Tr| ~ 0 the gradient is reported as the zero vector and the caller's
    random restarts are expected to escape.
    """
    p = _check_params(c, params)
    if c.n != ctx.n:
        raise ValueError(f"circuit has {c.n} qubits but cost context has {ctx.n}")
    if c.n > _DENSE_QUBIT_LIMIT:
        trace, dtrace = _trace_and_grad_states(c, p, ctx)
    else:
        # column-wise route: work scales with the pair count m
        kinds, qa, qb, poff = c.packed
        trace, dtrace = _kernels.trace_and_grad_states(
            c.n, kinds, qa, qb, poff, p, ctx.v_mat, ctx.w_mat, c.num_params
        )
    cost = 1.0 - abs(trace) / ctx.m
    return cost, _grad_from_trace(trace, dtrace, ctx.m)


def circuit_cost(ctx: CostContext, c: Circuit, params) -> float:
    """Cost of the circuit at the given parameters, without the gradient."""
    p = _check_params(c, params)
    if c.n != ctx.n:
        raise ValueError(f"circuit has {c.n} qubits but cost context has {ctx.n}")
    if c.n > _DENSE_QUBIT_LIMIT:
        trace, _ = _trace_and_grad_states(c, p, ctx)
    else:
        kinds, qa, qb, poff = c.packed
        trace = _kernels.trace_only_states(c.n, kinds, qa, qb, poff, p, ctx.v_mat, ctx.w_mat)
    return 1.0 - abs(trace) / ctx.m


def alt_cost(
    sys: StateSystem,
    u: np.ndarray,
    tol: float = DEFAULT_SOLVABILITY_TOL,
    rank_cutoff: float | None = None,
) -> float:
    """Cost averaged uniformly over the input span instead of the inputs.

    Evaluates 1 - |Tr[W_tilde^dag u V_tilde]| / m on the orthonormalized
    frames.  Refuses systems whose overlap matrices differ (the shared frame
    is then ill-defined) and systems with linearly dependent inputs (the
    inverse-root reweighting is numerically unstable there).  Exposed for
    study; the synthesizer always uses :func:`msp_cost`.
    """
    ortho = orthonormalize(sys, rank_cutoff=rank_cutoff, tol=tol)
    if ortho.rank < sys.m:
        raise RankDeficientError(
            f"input states span only {ortho.rank} < {sys.m} dimensions; "
            "the reweighted cost is numerically unstable on deficient systems"
        )
    u = np.asarray(u, dtype=complex)
    dim = ortho.v_tilde.shape[0]
    if u.shape != (dim, dim):
        raise ValueError(f"expected a {dim}x{dim} unitary, got shape {u.shape}")
    trace = np.trace(ortho.w_tilde.conj().T @ u @ ortho.v_tilde)
    return 1.0 - abs(trace) / sys.m
