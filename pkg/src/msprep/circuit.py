"""Parameterized circuit representation, simulation, and parameter derivatives.

Rotation gates follow the exp(-i*theta*P/2) convention for Pauli generator P;
U3 is the standard Z-Y-Z Euler rotation.  A circuit owns its gate layout but
not its parameter values: those live in a flat vector supplied per call, so
one template can be instantiated many times concurrently.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .states import StateVector


class GateKind(enum.Enum):
    RX = "rx"
    RY = "ry"
    RZ = "rz"
    U3 = "u3"
    CNOT = "cx"

    @property
    def num_params(self) -> int:
        return _NUM_PARAMS[self]

    @property
    def num_qubits(self) -> int:
        return 2 if self is GateKind.CNOT else 1


_NUM_PARAMS = {
    GateKind.RX: 1,
    GateKind.RY: 1,
    GateKind.RZ: 1,
    GateKind.U3: 3,
    GateKind.CNOT: 0,
}


@dataclass(frozen=True)
class PlacedGate:
    kind: GateKind
    qubits: tuple[int, ...]
    param_offset: int


@dataclass(frozen=True)
class ConnectivityGraph:
    """Undirected qubit pairs on which two-qubit gates are allowed."""

    n: int
    edges: frozenset[tuple[int, int]]

    def __post_init__(self):
        for a, b in self.edges:
            if a == b:
                raise ValueError(f"self-loop edge ({a},{b})")
            if not (0 <= a < self.n and 0 <= b < self.n):
                raise ValueError(f"edge ({a},{b}) references a qubit outside [0,{self.n})")
            if a > b:
                raise ValueError("edges must be stored as sorted pairs")

    @classmethod
    def complete(cls, n: int) -> "ConnectivityGraph":
        return cls(n, frozenset((a, b) for a in range(n) for b in range(a + 1, n)))

    @classmethod
    def from_pairs(cls, n: int, pairs: Iterable[Sequence[int]]) -> "ConnectivityGraph":
        return cls(n, frozenset(tuple(sorted((int(a), int(b)))) for a, b in pairs))

    def sorted_edges(self) -> list[tuple[int, int]]:
        return sorted(self.edges)

    def has_edge(self, a: int, b: int) -> bool:
        return tuple(sorted((a, b))) in self.edges


class Circuit:
    """Ordered gate list over ``n`` qubits with a flat parameter layout.

    Gate 0 acts first on states (rightmost in the matrix product).  Parameter
    offsets must tile [0, num_params) exactly in gate order.  When a
    ``coupling`` graph is given, every CNOT must sit on one of its edges.
    """

    __slots__ = ("n", "gates", "num_params", "coupling", "__dict__")

    def __init__(
        self,
        n: int,
        gates: Sequence[PlacedGate],
        coupling: ConnectivityGraph | None = None,
    ):
        if n < 1:
            raise ValueError("need at least one qubit")
        gates = tuple(gates)
        offset = 0
        for g in gates:
            if len(g.qubits) != g.kind.num_qubits:
                raise ValueError(f"{g.kind.name} takes {g.kind.num_qubits} qubit(s), got {g.qubits}")
            if len(set(g.qubits)) != len(g.qubits):
                raise ValueError(f"duplicate qubit in {g}")
            if any(not 0 <= q < n for q in g.qubits):
                raise ValueError(f"gate {g} references a qubit outside [0,{n})")
            if g.param_offset != offset:
                raise ValueError(
                    f"parameter offsets must tile in gate order: expected {offset}, got {g.param_offset}"
                )
            if coupling is not None and g.kind is GateKind.CNOT:
                if not coupling.has_edge(*g.qubits):
                    raise ValueError(f"CNOT on {g.qubits} violates the coupling graph")
            offset += g.kind.num_params
        self.n = n
        self.gates = gates
        self.num_params = offset
        self.coupling = coupling

    @classmethod
    def from_ops(
        cls,
        n: int,
        ops: Iterable[tuple[GateKind, Sequence[int]]],
        coupling: ConnectivityGraph | None = None,
    ) -> "Circuit":
        """Build a circuit assigning parameter offsets in gate order."""
        gates = []
        offset = 0
        for kind, qubits in ops:
            gates.append(PlacedGate(kind, tuple(int(q) for q in qubits), offset))
            offset += kind.num_params
        return cls(n, gates, coupling)

    @property
    def cnot_count(self) -> int:
        return sum(1 for g in self.gates if g.kind is GateKind.CNOT)

    def gate_counts(self) -> dict[GateKind, int]:
        counts: dict[GateKind, int] = {}
        for g in self.gates:
            counts[g.kind] = counts.get(g.kind, 0) + 1
        return counts

    @cached_property
    def packed(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Flat integer encoding (kinds, qubit_a, qubit_b, param_offsets)."""
        kinds = np.array([_KIND_CODE[g.kind] for g in self.gates], dtype=np.int64)
        qa = np.array([g.qubits[0] for g in self.gates], dtype=np.int64)
        qb = np.array(
            [g.qubits[1] if len(g.qubits) > 1 else -1 for g in self.gates], dtype=np.int64
        )
        poff = np.array([g.param_offset for g in self.gates], dtype=np.int64)
        return kinds, qa, qb, poff

    def __repr__(self) -> str:
        return f"Circuit(n={self.n}, gates={len(self.gates)}, params={self.num_params})"


_KIND_CODE = {
    GateKind.RX: 0,
    GateKind.RY: 1,
    GateKind.RZ: 2,
    GateKind.U3: 3,
    GateKind.CNOT: 4,
}


def gate_matrix(kind: GateKind, params: Sequence[float]) -> np.ndarray:
    """2x2 matrix of a one-qubit gate at the given parameter values."""
    if kind is GateKind.RX:
        (t,) = params
        c, s = np.cos(t / 2), np.sin(t / 2)
        return np.array([[c, -1j * s], [-1j * s, c]])
    if kind is GateKind.RY:
        (t,) = params
        c, s = np.cos(t / 2), np.sin(t / 2)
        return np.array([[c, -s], [s, c]], dtype=complex)
    if kind is GateKind.RZ:
        (t,) = params
        return np.array([[np.exp(-1j * t / 2), 0], [0, np.exp(1j * t / 2)]])
    if kind is GateKind.U3:
        t, phi, lam = params
        c, s = np.cos(t / 2), np.sin(t / 2)
        return np.array(
            [[c, -np.exp(1j * lam) * s], [np.exp(1j * phi) * s, np.exp(1j * (phi + lam)) * c]]
        )
    raise ValueError(f"{kind} has no one-qubit matrix")


def gate_derivatives(kind: GateKind, params: Sequence[float]) -> list[np.ndarray]:
    """Per-parameter derivative matrices of a one-qubit gate."""
    if kind is GateKind.RX:
        (t,) = params
        c, s = np.cos(t / 2) / 2, np.sin(t / 2) / 2
        return [np.array([[-s, -1j * c], [-1j * c, -s]])]
    if kind is GateKind.RY:
        (t,) = params
        c, s = np.cos(t / 2) / 2, np.sin(t / 2) / 2
        return [np.array([[-s, -c], [c, -s]], dtype=complex)]
    if kind is GateKind.RZ:
        (t,) = params
        return [np.array([[-0.5j * np.exp(-1j * t / 2), 0], [0, 0.5j * np.exp(1j * t / 2)]])]
    if kind is GateKind.U3:
        t, phi, lam = params
        c, s = np.cos(t / 2), np.sin(t / 2)
        ep, el, epl = np.exp(1j * phi), np.exp(1j * lam), np.exp(1j * (phi + lam))
        d_t = np.array([[-s / 2, -el * c / 2], [ep * c / 2, -epl * s / 2]])
        d_phi = np.array([[0, 0], [1j * ep * s, 1j * epl * c]])
        d_lam = np.array([[0, -1j * el * s], [0, 1j * epl * c]])
        return [d_t, d_phi, d_lam]
    return []


def _embed_1q(g: np.ndarray, q: int, n: int) -> np.ndarray:
    return np.kron(np.kron(np.eye(2**q), g), np.eye(2 ** (n - 1 - q)))


def _cnot_matrix(control: int, target: int, n: int) -> np.ndarray:
    dim = 2**n
    cmask = 1 << (n - 1 - control)
    tmask = 1 << (n - 1 - target)
    cols = np.arange(dim)
    rows = np.where(cols & cmask, cols ^ tmask, cols)
    u = np.zeros((dim, dim), dtype=complex)
    u[rows, cols] = 1.0
    return u


def gate_unitary(gate: PlacedGate, params: np.ndarray, n: int) -> np.ndarray:
    """Full 2^n x 2^n matrix of one placed gate."""
    if gate.kind is GateKind.CNOT:
        return _cnot_matrix(gate.qubits[0], gate.qubits[1], n)
    local = gate_matrix(gate.kind, params[gate.param_offset : gate.param_offset + gate.kind.num_params])
    return _embed_1q(local, gate.qubits[0], n)


def _check_params(c: Circuit, params) -> np.ndarray:
    p = np.asarray(params, dtype=float).reshape(-1)
    if p.size != c.num_params:
        raise ValueError(f"circuit takes {c.num_params} parameters, got {p.size}")
    return p


def unitary_of(c: Circuit, params) -> np.ndarray:
    """Unitary implemented by the circuit at the given parameter values."""
    p = _check_params(c, params)
    u = np.eye(2**c.n, dtype=complex)
    for gate in c.gates:
        u = gate_unitary(gate, p, c.n) @ u
    return u


def _apply_1q_tensor(psi: np.ndarray, g: np.ndarray, q: int) -> np.ndarray:
    moved = np.tensordot(g, psi, axes=([1], [q]))
    return np.moveaxis(moved, 0, q)


def _apply_cnot_tensor(psi: np.ndarray, control: int, target: int) -> np.ndarray:
    out = psi.copy()
    idx = [slice(None)] * psi.ndim
    idx[control] = 1
    flip_axis = target if target < control else target - 1
    out[tuple(idx)] = np.flip(psi[tuple(idx)], axis=flip_axis)
    return out


def apply(c: Circuit, params, s: StateVector) -> StateVector:
    """Statevector after the circuit, by per-gate kernels.

    Never materializes the circuit unitary; cost O(2^n) per one-qubit gate.
    """
    p = _check_params(c, params)
    if s.n != c.n:
        raise ValueError(f"state has {s.n} qubits but circuit has {c.n}")
    psi = s.amps.reshape([2] * c.n)
    for gate in c.gates:
        if gate.kind is GateKind.CNOT:
            psi = _apply_cnot_tensor(psi, gate.qubits[0], gate.qubits[1])
        else:
            local = gate_matrix(
                gate.kind, p[gate.param_offset : gate.param_offset + gate.kind.num_params]
            )
            psi = _apply_1q_tensor(psi, local, gate.qubits[0])
    return StateVector(psi.reshape(-1))


def unitary_jacobian(c: Circuit, params) -> list[np.ndarray]:
    """Derivative of the circuit unitary with respect to each parameter.

    Returns one 2^n x 2^n matrix per parameter, in parameter order: the
    derivative of a rotation gate inserts the generator factor at the gate's
    site between the gate products before and after it.
    """
    p = _check_params(c, params)
    n = c.n
    dim = 2**n
    mats = [gate_unitary(g, p, n) for g in c.gates]
    prefixes = [np.eye(dim, dtype=complex)]
    for m in mats:
        prefixes.append(m @ prefixes[-1])
    suffix = np.eye(dim, dtype=complex)
    out: list[tuple[int, np.ndarray]] = []
    for i in range(len(c.gates) - 1, -1, -1):
        gate = c.gates[i]
        if gate.kind.num_params:
            local = p[gate.param_offset : gate.param_offset + gate.kind.num_params]
            for k, dg in enumerate(gate_derivatives(gate.kind, local)):
                du = suffix @ _embed_1q(dg, gate.qubits[0], n) @ prefixes[i]
                out.append((gate.param_offset + k, du))
        suffix = suffix @ mats[i]
    out.sort(key=lambda t: t[0])
    return [du for _, du in out]


def remap_qubits(c: Circuit, n_new: int, mapping: Sequence[int]) -> Circuit:
    """Copy a circuit onto different qubit indices of a larger register."""
    mapping = [int(q) for q in mapping]
    if len(mapping) != c.n:
        raise ValueError(f"mapping must list {c.n} target qubits")
    if any(not 0 <= q < n_new for q in mapping) or len(set(mapping)) != len(mapping):
        raise ValueError("mapping must be distinct qubits inside the new register")
    ops = [(g.kind, tuple(mapping[q] for q in g.qubits)) for g in c.gates]
    return Circuit.from_ops(n_new, ops)


def concat(n: int, parts: Sequence[tuple[Circuit, np.ndarray]]) -> tuple[Circuit, np.ndarray]:
    """Concatenate circuits on a shared register, merging parameter vectors."""
    ops: list[tuple[GateKind, tuple[int, ...]]] = []
    params: list[np.ndarray] = []
    for circ, p in parts:
        if circ.n != n:
            raise ValueError(f"part on {circ.n} qubits cannot join an {n}-qubit register")
        ops.extend((g.kind, g.qubits) for g in circ.gates)
        params.append(_check_params(circ, p))
    merged = np.concatenate(params) if params else np.zeros(0)
    return Circuit.from_ops(n, ops), merged
