"""State vectors, state systems, and the overlap-matrix solvability machinery.

Bit ordering convention: qubit 0 is the most significant bit of the basis
index, so for two qubits the amplitude order is |00>, |01>, |10>, |11>.
All modules and file formats in this package pin this convention.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

# Default tolerance on the max elementwise overlap-matrix mismatch below
# which a system is accepted as exactly mappable.  Well above double-precision
# eigendecomposition noise, far below physically meaningful mismatches.
DEFAULT_SOLVABILITY_TOL = 1e-8

# A constructor input whose norm deviates from 1 by more than this is
# rejected instead of silently rescaled.
_NORM_SLACK = 1e-6

# Residual below which a candidate completion column is considered already
# spanned and skipped.
_COMPLETION_RESIDUAL = 1e-8


class UnsolvableSystemError(ValueError):
    """Raised when an operation requires an exactly mappable system.

    Carries the offending :class:`SolvabilityReport` as ``report``.
    """

    def __init__(self, report: "SolvabilityReport"):
        super().__init__(
            "state system is not exactly mappable: overlap-matrix mismatch "
            f"{report.max_abs_mismatch:.3e} exceeds tolerance {report.tolerance_used:.3e}"
        )
        self.report = report


def _freeze(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


class StateVector:
    """Normalized pure state of ``n`` qubits as a complex amplitude vector.

    The constructor renormalizes inputs whose norm deviates from 1 by at
    most 1e-6 and rejects anything further off, so malformed inputs fail
    loudly instead of being rescaled into garbage.
    """

    __slots__ = ("n", "amps")

    def __init__(self, amps):
        a = np.array(amps, dtype=complex).reshape(-1)
        if a.size < 2 or a.size & (a.size - 1):
            raise ValueError(f"amplitude count {a.size} is not a power of two >= 2")
        norm = float(np.linalg.norm(a))
        if abs(norm - 1.0) > _NORM_SLACK:
            raise ValueError(f"state norm {norm!r} deviates from 1 by more than {_NORM_SLACK}")
        self.amps = _freeze(a / norm)
        self.n = a.size.bit_length() - 1

    @classmethod
    def basis(cls, n: int, index: int) -> "StateVector":
        """Computational basis state |index> on ``n`` qubits."""
        if not 0 <= index < 2**n:
            raise ValueError(f"basis index {index} out of range for {n} qubits")
        a = np.zeros(2**n, dtype=complex)
        a[index] = 1.0
        return cls(a)

    @property
    def dim(self) -> int:
        return self.amps.size

    def __repr__(self) -> str:
        return f"StateVector(n={self.n})"


class StateSystem:
    """Ordered input/output state pairs sharing one qubit count."""

    __slots__ = ("n", "pairs")

    def __init__(self, pairs: Sequence[tuple[StateVector, StateVector]]):
        pairs = tuple((vin, vout) for vin, vout in pairs)
        if not pairs:
            raise ValueError("state system needs at least one pair")
        n = pairs[0][0].n
        for vin, vout in pairs:
            if vin.n != n or vout.n != n:
                raise ValueError("all states in a system must share the qubit count")
        if len(pairs) > 2**n:
            raise ValueError(f"{len(pairs)} pairs exceed the dimension 2^{n}")
        self.pairs = pairs
        self.n = n

    @classmethod
    def from_matrices(cls, v_mat, w_mat) -> "StateSystem":
        """Build a system from 2^n x m column matrices of inputs/outputs."""
        v = np.asarray(v_mat, dtype=complex)
        w = np.asarray(w_mat, dtype=complex)
        if v.ndim != 2 or v.shape != w.shape:
            raise ValueError(f"column matrices must share a 2D shape, got {v.shape} and {w.shape}")
        return cls([(StateVector(v[:, i]), StateVector(w[:, i])) for i in range(v.shape[1])])

    @property
    def m(self) -> int:
        return len(self.pairs)

    @property
    def inputs(self) -> list[StateVector]:
        return [p[0] for p in self.pairs]

    @property
    def outputs(self) -> list[StateVector]:
        return [p[1] for p in self.pairs]

    @property
    def v_matrix(self) -> np.ndarray:
        """2^n x m matrix whose columns are the input states in pair order."""
        return np.stack([p[0].amps for p in self.pairs], axis=1)

    @property
    def w_matrix(self) -> np.ndarray:
        """2^n x m matrix whose columns are the output states in pair order."""
        return np.stack([p[1].amps for p in self.pairs], axis=1)

    def __repr__(self) -> str:
        return f"StateSystem(n={self.n}, m={self.m})"


class GramMatrix:
    """Matrix of pairwise overlaps <s_i|s_j> of a normalized state list."""

    __slots__ = ("entries",)

    def __init__(self, entries):
        e = np.array(entries, dtype=complex)
        if e.ndim != 2 or e.shape[0] != e.shape[1]:
            raise ValueError(f"overlap matrix must be square, got shape {e.shape}")
        if np.max(np.abs(e - e.conj().T)) > 1e-12:
            raise ValueError("overlap matrix is not Hermitian")
        if np.min(np.linalg.eigvalsh(e)) < -1e-10:
            raise ValueError("overlap matrix is not positive semi-definite")
        if np.max(np.abs(np.diag(e) - 1.0)) > 1e-10:
            raise ValueError("overlap matrix diagonal differs from 1; states not normalized")
        self.entries = _freeze(e)

    @property
    def m(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class SolvabilityReport:
    """Outcome of the exact-mappability test on a state system."""

    gram_in: GramMatrix
    gram_out: GramMatrix
    max_abs_mismatch: float
    solvable: bool
    tolerance_used: float


@dataclass(frozen=True)
class OrthonormalizedSystem:
    """Shared-eigenbasis orthonormal column frames for a mappable system.

    ``v_tilde`` and ``w_tilde`` are 2^n x r matrices with orthonormal columns
    spanning the input/output spans; ``eigenvalues`` are the r kept overlap
    eigenvalues in descending order; ``s_matrix`` holds the corresponding
    eigenvector columns of the input overlap matrix.
    """

    v_tilde: np.ndarray
    w_tilde: np.ndarray
    eigenvalues: np.ndarray
    rank: int
    s_matrix: np.ndarray


def gram(states: Sequence[StateVector]) -> GramMatrix:
    """Overlap matrix of a state list, conjugate-linear in the first slot."""
    states = list(states)
    if not states:
        raise ValueError("need at least one state")
    n = states[0].n
    if any(s.n != n for s in states):
        raise ValueError("states must share the qubit count")
    v = np.stack([s.amps for s in states], axis=1)
    return GramMatrix(v.conj().T @ v)


def check_solvable(sys: StateSystem, tol: float = DEFAULT_SOLVABILITY_TOL) -> SolvabilityReport:
    """Test whether some unitary maps every input to its output.

    A circuit realizing the mapping exists if and only if the input and
    output overlap matrices agree elementwise; the report records the
    largest absolute entry of their difference.
    """
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    gi = gram(sys.inputs)
    go = gram(sys.outputs)
    mismatch = float(np.max(np.abs(gi.entries - go.entries)))
    return SolvabilityReport(gi, go, mismatch, mismatch <= tol, tol)


def orthonormalize(
    sys: StateSystem,
    rank_cutoff: float | None = None,
    tol: float = DEFAULT_SOLVABILITY_TOL,
) -> OrthonormalizedSystem:
    """Diagonalize the shared overlap matrix and emit orthonormal frames.

    Eigenvalues at or below ``rank_cutoff`` (default: 1e-10 times the largest
    eigenvalue) are dropped along with their eigenvector columns, so nearly
    parallel inputs reduce the rank instead of blowing up the inverse root.

    Refuses systems whose input and output overlap matrices differ beyond
    ``tol``: with two different eigensystems the shared frame is ill-defined.
    """
    report = check_solvable(sys, tol)
    if not report.solvable:
        raise UnsolvableSystemError(report)
    o = report.gram_in.entries
    eigvals, s = np.linalg.eigh(o)
    order = np.argsort(-eigvals, kind="stable")
    eigvals, s = eigvals[order], s[:, order]
    if rank_cutoff is None:
        rank_cutoff = 1e-10 * float(eigvals[0])
    keep = eigvals > rank_cutoff
    eigvals, s = eigvals[keep], s[:, keep]
    rank = int(eigvals.size)
    if rank == 0:
        raise ValueError("overlap matrix has no eigenvalue above the rank cutoff")
    scale = s / np.sqrt(eigvals)[None, :]
    return OrthonormalizedSystem(
        v_tilde=_freeze(sys.v_matrix @ scale),
        w_tilde=_freeze(sys.w_matrix @ scale),
        eigenvalues=_freeze(eigvals.copy()),
        rank=rank,
        s_matrix=_freeze(s.copy()),
    )


def _complete_columns(q: np.ndarray) -> np.ndarray:
    """Extend orthonormal columns to a square unitary.

    Gram-Schmidt against the computational basis vectors in index order,
    skipping candidates whose residual is below 1e-8.  Deterministic, which
    keeps completed unitaries reproducible; no attempt is made to pick the
    completion with the shortest circuit.
    """
    d, r = q.shape
    cols = list(q.T)
    for k in range(d):
        if len(cols) == d:
            break
        basis = np.stack(cols, axis=0)
        e = np.zeros(d, dtype=complex)
        e[k] = 1.0
        # two projection passes keep the result orthonormal to ~1e-15
        for _ in range(2):
            e = e - basis.T @ (basis.conj() @ e)
        resid = np.linalg.norm(e)
        if resid >= _COMPLETION_RESIDUAL:
            cols.append(e / resid)
    if len(cols) != d:
        raise ValueError("failed to complete columns to a unitary")
    return np.stack(cols, axis=1)


def complete_unitary(sys: StateSystem, tol: float = DEFAULT_SOLVABILITY_TOL) -> np.ndarray:
    """Construct one unitary that maps every input column to its output.

    The orthonormal frames of the two spans are completed to square
    unitaries and multiplied; any columns added during completion are
    orthogonal to the input span, so they cannot disturb the mapping.
    """
    ortho = orthonormalize(sys, tol=tol)
    v_full = _complete_columns(ortho.v_tilde)
    w_full = _complete_columns(ortho.w_tilde)
    return w_full @ v_full.conj().T


def pad_isometry(columns: Sequence[StateVector], n_in: int) -> StateSystem:
    """Recast an isometry as a state system by padding ancilla |0> inputs.

    ``columns`` are the images of the 2^n_in computational basis states on
    ``n_out`` qubits.  The inputs become basis states of the first ``n_in``
    qubits with the remaining (least significant) qubits fixed to |0>.
    With ``n_in = 0`` this is plain state preparation.
    """
    columns = list(columns)
    if n_in < 0:
        raise ValueError("n_in must be nonnegative")
    if not columns:
        raise ValueError("need at least one column")
    n_out = columns[0].n
    if n_in > n_out:
        raise ValueError(f"n_in={n_in} exceeds output qubit count {n_out}")
    if len(columns) != 2**n_in:
        raise ValueError(f"expected {2**n_in} columns for n_in={n_in}, got {len(columns)}")
    shift = n_out - n_in
    pairs = [
        (StateVector.basis(n_out, k << shift), col) for k, col in enumerate(columns)
    ]
    return StateSystem(pairs)


def restrict_unitary(u: np.ndarray, basis_indices: Sequence[int]) -> StateSystem:
    """State system pinning a unitary's action on selected basis states.

    Pair k maps the computational basis state ``basis_indices[k]`` to the
    corresponding column of ``u``; the action elsewhere is left free, which
    is what lets a synthesizer beat full-unitary synthesis.
    """
    u = np.asarray(u, dtype=complex)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {u.shape}")
    dim = u.shape[0]
    if dim < 2 or dim & (dim - 1):
        raise ValueError(f"matrix dimension {dim} is not a power of two >= 2")
    n = dim.bit_length() - 1
    indices = [int(i) for i in basis_indices]
    if len(set(indices)) != len(indices):
        raise ValueError("basis indices must be distinct")
    if any(not 0 <= i < dim for i in indices):
        raise ValueError(f"basis indices must lie in [0, {dim})")
    return StateSystem(
        [(StateVector.basis(n, i), StateVector(u[:, i])) for i in indices]
    )


def haar_unitary(dim: int, seed: int) -> np.ndarray:
    """Haar-distributed random unitary, deterministic for a fixed seed.

    QR of a complex standard-Gaussian matrix with the R diagonal's phases
    folded back in (Mezzadri's construction).
    """
    if dim < 1:
        raise ValueError("dimension must be at least 1")
    rng = np.random.default_rng(seed)
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))
