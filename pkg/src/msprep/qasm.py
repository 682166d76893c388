"""OpenQASM 2.0 emission and parsing over the rx/ry/rz/u3/cx gate set.

Angles are emitted with 17 significant digits.  Rotation angles (and the
U3 theta) are wrapped modulo 4*pi, the U3 phase angles modulo 2*pi: those
are the true matrix periods under the exp(-i*theta*P/2) convention, so a
parse of the emitted text reproduces the unitary exactly, not merely up to
a global sign.
"""

from __future__ import annotations

import ast
import math
import re

import numpy as np

from .circuit import Circuit, GateKind

HEADER = 'OPENQASM 2.0;\ninclude "qelib1.inc";'

_SUPPORTED = {kind.value: kind for kind in GateKind}


class QasmError(ValueError):
    """Raised for text outside the supported OpenQASM 2.0 subset."""


def _wrap_angles(kind: GateKind, values: np.ndarray) -> list[float]:
    if kind is GateKind.U3:
        t, phi, lam = values
        return [float(t % (4 * math.pi)), float(phi % (2 * math.pi)), float(lam % (2 * math.pi))]
    return [float(v % (4 * math.pi)) for v in values]


def emit_qasm(c: Circuit, params) -> str:
    """OpenQASM 2.0 text for the circuit at the given parameter values."""
    p = np.asarray(params, dtype=float).reshape(-1)
    if p.size != c.num_params:
        raise ValueError(f"circuit takes {c.num_params} parameters, got {p.size}")
    lines = [HEADER, f"qreg q[{c.n}];"]
    for gate in c.gates:
        if gate.kind is GateKind.CNOT:
            lines.append(f"cx q[{gate.qubits[0]}],q[{gate.qubits[1]}];")
        else:
            raw = p[gate.param_offset : gate.param_offset + gate.kind.num_params]
            angles = ",".join(f"{a:.17g}" for a in _wrap_angles(gate.kind, raw))
            lines.append(f"{gate.kind.value}({angles}) q[{gate.qubits[0]}];")
    return "\n".join(lines) + "\n"


def _eval_angle(text: str) -> float:
    """Evaluate an angle expression: numbers, pi, + - * / and parentheses."""
    try:
        node = ast.parse(text.strip(), mode="eval").body
    except SyntaxError as exc:
        raise QasmError(f"bad angle expression: {text!r}") from exc

    def ev(nd) -> float:
        if isinstance(nd, ast.Constant) and isinstance(nd.value, (int, float)):
            return float(nd.value)
        if isinstance(nd, ast.Name) and nd.id == "pi":
            return math.pi
        if isinstance(nd, ast.UnaryOp) and isinstance(nd.op, (ast.UAdd, ast.USub)):
            v = ev(nd.operand)
            return -v if isinstance(nd.op, ast.USub) else v
        if isinstance(nd, ast.BinOp):
            left, right = ev(nd.left), ev(nd.right)
            if isinstance(nd.op, ast.Add):
                return left + right
            if isinstance(nd.op, ast.Sub):
                return left - right
            if isinstance(nd.op, ast.Mult):
                return left * right
            if isinstance(nd.op, ast.Div):
                return left / right
        raise QasmError(f"bad angle expression: {text!r}")

    return ev(node)


_GATE_RE = re.compile(r"^(?P<name>[A-Za-z_][\w]*)\s*(?:\((?P<args>[^)]*)\))?\s*(?P<rest>.*)$")
_QREG_RE = re.compile(r"^qreg\s+(?P<name>[A-Za-z_][\w]*)\s*\[\s*(?P<size>\d+)\s*\]$")
_QUBIT_RE = re.compile(r"^(?P<name>[A-Za-z_][\w]*)\s*\[\s*(?P<index>\d+)\s*\]$")


def parse_qasm(text: str) -> tuple[Circuit, np.ndarray]:
    """Parse OpenQASM 2.0 text emitted for the supported gate set.

    One quantum register, gates rx/ry/rz/u3/cx only; anything else raises
    :class:`QasmError`.
    """
    stripped = re.sub(r"//[^\n]*", "", text)
    statements = [s.strip() for s in stripped.replace("\n", " ").split(";")]
    statements = [s for s in statements if s]
    if not statements or not statements[0].startswith("OPENQASM"):
        raise QasmError("missing OPENQASM header")
    if statements[0].split() != ["OPENQASM", "2.0"]:
        raise QasmError(f"unsupported version statement: {statements[0]!r}")

    reg_name = None
    n = 0
    ops: list[tuple[GateKind, tuple[int, ...]]] = []
    params: list[float] = []

    def qubit_index(token: str) -> int:
        match = _QUBIT_RE.match(token.strip())
        if not match or match.group("name") != reg_name:
            raise QasmError(f"bad qubit reference: {token!r}")
        idx = int(match.group("index"))
        if idx >= n:
            raise QasmError(f"qubit index {idx} outside register of size {n}")
        return idx

    for stmt in statements[1:]:
        if stmt.startswith("include"):
            continue
        qreg = _QREG_RE.match(stmt)
        if qreg:
            if reg_name is not None:
                raise QasmError("multiple quantum registers are not supported")
            reg_name = qreg.group("name")
            n = int(qreg.group("size"))
            if n < 1:
                raise QasmError("empty quantum register")
            continue
        match = _GATE_RE.match(stmt)
        if not match:
            raise QasmError(f"unparseable statement: {stmt!r}")
        name = match.group("name")
        if name not in _SUPPORTED:
            raise QasmError(f"unsupported gate or statement: {name!r}")
        if reg_name is None:
            raise QasmError("gate before qreg declaration")
        kind = _SUPPORTED[name]
        args = match.group("args")
        angles = [_eval_angle(a) for a in args.split(",")] if args else []
        if len(angles) != kind.num_params:
            raise QasmError(f"{name} takes {kind.num_params} angle(s), got {len(angles)}")
        qubits = tuple(qubit_index(tok) for tok in match.group("rest").split(","))
        if len(qubits) != kind.num_qubits:
            raise QasmError(f"{name} takes {kind.num_qubits} qubit(s), got {len(qubits)}")
        ops.append((kind, qubits))
        params.extend(angles)

    if reg_name is None:
        raise QasmError("missing qreg declaration")
    return Circuit.from_ops(n, ops), np.array(params, dtype=float)
