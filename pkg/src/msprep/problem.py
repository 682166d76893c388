"""JSON problem files: the on-disk form of a state system.

Schema::

    {
      "n": 2,
      "pairs": [
        {"in": [[re, im], ...], "out": [[re, im], ...]},
        ...
      ],
      "coupling": [[a, b], ...]        // optional
    }

Amplitudes are [real, imag] pairs in computational-basis order with qubit 0
as the most significant bit; each array must have length 2^n.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .circuit import ConnectivityGraph
from .states import StateSystem, StateVector


class ProblemFormatError(ValueError):
    """Raised for files that do not match the problem schema."""


def _parse_amplitudes(raw, dim: int, where: str) -> np.ndarray:
    if not isinstance(raw, list):
        raise ProblemFormatError(f"{where}: expected a list of [re, im] pairs")
    if len(raw) != dim:
        raise ProblemFormatError(f"{where}: expected {dim} amplitudes, got {len(raw)}")
    amps = np.empty(dim, dtype=complex)
    for i, entry in enumerate(raw):
        if (
            not isinstance(entry, list)
            or len(entry) != 2
            or not all(isinstance(x, (int, float)) for x in entry)
        ):
            raise ProblemFormatError(f"{where}[{i}]: expected an [re, im] number pair")
        amps[i] = complex(entry[0], entry[1])
    return amps


def system_from_dict(doc: dict) -> tuple[StateSystem, ConnectivityGraph | None]:
    if not isinstance(doc, dict):
        raise ProblemFormatError("top level: expected a JSON object")
    if "n" not in doc or not isinstance(doc["n"], int) or doc["n"] < 1:
        raise ProblemFormatError("field 'n': expected a positive integer qubit count")
    n = doc["n"]
    dim = 2**n
    raw_pairs = doc.get("pairs")
    if not isinstance(raw_pairs, list) or not raw_pairs:
        raise ProblemFormatError("field 'pairs': expected a nonempty list")
    pairs = []
    for i, item in enumerate(raw_pairs):
        if not isinstance(item, dict) or "in" not in item or "out" not in item:
            raise ProblemFormatError(f"pairs[{i}]: expected an object with 'in' and 'out'")
        try:
            vin = StateVector(_parse_amplitudes(item["in"], dim, f"pairs[{i}].in"))
            vout = StateVector(_parse_amplitudes(item["out"], dim, f"pairs[{i}].out"))
        except ValueError as exc:
            raise ProblemFormatError(f"pairs[{i}]: {exc}") from exc
        pairs.append((vin, vout))
    try:
        system = StateSystem(pairs)
    except ValueError as exc:
        raise ProblemFormatError(str(exc)) from exc

    coupling = None
    if "coupling" in doc:
        raw_edges = doc["coupling"]
        if not isinstance(raw_edges, list):
            raise ProblemFormatError("field 'coupling': expected a list of [a, b] pairs")
        try:
            coupling = ConnectivityGraph.from_pairs(n, raw_edges)
        except (TypeError, ValueError) as exc:
            raise ProblemFormatError(f"field 'coupling': {exc}") from exc
    return system, coupling


def system_to_dict(sys: StateSystem, coupling: ConnectivityGraph | None = None) -> dict:
    def encode(v: StateVector) -> list[list[float]]:
        return [[float(a.real), float(a.imag)] for a in v.amps]

    doc = {
        "n": sys.n,
        "pairs": [{"in": encode(vi), "out": encode(vo)} for vi, vo in sys.pairs],
    }
    if coupling is not None:
        doc["coupling"] = [list(e) for e in coupling.sorted_edges()]
    return doc


def load_problem(path) -> tuple[StateSystem, ConnectivityGraph | None]:
    """Read and validate a problem file."""
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProblemFormatError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return system_from_dict(doc)


def save_problem(path, sys: StateSystem, coupling: ConnectivityGraph | None = None) -> None:
    Path(path).write_text(json.dumps(system_to_dict(sys, coupling), indent=2) + "\n")
