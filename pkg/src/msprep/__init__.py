"""msprep: numerical synthesis of circuits mapping m states to m states.

State preparation (m = 1), full unitary synthesis (m = 2^n), isometries,
and everything in between share one engine: a Gram-matrix test decides
whether the mapping is exactly realizable, a constructive completion
produces one realizing unitary, and a bottom-up template search instantiates
parameterized circuits against the trace cost to minimize CNOT count.
"""

from .apps import (
    BlockSpec,
    cat_state_circuit,
    cat_state_target,
    ghz_ladder,
    heisenberg_block_system,
    heisenberg_hamiltonian,
)
from .circuit import (
    Circuit,
    ConnectivityGraph,
    GateKind,
    PlacedGate,
    apply,
    concat,
    gate_matrix,
    remap_qubits,
    unitary_jacobian,
    unitary_of,
)
from .cost import (
    CostContext,
    RankDeficientError,
    alt_cost,
    msp_cost,
    msp_cost_and_grad,
    state_prep_cost,
)
from .instantiate import InstantiateConfig, InstantiateResult, instantiate
from .problem import ProblemFormatError, load_problem, save_problem
from .qasm import QasmError, emit_qasm, parse_qasm
from .states import (
    DEFAULT_SOLVABILITY_TOL,
    GramMatrix,
    OrthonormalizedSystem,
    SolvabilityReport,
    StateSystem,
    StateVector,
    UnsolvableSystemError,
    check_solvable,
    complete_unitary,
    gram,
    haar_unitary,
    orthonormalize,
    pad_isometry,
    restrict_unitary,
)
from .synth import SynthConfig, SynthesisResult, synthesize, synthesize_via_completion

__version__ = "0.1.0"

__all__ = [
    "BlockSpec",
    "Circuit",
    "ConnectivityGraph",
    "CostContext",
    "DEFAULT_SOLVABILITY_TOL",
    "GateKind",
    "GramMatrix",
    "InstantiateConfig",
    "InstantiateResult",
    "OrthonormalizedSystem",
    "PlacedGate",
    "ProblemFormatError",
    "QasmError",
    "RankDeficientError",
    "SolvabilityReport",
    "StateSystem",
    "StateVector",
    "SynthConfig",
    "SynthesisResult",
    "UnsolvableSystemError",
    "alt_cost",
    "apply",
    "cat_state_circuit",
    "cat_state_target",
    "check_solvable",
    "complete_unitary",
    "concat",
    "emit_qasm",
    "gate_matrix",
    "ghz_ladder",
    "gram",
    "haar_unitary",
    "heisenberg_block_system",
    "heisenberg_hamiltonian",
    "instantiate",
    "load_problem",
    "msp_cost",
    "msp_cost_and_grad",
    "orthonormalize",
    "pad_isometry",
    "parse_qasm",
    "remap_qubits",
    "restrict_unitary",
    "save_problem",
    "state_prep_cost",
    "synthesize",
    "synthesize_via_completion",
    "unitary_jacobian",
    "unitary_of",
]
