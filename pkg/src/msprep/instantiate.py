"""Fit a circuit template's parameters to a state system.

Multistart quasi-Newton minimization of the mapping cost with analytic
gradients and a strong-Wolfe line search.  Initial angles come from a
counter-based PRNG keyed by (seed, start index), so every start is
reproducible and independent of evaluation order; restarts may therefore
run concurrently without changing the reported best.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .circuit import Circuit
from .cost import _DENSE_QUBIT_LIMIT, CostContext, circuit_cost, msp_cost_and_grad
from .states import (
    DEFAULT_SOLVABILITY_TOL,
    StateSystem,
    UnsolvableSystemError,
    check_solvable,
)


@dataclass(frozen=True)
class InstantiateConfig:
    success_threshold: float = 1e-8
    max_iters: int = 1000
    num_starts: int = 8
    seed: int = 0
    gradient_tolerance: float = 1e-10

    def __post_init__(self):
        if not 0 < self.success_threshold < 1:
            raise ValueError("success_threshold must lie in (0, 1)")
        if self.max_iters <= 0 or self.num_starts <= 0:
            raise ValueError("max_iters and num_starts must be positive")
        if self.gradient_tolerance <= 0:
            raise ValueError("gradient_tolerance must be positive")


@dataclass(frozen=True)
class InstantiateResult:
    params: np.ndarray
    final_cost: float
    converged: bool
    starts_used: int
    iterations_total: int


def start_angles(seed: int, start: int, count: int) -> np.ndarray:
    """Initial angles in [0, 2pi) from a Philox stream keyed (seed, start)."""
    gen = np.random.Generator(np.random.Philox(key=np.array([seed, start], dtype=np.uint64)))
    return gen.uniform(0.0, 2.0 * np.pi, count)


def _minimize_once(ctx: CostContext, c: Circuit, x0: np.ndarray, cfg: InstantiateConfig):
    """One quasi-Newton descent; returns (params, cost, iterations, history)."""
    if c.n <= _DENSE_QUBIT_LIMIT:
        kinds, qa, qb, poff = c.packed
        x, value, nit, _, hist = _kernels.lbfgs_minimize(
            c.n,
            kinds,
            qa,
            qb,
            poff,
            np.ascontiguousarray(x0, dtype=float),
            np.ascontiguousarray(ctx.v_mat),
            np.ascontiguousarray(ctx.w_mat),
            ctx.m,
            cfg.max_iters,
            10 * cfg.max_iters,
            cfg.gradient_tolerance,
            1e-16,
        )
        return x, float(value), int(nit), hist
    # very large registers go through the numpy statevector route
    from scipy.optimize import minimize

    res = minimize(
        lambda x: msp_cost_and_grad(ctx, c, x),
        x0,
        jac=True,
        method="L-BFGS-B",
        options={
            "maxiter": cfg.max_iters,
            "maxfun": 10 * cfg.max_iters,
            "gtol": cfg.gradient_tolerance,
            "ftol": 1e-16,
        },
    )
    return np.asarray(res.x, dtype=float), float(res.fun), int(res.nit), None


def instantiate(
    c: Circuit,
    sys: StateSystem,
    cfg: InstantiateConfig | None = None,
    warm_start: np.ndarray | None = None,
    solvability_tol: float = DEFAULT_SOLVABILITY_TOL,
) -> InstantiateResult:
    """Fit the template's parameters to map the system's inputs to outputs.

    Runs up to ``cfg.num_starts`` local minimizations from pseudo-random
    initial angles (plus ``warm_start`` first, when given), keeps the best
    by (cost, start order), and exits early on the first start that reaches
    ``cfg.success_threshold``.  Refuses systems that are not exactly
    mappable, attaching the solvability report to the raised error.
    """
    cfg = cfg or InstantiateConfig()
    if c.n != sys.n:
        raise ValueError(f"circuit has {c.n} qubits but system has {sys.n}")
    report = check_solvable(sys, solvability_tol)
    if not report.solvable:
        raise UnsolvableSystemError(report)
    ctx = CostContext.from_system(sys)

    if c.num_params == 0:
        value = circuit_cost(ctx, c, np.zeros(0))
        return InstantiateResult(
            params=np.zeros(0),
            final_cost=value,
            converged=value <= cfg.success_threshold,
            starts_used=0,
            iterations_total=0,
        )

    starts: list[np.ndarray] = []
    if warm_start is not None:
        w = np.asarray(warm_start, dtype=float).reshape(-1)
        if w.size != c.num_params:
            raise ValueError(f"warm start has {w.size} entries, circuit takes {c.num_params}")
        starts.append(w)
    starts.extend(start_angles(cfg.seed, j, c.num_params) for j in range(cfg.num_starts))

    best_params = starts[0]
    best_cost = np.inf
    iterations = 0
    used = 0
    for x0 in starts:
        params, value, nit, _ = _minimize_once(ctx, c, x0, cfg)
        iterations += nit
        used += 1
        if value < best_cost:
            best_cost = value
            best_params = params
        if best_cost <= cfg.success_threshold:
            break
    return InstantiateResult(
        params=best_params,
        final_cost=best_cost,
        converged=best_cost <= cfg.success_threshold,
        starts_used=used,
        iterations_total=iterations,
    )
