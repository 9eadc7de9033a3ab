"""Robust and known-network allocation of recovery resources."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .cost import CostModel, cost
from .gp import LAMBDA, assemble_known_network, assemble_robust_allocation, assemble_worst_case, dc_name
from .network import ReducibleMatrixError, is_irreducible, spectral_radius, state_matrix
from .solver import Solution, SolverOptions, solve
from .uncertainty import UncertaintyModel, sample_matrices

__all__ = [
    "CostModel",
    "cost",
    "AllocationResult",
    "InfeasibleProblemError",
    "robust_allocate",
    "optimal_allocate",
    "worst_case_rho",
    "evaluate_allocation",
    "certify",
    "model_id",
]


class InfeasibleProblemError(RuntimeError):
    pass


@dataclass(frozen=True)
class AllocationResult:
    dc: np.ndarray
    lambda_star: float
    spend: float
    status: str
    kkt_residual: float
    provenance: dict = field(default_factory=dict)
    newton_steps: int = 0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["dc"] = [float(x) for x in self.dc]
        d.pop("newton_steps")
        return d

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict(), indent=1, sort_keys=True)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text + "\n")
        return text

    @classmethod
    def from_dict(cls, d: dict) -> "AllocationResult":
        return cls(np.asarray(d["dc"], dtype=float), float(d["lambda_star"]), float(d["spend"]), d["status"], float(d["kkt_residual"]), dict(d.get("provenance", {})))


def model_id(model: UncertaintyModel) -> str:
    """Short content hash identifying an uncertainty model."""
    return hashlib.sha256(model.to_json().encode()).hexdigest()[:16]


def _extract(sol: Solution, prog, cost_model: CostModel | None, control, n: int):
    if sol.status == "infeasible":
        raise InfeasibleProblemError("allocation program has no feasible point")
    dc = np.exp([sol.value(dc_name(i)) for i in range(n)])
    if cost_model is not None:
        dc = np.clip(dc, cost_model.lower, cost_model.upper)
        spend = cost_model.total(dc, control)
    else:
        spend = 0.0
    return dc, math.exp(sol.objective), spend


def _control(n, control, budget):
    if control is None:
        control = range(n)
    return sorted({int(i) for i in control}) if budget > 0 else []


def robust_allocate(model: UncertaintyModel, cost_model: CostModel, budget: float, control=None, opts: SolverOptions | None = None) -> AllocationResult:
    """Allocation minimizing the worst-case spectral radius over ``model``.

    ``lambda_star`` is the optimal value of the dualized program, an upper
    bound on ``rho(B + diag(dc))`` for every ``B`` in the model.
    """
    prog = assemble_robust_allocation(model, cost_model, budget, control)
    sol = solve(prog, opts)
    ctrl = _control(model.n, control, budget)
    dc, lam, spend = _extract(sol, prog, cost_model, ctrl, model.n)
    prov = {"mode": "robust", "model": model_id(model), "budget": float(budget), "control": ctrl}
    return AllocationResult(dc, lam, spend, sol.status, sol.kkt_residual, prov, sol.newton_steps)


def optimal_allocate(B_true, cost_model: CostModel, budget: float, control=None, opts: SolverOptions | None = None) -> AllocationResult:
    """Allocation minimizing ``rho(B_true + diag(dc))`` for a known rate matrix."""
    B = np.asarray(B_true, dtype=float)
    if not is_irreducible(B):
        raise ReducibleMatrixError("rate matrix is reducible")
    prog = assemble_known_network(B, cost_model, budget, control)
    sol = solve(prog, opts)
    ctrl = _control(B.shape[0], control, budget)
    dc, lam, spend = _extract(sol, prog, cost_model, ctrl, B.shape[0])
    prov = {"mode": "optimal", "budget": float(budget), "control": ctrl}
    return AllocationResult(dc, lam, spend, sol.status, sol.kkt_residual, prov, sol.newton_steps)


def worst_case_rho(model: UncertaintyModel, dc_fixed, opts: SolverOptions | None = None) -> float:
    """Largest ``rho(B + diag(dc_fixed))`` over ``B`` in the model."""
    prog = assemble_worst_case(model, dc_fixed)
    sol = solve(prog, opts)
    if sol.status == "infeasible":
        raise InfeasibleProblemError("worst-case program has no feasible point")
    return math.exp(sol.objective)


def evaluate_allocation(B_true, dc) -> float:
    M = state_matrix(B_true, dc)
    if not is_irreducible(M):
        raise ReducibleMatrixError("state matrix is reducible")
    return spectral_radius(M)[0]


def certify(model: UncertaintyModel, dc, lambda_star: float, count: int = 200, seed: int = 0, steps: int = 50):
    """Largest sampled ``rho`` over ``count`` matrices of the model and whether it stays below ``lambda_star``."""
    worst = max(evaluate_allocation(B, dc) for B in sample_matrices(model, count, seed, steps))
    return worst, bool(worst <= lambda_star + 1e-6)
