"""Robust allocation of recovery resources for SIS epidemics on uncertain contact networks."""

from .allocate import (
    AllocationResult,
    InfeasibleProblemError,
    certify,
    evaluate_allocation,
    optimal_allocate,
    robust_allocate,
    worst_case_rho,
)
from .cost import CostModel, cost
from .epidemic import ObservationSet, Trajectory, linear_rollout, observe, simulate, sis_step
from .experiments import RunConfig, SweepResult, compare_allocations, generate_network, sweep_sensors, sweep_T
from .network import ContactNetwork, inf_max_value, is_strongly_connected, spectral_radius, state_matrix
from .solver import SolverOptions, solve
from .uncertainty import UncertaintyModel, build_model, contains, sample_matrices

__version__ = "0.1.0"

__all__ = [
    "AllocationResult",
    "ContactNetwork",
    "CostModel",
    "InfeasibleProblemError",
    "ObservationSet",
    "RunConfig",
    "SolverOptions",
    "SweepResult",
    "Trajectory",
    "UncertaintyModel",
    "build_model",
    "certify",
    "compare_allocations",
    "contains",
    "cost",
    "evaluate_allocation",
    "generate_network",
    "inf_max_value",
    "is_strongly_connected",
    "linear_rollout",
    "observe",
    "optimal_allocate",
    "robust_allocate",
    "sample_matrices",
    "simulate",
    "sis_step",
    "solve",
    "spectral_radius",
    "state_matrix",
    "sweep_T",
    "sweep_sensors",
    "worst_case_rho",
]
