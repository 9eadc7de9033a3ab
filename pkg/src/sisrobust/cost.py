"""Vaccination cost model."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["CostModel", "cost"]


@dataclass(frozen=True)
class CostModel:
    """Per-node bounds on the complementary recovery rate and the induced cost.

    ``g_i(dc) = (1/dc - 1/upper_i) / (1/lower_i - 1/upper_i)`` so that keeping
    the natural rate costs nothing and the fastest recovery costs one unit.
    """

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=float).ravel()
        hi = np.asarray(self.upper, dtype=float).ravel()
        if lo.shape != hi.shape:
            raise ValueError("lower and upper must have equal length")
        if np.any(lo <= 0) or np.any(lo >= hi) or np.any(hi > 1):
            raise ValueError("need 0 < lower < upper <= 1")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def homogeneous(cls, n: int, lower: float, upper: float) -> "CostModel":
        return cls(np.full(n, lower), np.full(n, upper))

    @classmethod
    def from_delta0(cls, delta0, lower) -> "CostModel":
        """Upper bound is the natural complementary rate ``1 - delta0``."""
        upper = 1.0 - np.asarray(delta0, dtype=float)
        return cls(np.broadcast_to(lower, upper.shape).copy(), upper)

    @property
    def n(self) -> int:
        return self.lower.size

    @property
    def k(self) -> np.ndarray:
        """Coefficient of ``1/dc`` in the cost, ``1 / (1/lower - 1/upper)``."""
        return 1.0 / (1.0 / self.lower - 1.0 / self.upper)

    def __call__(self, node: int, dc: float) -> float:
        return cost(self, node, dc)

    def total(self, dc, control) -> float:
        dc = np.asarray(dc, dtype=float)
        idx = np.asarray(sorted(control), dtype=int)
        if idx.size == 0:
            return 0.0
        return float(np.sum(self.k[idx] * (1.0 / dc[idx] - 1.0 / self.upper[idx])))

    def inverse(self, node: int, spend: float) -> float:
        """Rate reached at ``node`` by investing ``spend`` in [0, 1]."""
        return 1.0 / (spend / self.k[node] + 1.0 / self.upper[node])


def cost(model: CostModel, node: int, dc_value: float, rtol: float = 1e-12) -> float:
    lo, hi = model.lower[node], model.upper[node]
    if not lo * (1 - rtol) <= dc_value <= hi * (1 + rtol):
        raise ValueError(f"dc={dc_value} outside [{lo}, {hi}] at node {node}")
    return float((1.0 / dc_value - 1.0 / hi) / (1.0 / lo - 1.0 / hi))
