"""Discrete-time networked SIS dynamics and sensor observations."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .network import ContactNetwork

__all__ = [
    "Trajectory",
    "ObservationSet",
    "sis_step",
    "linear_step",
    "simulate",
    "linear_rollout",
    "observe",
    "save_observations_csv",
    "load_observations_csv",
]


def _check_rates(B, delta):
    if B.ndim != 2 or B.shape[0] != B.shape[1]:
        raise ValueError("B must be square")
    if np.any(B < 0) or np.any(B >= 1):
        raise ValueError("transmission rates must lie in [0, 1)")
    if delta.shape != (B.shape[0],):
        raise ValueError("delta has the wrong length")
    if np.any(delta <= 0) or np.any(delta >= 1):
        raise ValueError("recovery rates must lie in (0, 1)")


def sis_step(p, B, delta) -> np.ndarray:
    """One step of the mean-field SIS recursion.

    ``p_i' = (1 - p_i) (1 - prod_j (1 - B_ij p_j)) + (1 - delta_i) p_i``
    """
    p = np.asarray(p, dtype=float)
    B = np.asarray(B, dtype=float)
    delta = np.asarray(delta, dtype=float)
    _check_rates(B, delta)
    if p.shape != delta.shape:
        raise ValueError("p has the wrong length")
    if np.any(p < 0) or np.any(p > 1):
        raise ValueError("infection probabilities must lie in [0, 1]")
    # Off-pattern entries contribute a factor of exactly 1.
    escape = np.prod(1.0 - B * p[None, :], axis=1)
    return (1.0 - p) * (1.0 - escape) + (1.0 - delta) * p


def linear_step(p, B, dc) -> np.ndarray:
    """Linear upper-bound dynamics ``p' = (B + diag(dc)) p``; no clipping."""
    p = np.asarray(p, dtype=float)
    B = np.asarray(B, dtype=float)
    dc = np.asarray(dc, dtype=float)
    if B.ndim != 2 or B.shape[0] != B.shape[1] or p.shape != (B.shape[0],) or dc.shape != p.shape:
        raise ValueError("dimension mismatch")
    return B @ p + dc * p


@dataclass(frozen=True)
class Trajectory:
    """Nonlinear rollout ``states[t]`` for ``t = 0..T`` under natural recovery."""

    states: np.ndarray
    delta0: np.ndarray
    rates: np.ndarray

    @property
    def horizon(self) -> int:
        return self.states.shape[0] - 1

    @property
    def n(self) -> int:
        return self.states.shape[1]


@dataclass(frozen=True)
class ObservationSet:
    """Infection levels of the sensor nodes over ``t = 0..horizon``.

    ``values[t, k]`` is the level of node ``sensors[k]`` at time ``t``.
    """

    n: int
    sensors: tuple[int, ...]
    values: np.ndarray
    delta0: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2 or values.shape[1] != len(self.sensors):
            raise ValueError("values must be a (T+1) x |sensors| grid")
        if np.any(values < 0) or np.any(values > 1):
            raise ValueError("observed values must lie in [0, 1]")
        if len(self.delta0) != len(self.sensors):
            raise ValueError("delta0 must be given for each sensor")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "delta0", np.asarray(self.delta0, dtype=float))

    @property
    def horizon(self) -> int:
        return self.values.shape[0] - 1

    def prefix(self, T: int) -> "ObservationSet":
        """Observations restricted to ``t = 0..T``."""
        if not 0 <= T <= self.horizon:
            raise ValueError(f"T={T} outside 0..{self.horizon}")
        return ObservationSet(self.n, self.sensors, self.values[: T + 1], self.delta0)


def simulate(net: ContactNetwork, B, delta0, p0, T: int) -> Trajectory:
    """Roll the SIS recursion forward ``T`` steps with natural recovery rates."""
    B = np.asarray(B, dtype=float)
    if B.shape != (net.n, net.n):
        raise ValueError("B does not match the network size")
    if np.any(B[~net.support()] != 0):
        raise ValueError("B has entries outside the network's sparsity pattern")
    if T < 0:
        raise ValueError("T must be nonnegative")
    delta0 = np.broadcast_to(np.asarray(delta0, dtype=float), (net.n,)).copy()
    p = np.broadcast_to(np.asarray(p0, dtype=float), (net.n,)).copy()
    states = np.empty((T + 1, net.n))
    states[0] = p
    if T == 0:
        _check_rates(B, delta0)
        if np.any(p < 0) or np.any(p > 1):
            raise ValueError("infection probabilities must lie in [0, 1]")
    for t in range(T):
        states[t + 1] = sis_step(states[t], B, delta0)
    states.setflags(write=False)
    return Trajectory(states, delta0, B.copy())


def linear_rollout(B, dc, p0, T: int) -> np.ndarray:
    """``(T+1) x n`` array of the linear bound iterates starting at ``p0``."""
    p = np.asarray(p0, dtype=float)
    out = np.empty((T + 1, p.size))
    out[0] = p
    for t in range(T):
        out[t + 1] = linear_step(out[t], B, dc)
    return out


def observe(traj: Trajectory, sensors, noise: float = 0.0, seed: int | None = None) -> ObservationSet:
    """Restrict a trajectory to ``sensors``.

    ``noise > 0`` multiplies each value by ``1 + noise * N(0, 1)`` and clips
    to [0, 1]. Noisy series need not satisfy the recursion, so the data
    constraints built from them may exclude the true rates.
    """
    sensors = tuple(sorted({int(s) for s in sensors}))
    if not sensors:
        raise ValueError("sensor set is empty")
    if sensors[0] < 0 or sensors[-1] >= traj.n:
        raise ValueError("sensor index out of range")
    if noise < 0:
        raise ValueError("noise level must be nonnegative")
    idx = list(sensors)
    values = traj.states[:, idx].copy()
    if noise > 0:
        rng = np.random.default_rng(seed)
        values = np.clip(values * (1.0 + noise * rng.standard_normal(values.shape)), 0.0, 1.0)
    return ObservationSet(traj.n, sensors, values, traj.delta0[idx].copy())


def save_observations_csv(obs: ObservationSet, path) -> None:
    """Write ``t,node,p`` rows (1-based node ids, full float precision)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t", "node", "p"])
        for t in range(obs.horizon + 1):
            for k, node in enumerate(obs.sensors):
                writer.writerow([t, node + 1, repr(float(obs.values[t, k]))])


def load_observations_csv(path, n: int, delta0) -> ObservationSet:
    """Inverse of :func:`save_observations_csv`.

    ``delta0`` is either a scalar or a length-``n`` array of natural recovery rates.
    """
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["t", "node", "p"]:
            raise ValueError(f"{path}: expected header 't,node,p'")
        for row in reader:
            rows.append((int(row["t"]), int(row["node"]) - 1, float(row["p"])))
    if not rows:
        raise ValueError(f"{path}: no observations")
    sensors = sorted({r[1] for r in rows})
    T = max(r[0] for r in rows)
    col = {s: k for k, s in enumerate(sensors)}
    values = np.full((T + 1, len(sensors)), np.nan)
    for t, node, p in rows:
        values[t, col[node]] = p
    if np.isnan(values).any():
        raise ValueError(f"{path}: observation grid has gaps")
    delta0 = np.broadcast_to(np.asarray(delta0, dtype=float), (n,))
    return ObservationSet(n, tuple(sensors), values, delta0[sensors].copy())
