"""Polytopic uncertainty sets over contact-rate matrices.

The set is a product of per-row polytopes. Row ``i`` constrains the rates
on the in-edges of node ``i`` through ``F_i @ beta_i + g_i >= 0``, stacking
prior box bounds and linear inequalities derived from observed infection
time series.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .epidemic import ObservationSet
from .linprog import simplex_max
from .network import ContactNetwork

__all__ = [
    "PriorBounds",
    "DataConstraint",
    "RowPolytope",
    "UncertaintyModel",
    "InconsistentDataError",
    "EmptyUncertaintySetError",
    "build_prior",
    "build_data_constraints",
    "assemble",
    "build_model",
    "contains",
    "row_sup",
    "row_dual",
    "sample_matrices",
]

CLAMP_EPS = 1e-12
RATIO_SLACK = 1e-9
MEMBERSHIP_TOL = 1e-9


class InconsistentDataError(ValueError):
    """Observations cannot have been produced by the SIS recursion with the given recovery rates."""


class EmptyUncertaintySetError(ValueError):
    pass


@dataclass(frozen=True)
class PriorBounds:
    """Per-edge box ``lower <= beta <= upper`` on the network's sparsity pattern."""

    network: ContactNetwork
    lower: np.ndarray
    upper: np.ndarray
    lo_scale: float | None = None
    hi_scale: float | None = None

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=float)
        hi = np.asarray(self.upper, dtype=float)
        if lo.shape != (self.network.num_edges,) or hi.shape != lo.shape:
            raise ValueError("bounds must be given per edge")
        if np.any(lo <= 0) or np.any(hi >= 1) or np.any(lo > hi):
            raise ValueError("bounds must satisfy 0 < lower <= upper < 1")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)


def build_prior(net: ContactNetwork, lo_scale: float, hi_scale: float) -> PriorBounds:
    """Box bounds ``[lo_scale * beta, hi_scale * beta]`` around the nominal rates."""
    if not 0 < lo_scale <= 1 <= hi_scale:
        raise ValueError("need 0 < lo_scale <= 1 <= hi_scale")
    upper = hi_scale * net.weight
    if np.any(upper >= 1):
        raise ValueError(f"scaled upper bound reaches {upper.max():.4g} >= 1")
    return PriorBounds(net, lo_scale * net.weight, upper, lo_scale, hi_scale)


@dataclass(frozen=True)
class DataConstraint:
    """``sum_j coeffs[j] * beta[row, j] <= rhs``; ``coeffs`` is length ``n``, zero off the sensors."""

    row: int
    coeffs: np.ndarray
    rhs: float
    t: int = -1


def build_data_constraints(obs: ObservationSet, n: int | None = None) -> list[DataConstraint]:
    """Linear inequalities implied by consecutive observations of each sensor.

    For sensor ``i`` and step ``t`` with ``p_i(t) < 1``, the AM-GM bound on
    the escape product gives

        (1/n) sum_{j in sensors} beta_ij p_j(t) <= 1 - (1 - r)^(1/n),
        r = (p_i(t+1) - p_i(t) (1 - delta0_i)) / (1 - p_i(t)).

    ``r`` is clamped into ``[0, 1 - 1e-12]``; values further than ``1e-9``
    outside ``[0, 1]`` raise :class:`InconsistentDataError`.
    """
    n = obs.n if n is None else n
    if obs.horizon < 1:
        raise ValueError("need observations at two or more time steps")
    sensors = np.array(obs.sensors)
    P = obs.values
    out = []
    for k, i in enumerate(obs.sensors):
        for t in range(obs.horizon):
            p_now = P[t, k]
            if p_now >= 1.0:
                continue
            r = (P[t + 1, k] - p_now * (1.0 - obs.delta0[k])) / (1.0 - p_now)
            if r < -RATIO_SLACK or r > 1.0 + RATIO_SLACK:
                raise InconsistentDataError(
                    f"node {i}, t={t}: ratio {r:.6g} outside [0, 1]; check delta0"
                )
            r = min(max(r, 0.0), 1.0 - CLAMP_EPS)
            # 1 - (1 - r)^(1/n) without cancellation for small r
            rhs = -np.expm1(np.log1p(-r) / n)
            coeffs = np.zeros(n)
            coeffs[sensors] = P[t] / n
            if not np.any(coeffs > 0):
                continue
            out.append(DataConstraint(int(i), coeffs, float(rhs), t))
    return out


@dataclass(frozen=True)
class RowPolytope:
    """Feasible rates on the in-edges of one node: ``F @ beta + g >= 0``.

    Coordinates follow ``edges`` (edge ids of the network). The first
    ``k`` rows of ``F`` are upper bounds, the next ``k`` lower bounds,
    the rest data constraints.
    """

    row: int
    edges: tuple[int, ...]
    F: np.ndarray
    g: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    data_t: tuple[int, ...] = ()

    @property
    def dim(self) -> int:
        return len(self.edges)

    @property
    def num_data(self) -> int:
        return self.F.shape[0] - 2 * self.dim

    def slack(self, beta) -> np.ndarray:
        return self.F @ np.asarray(beta, dtype=float) + self.g

    def contains(self, beta, tol: float = MEMBERSHIP_TOL) -> bool:
        if self.dim == 0:
            return True
        return bool(np.all(self.slack(beta) >= -tol))

    def _shifted_lp(self, c):
        # beta = lower + x with x >= 0 keeps the right-hand side nonnegative
        # whenever the lower corner satisfies the data rows.
        A = -self.F
        b = self.g + self.F @ self.lower
        return simplex_max(c, A, b)

    def sup(self, weights) -> float:
        """Exact ``max weights @ beta`` over the polytope."""
        m = np.asarray(weights, dtype=float)
        if m.shape != (self.dim,):
            raise ValueError(f"weights must have length {self.dim}")
        if np.any(m < 0):
            raise ValueError("weights must be nonnegative")
        if self.dim == 0:
            return 0.0
        res = self._shifted_lp(m)
        if res.status != "optimal":
            raise EmptyUncertaintySetError(f"row {self.row} is {res.status}")
        return float(res.value + m @ self.lower)

    def argsup(self, weights) -> np.ndarray:
        m = np.asarray(weights, dtype=float)
        res = self._shifted_lp(m)
        if res.status != "optimal":
            raise EmptyUncertaintySetError(f"row {self.row} is {res.status}")
        return self.lower + res.x

    def dual(self, weights) -> tuple[float, np.ndarray]:
        """Solve ``min g @ nu  s.t.  F.T @ nu + weights <= 0, nu >= 0``."""
        m = np.asarray(weights, dtype=float)
        if self.dim == 0:
            return 0.0, np.zeros(0)
        res = simplex_max(-self.g, self.F.T, -m)
        if res.status != "optimal":
            raise EmptyUncertaintySetError(f"dual of row {self.row} is {res.status}")
        return float(self.g @ res.x), res.x

    def is_feasible(self) -> bool:
        if self.dim == 0:
            return True
        return self._shifted_lp(np.zeros(self.dim)).status == "optimal"

    def interior_point(self) -> tuple[np.ndarray, float]:
        """Point maximizing the smallest slack, and that slack."""
        k = self.dim
        # Box rows of pinned coordinates have zero slack by construction.
        weight = np.ones(self.F.shape[0])
        pinned = np.flatnonzero(self.upper <= self.lower)
        weight[pinned] = 0.0
        weight[k + pinned] = 0.0
        # the cap on the slack keeps the LP bounded when every row has zero weight
        A = np.vstack([np.hstack([-self.F, weight[:, None]]), np.eye(1, k + 1, k)])
        b = np.append(self.g + self.F @ self.lower, 1.0)
        c = np.zeros(k + 1)
        c[-1] = 1.0
        res = simplex_max(c, A, b)
        if res.status != "optimal":
            raise EmptyUncertaintySetError(f"row {self.row} is {res.status}")
        return self.lower + res.x[:k], float(res.x[-1])


@dataclass(frozen=True)
class UncertaintyModel:
    network: ContactNetwork
    rows: tuple[RowPolytope, ...]
    provenance: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.network.n

    def upper_matrix(self) -> np.ndarray:
        """Entrywise upper corner of the prior box."""
        w = np.zeros(self.network.num_edges)
        for row in self.rows:
            w[list(row.edges)] = row.upper
        return self.network.rate_matrix(w)

    def row_vector(self, B, i: int) -> np.ndarray:
        row = self.rows[i]
        net = self.network
        return np.asarray(B, dtype=float)[i, net.src[list(row.edges)]]

    def to_dict(self) -> dict:
        net = self.network
        rows = []
        for r in self.rows:
            rows.append(
                {
                    "row": r.row + 1,
                    "coords": [[int(net.src[e]) + 1, int(net.dst[e]) + 1] for e in r.edges],
                    "shape": list(r.F.shape),
                    "F": r.F.ravel().tolist(),
                    "g": r.g.tolist(),
                    "data_t": list(r.data_t),
                }
            )
        return {
            "n": net.n,
            "edges": [[int(s) + 1, int(d) + 1, float(w)] for s, d, w in zip(net.src, net.dst, net.weight)],
            "rows": rows,
            "provenance": self.provenance,
        }

    def to_json(self, path=None, **kw) -> str:
        text = json.dumps(self.to_dict(), **kw)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text + "\n")
        return text

    @classmethod
    def from_dict(cls, d: dict) -> "UncertaintyModel":
        edges = np.array(d["edges"], dtype=float).reshape(-1, 3)
        net = ContactNetwork(
            int(d["n"]), edges[:, 0].astype(np.int64) - 1, edges[:, 1].astype(np.int64) - 1, edges[:, 2]
        )
        index = {(int(s), int(t)): e for e, (s, t) in enumerate(zip(net.src, net.dst))}
        rows = []
        for r in d["rows"]:
            ids = tuple(index[(s - 1, t - 1)] for s, t in r["coords"])
            F = np.array(r["F"], dtype=float).reshape(r["shape"])
            g = np.array(r["g"], dtype=float)
            k = len(ids)
            rows.append(RowPolytope(r["row"] - 1, ids, F, g, -g[k : 2 * k], g[:k], tuple(r.get("data_t", ()))))
        return cls(net, tuple(rows), dict(d.get("provenance", {})))

    @classmethod
    def from_json(cls, text_or_path) -> "UncertaintyModel":
        text = str(text_or_path)
        if not text.lstrip().startswith("{"):
            with open(text) as fh:
                text = fh.read()
        return cls.from_dict(json.loads(text))


def assemble(prior: PriorBounds, data=(), provenance: dict | None = None) -> UncertaintyModel:
    """Stack box bounds and data rows into one polytope per node.

    Each row is checked for nonemptiness: first by testing the nominal
    rates, then by a phase-I LP. Raises :class:`EmptyUncertaintySetError`
    if some row is empty.
    """
    net = prior.network
    by_row: dict[int, list[DataConstraint]] = {}
    for dc in data:
        if not 0 <= dc.row < net.n or len(dc.coeffs) != net.n:
            raise ValueError(f"data constraint refers to node {dc.row} outside the network")
        by_row.setdefault(dc.row, []).append(dc)
    rows = []
    for i in range(net.n):
        ids = net.in_edges(i)
        k = len(ids)
        lo = prior.lower[list(ids)]
        hi = prior.upper[list(ids)]
        srcs = net.src[list(ids)]
        F_rows = [-np.eye(k), np.eye(k)]
        g_rows = [hi, -lo]
        ts = []
        for dc in by_row.get(i, ()):
            a = dc.coeffs[srcs]
            if k == 0 or not np.any(a > 0):
                continue
            F_rows.append(-a[None, :])
            g_rows.append(np.array([dc.rhs]))
            ts.append(dc.t)
        F = np.vstack(F_rows) if k else np.zeros((0, 0))
        g = np.concatenate(g_rows) if k else np.zeros(0)
        poly = RowPolytope(i, tuple(ids), F, g, lo, hi, tuple(ts))
        if k and not poly.contains(net.weight[list(ids)], tol=0.0) and not poly.is_feasible():
            raise EmptyUncertaintySetError(f"prior and data are inconsistent on row {i}")
        rows.append(poly)
    prov = {"lo_scale": prior.lo_scale, "hi_scale": prior.hi_scale}
    prov.update(provenance or {})
    return UncertaintyModel(net, tuple(rows), prov)


def build_model(net: ContactNetwork, obs: ObservationSet | None, lo_scale: float, hi_scale: float) -> UncertaintyModel:
    """Prior box intersected with the data polytope of ``obs`` (box only if ``obs`` is None)."""
    prior = build_prior(net, lo_scale, hi_scale)
    if obs is None:
        return assemble(prior, (), {"T": 0, "sensors": []})
    data = build_data_constraints(obs, net.n)
    prov = {"T": obs.horizon, "sensors": [s + 1 for s in obs.sensors]}
    return assemble(prior, data, prov)


def contains(model: UncertaintyModel, B, tol: float = MEMBERSHIP_TOL) -> bool:
    """Membership of a full rate matrix, including its sparsity pattern."""
    B = np.asarray(B, dtype=float)
    net = model.network
    if B.shape != (net.n, net.n):
        return False
    off = ~net.support()
    if np.any(B[off] != 0):
        return False
    return all(row.contains(model.row_vector(B, row.row), tol) for row in model.rows)


def row_sup(model: UncertaintyModel, i: int, weights) -> float:
    return model.rows[i].sup(weights)


def row_dual(model: UncertaintyModel, i: int, weights) -> float:
    return model.rows[i].dual(weights)[0]


def _hit_and_run_row(row: RowPolytope, rng, count: int, steps: int) -> np.ndarray:
    k = row.dim
    out = np.empty((count, k))
    if k == 0:
        return out
    x, slack = row.interior_point()
    free = row.upper > row.lower
    if slack <= 0 or not free.any():
        out[:] = x
        return out
    F = row.F
    for s in range(count):
        for _ in range(steps):
            d = rng.standard_normal(k)
            d[~free] = 0.0
            d /= np.linalg.norm(d)
            Fd = F @ d
            sl = F @ x + row.g
            # Segment {x + a d : sl + a Fd >= 0}.
            with np.errstate(divide="ignore"):
                lim = -sl / Fd
            a_hi = np.min(lim[Fd < 0], initial=np.inf)
            a_lo = np.max(lim[Fd > 0], initial=-np.inf)
            if not (np.isfinite(a_hi) and np.isfinite(a_lo)) or a_hi <= a_lo:
                continue
            x = x + rng.uniform(a_lo, a_hi) * d
        out[s] = x
    return out


def sample_matrices(model: UncertaintyModel, count: int, seed: int = 0, steps: int = 50) -> np.ndarray:
    """``count`` rate matrices drawn by per-row hit-and-run (``steps`` moves per draw).

    Each row uses its own RNG stream spawned from ``seed``.
    """
    net = model.network
    streams = np.random.SeedSequence(seed).spawn(net.n)
    weights = np.zeros((count, net.num_edges))
    for row, ss in zip(model.rows, streams):
        draws = _hit_and_run_row(row, np.random.default_rng(ss), count, steps)
        weights[:, list(row.edges)] = draws
    out = np.zeros((count, net.n, net.n))
    out[:, net.dst, net.src] = weights
    return out
