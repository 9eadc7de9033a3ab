"""Run configuration, synthetic networks and the sweep harnesses."""

from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
from scipy.optimize import brentq

from .allocate import evaluate_allocation, optimal_allocate, robust_allocate
from .cost import CostModel
from .epidemic import ObservationSet, Trajectory, observe, simulate
from .network import ContactNetwork, is_strongly_connected, load_network_csv, spectral_radius, state_matrix
from .solver import SolverOptions
from .uncertainty import UncertaintyModel, build_model

__all__ = [
    "RunConfig",
    "SweepResult",
    "Scenario",
    "generate_network",
    "rank_sensors",
    "prepare",
    "sweep_T",
    "sweep_sensors",
    "compare_allocations",
    "BandError",
]

CSV_HEADER = ["param", "lambda_star", "rho_eval_rob", "rho_eval_opt", "seconds"]


class BandError(ValueError):
    """The requested spectral-radius band cannot be reached with admissible rates."""


def generate_network(
    n: int,
    seed: int,
    density: float = 0.1,
    weight_scale: float = 10.0,
    band=(1.1, 1.6),
    hi_scale: float = 1.5,
    dc_upper=0.5,
) -> ContactNetwork:
    """Random strongly connected network with a controlled worst-case radius.

    A directed Hamiltonian cycle through a random node order guarantees
    strong connectivity; every other ordered pair becomes an edge with
    probability ``density``. Weights are log-uniform over a range of ratio
    ``weight_scale`` and then rescaled globally so that
    ``rho(hi_scale * B + diag(dc_upper))`` sits at the middle of ``band``.
    """
    if n < 2:
        raise ValueError("need at least two nodes")
    if not 0 <= density <= 1 or weight_scale < 1:
        raise ValueError("density must lie in [0, 1] and weight_scale be at least 1")
    lo_band, hi_band = band
    if not 0 < lo_band <= hi_band:
        raise ValueError("invalid band")
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    adj = np.zeros((n, n), dtype=bool)
    adj[order[np.r_[1:n, 0]], order] = True  # order[k] -> order[k+1]
    extra = rng.random((n, n)) < density
    np.fill_diagonal(extra, False)
    adj |= extra
    raw = np.where(adj, np.exp(rng.uniform(-math.log(weight_scale), 0.0, (n, n))), 0.0)
    dc = np.broadcast_to(np.asarray(dc_upper, dtype=float), (n,))
    # every admissible scaling keeps hi_scale * beta < 1
    s_max = (1.0 - 1e-9) / (hi_scale * raw.max())

    def excess(s, target):
        return spectral_radius(state_matrix(hi_scale * s * raw, dc))[0] - target

    target = 0.5 * (lo_band + hi_band)
    if excess(s_max, target) < 0:
        target = lo_band
        if excess(s_max, target) < 0:
            raise BandError(f"band {band} unreachable: rates would exceed 1")
    if excess(0.0, target) >= 0:
        raise BandError(f"band {band} lies below the recovery diagonal")
    s = brentq(excess, 0.0, s_max, args=(target,), xtol=1e-14, rtol=1e-14)
    return ContactNetwork.from_matrix(s * raw)


def rank_sensors(net: ContactNetwork, k: int) -> list[int]:
    """Top-``k`` nodes by weighted in+out degree, ties broken by index."""
    deg = net.weighted_degree()
    order = sorted(range(net.n), key=lambda i: (-deg[i], i))
    return sorted(order[:k])


@dataclass(frozen=True)
class RunConfig:
    n: int = 20
    network_csv: str | None = None
    network_seed: int | None = None
    density: float = 0.1
    weight_scale: float = 10.0
    rho_band: tuple = (1.1, 1.6)
    lo_scale: float = 0.5
    hi_scale: float = 1.5
    delta0: float | str = 0.5
    p0: float = 0.5
    t_max: int = 40
    t_schedule: list | None = None
    sensor_count: int | None = None
    sensor_list: list | None = None
    sensor_schedule: list | None = None
    budget: float | None = None
    dc_lower: float = 0.1
    control: list | None = None
    solver: dict = field(default_factory=dict)
    out_dir: str = "out"
    seed: int = 0
    timing: bool = False

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("n must be at least 2")
        if self.network_csv is not None and not Path(self.network_csv).is_file():
            raise FileNotFoundError(self.network_csv)
        if isinstance(self.delta0, str) and not Path(self.delta0).is_file():
            raise FileNotFoundError(self.delta0)
        if not 0 < self.lo_scale <= 1 <= self.hi_scale:
            raise ValueError("need 0 < lo_scale <= 1 <= hi_scale")
        if not 0 <= self.p0 <= 1:
            raise ValueError("p0 must lie in [0, 1]")
        if self.t_max < 1:
            raise ValueError("t_max must be at least 1")
        if self.sensor_count is not None and self.sensor_list is not None:
            raise ValueError("give either sensor_count or sensor_list")
        if self.budget is not None and self.budget < 0:
            raise ValueError("budget must be nonnegative")
        object.__setattr__(self, "rho_band", tuple(self.rho_band))
        SolverOptions(**self.solver)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_json(cls, path) -> "RunConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["rho_band"] = list(self.rho_band)
        return d

    def replace(self, **kw) -> "RunConfig":
        return RunConfig.from_dict({**self.to_dict(), **kw})

    @property
    def effective_budget(self) -> float:
        return 0.5 * self.n if self.budget is None else float(self.budget)

    @property
    def solver_options(self) -> SolverOptions:
        return SolverOptions(**self.solver)


@dataclass(frozen=True)
class Scenario:
    """Network, truth and observations shared by every point of a sweep."""

    config: RunConfig
    network: ContactNetwork
    delta0: np.ndarray
    trajectory: Trajectory
    cost: CostModel

    @property
    def B_true(self) -> np.ndarray:
        return self.network.rate_matrix()

    def sensors(self, k: int | None = None) -> list[int]:
        cfg = self.config
        if k is not None:
            return rank_sensors(self.network, k)
        if cfg.sensor_list is not None:
            return sorted(int(i) for i in cfg.sensor_list)
        return rank_sensors(self.network, self.network.n if cfg.sensor_count is None else cfg.sensor_count)

    def observations(self, T: int, sensors) -> ObservationSet | None:
        if not sensors:
            return None
        return observe(self.trajectory, sensors).prefix(T)

    def model(self, T: int, sensors) -> UncertaintyModel:
        cfg = self.config
        return build_model(self.network, self.observations(T, sensors), cfg.lo_scale, cfg.hi_scale)


def _load_delta0(cfg: RunConfig, n: int) -> np.ndarray:
    if isinstance(cfg.delta0, str):
        vals = np.loadtxt(cfg.delta0, delimiter=",", ndmin=1)
        if vals.shape != (n,):
            raise ValueError(f"{cfg.delta0}: expected {n} recovery rates")
        return vals
    return np.full(n, float(cfg.delta0))


def prepare(cfg: RunConfig) -> Scenario:
    """Build the network, simulate the true epidemic and set up costs."""
    if cfg.network_csv is not None:
        net = load_network_csv(cfg.network_csv, cfg.n)
    else:
        delta0 = _load_delta0(cfg, cfg.n)
        seed = cfg.seed if cfg.network_seed is None else cfg.network_seed
        net = generate_network(cfg.n, seed, cfg.density, cfg.weight_scale, cfg.rho_band, cfg.hi_scale, 1.0 - delta0)
    if net.n != cfg.n:
        raise ValueError("network size differs from n")
    if not is_strongly_connected(net):
        raise ValueError("contact network is not strongly connected")
    delta0 = _load_delta0(cfg, net.n)
    traj = simulate(net, net.rate_matrix(), delta0, np.full(net.n, cfg.p0), cfg.t_max)
    cost = CostModel.from_delta0(delta0, cfg.dc_lower)
    return Scenario(cfg, net, delta0, traj, cost)


@dataclass(frozen=True)
class SweepResult:
    param_name: str
    rows: tuple  # (param, lambda_star, rho_eval_rob, rho_eval_opt, seconds)

    @property
    def params(self) -> np.ndarray:
        return np.array([r[0] for r in self.rows], dtype=float)

    @property
    def lambda_star(self) -> np.ndarray:
        return np.array([r[1] for r in self.rows])

    @property
    def rho_rob(self) -> np.ndarray:
        return np.array([r[2] for r in self.rows])

    @property
    def rho_opt(self) -> np.ndarray:
        return np.array([r[3] for r in self.rows])

    @property
    def gap(self) -> np.ndarray:
        return self.rho_rob - self.rho_opt

    def is_nonincreasing(self, tol: float = 1e-6) -> bool:
        return bool(np.all(np.diff(self.lambda_star) <= tol))

    def plateau(self, tol: float = 1e-3):
        """First parameter after which every successive change of ``lambda_star`` is below ``tol``."""
        lam = self.lambda_star
        for k in range(len(lam)):
            if np.all(np.abs(np.diff(lam[k:])) < tol):
                return self.rows[k][0]
        return None

    def threshold(self, level: float = 1.0):
        """Smallest parameter value whose ``lambda_star`` is below ``level``."""
        for r in self.rows:
            if r[1] < level:
                return r[0]
        return None

    def to_csv(self, path, timing: bool = False) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_HEADER)
            for p, lam, rob, opt, sec in self.rows:
                writer.writerow([p, repr(float(lam)), repr(float(rob)), repr(float(opt)), repr(float(sec)) if timing else "nan"])

    @classmethod
    def from_csv(cls, path, param_name: str = "param") -> "SweepResult":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            if next(reader) != CSV_HEADER:
                raise ValueError(f"{path}: unexpected header")
            rows = tuple((int(r[0]), float(r[1]), float(r[2]), float(r[3]), float(r[4])) for r in reader)
        return cls(param_name, rows)


def _point(args):
    """One sweep point; module-level so worker processes can run it."""
    scen, param, T, sensors, rho_opt = args
    cfg = scen.config
    start = time.perf_counter()
    model = scen.model(T, sensors)
    res = robust_allocate(model, scen.cost, cfg.effective_budget, cfg.control, cfg.solver_options)
    rho_rob = evaluate_allocation(scen.B_true, res.dc)
    return (param, res.lambda_star, rho_rob, rho_opt, time.perf_counter() - start)


def _run(points, jobs: int):
    if jobs > 1 and len(points) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_point, points))
    else:
        rows = [_point(p) for p in points]
    return tuple(sorted(rows, key=lambda r: r[0]))


def _optimal_rho(scen: Scenario) -> float:
    cfg = scen.config
    res = optimal_allocate(scen.B_true, scen.cost, cfg.effective_budget, cfg.control, cfg.solver_options)
    return evaluate_allocation(scen.B_true, res.dc)


def sweep_T(cfg: RunConfig, jobs: int = 1, scenario: Scenario | None = None) -> SweepResult:
    """Certified worst-case rate as the observation horizon grows."""
    scen = scenario or prepare(cfg)
    schedule = cfg.t_schedule or list(range(1, cfg.t_max + 1))
    if max(schedule) > cfg.t_max or min(schedule) < 1:
        raise ValueError("T schedule must lie in [1, t_max]")
    sensors = scen.sensors()
    rho_opt = _optimal_rho(scen)
    return SweepResult("T", _run([(scen, int(T), int(T), sensors, rho_opt) for T in schedule], jobs))


def sweep_sensors(cfg: RunConfig, jobs: int = 1, scenario: Scenario | None = None) -> SweepResult:
    """Certified worst-case rate as more top-ranked nodes are observed, at ``T = t_max``."""
    scen = scenario or prepare(cfg)
    schedule = cfg.sensor_schedule or list(range(0, cfg.n + 1))
    if min(schedule) < 0 or max(schedule) > cfg.n:
        raise ValueError("sensor schedule must lie in [0, n]")
    rho_opt = _optimal_rho(scen)
    points = [(scen, int(k), cfg.t_max, scen.sensors(int(k)), rho_opt) for k in schedule]
    return SweepResult("sensors", _run(points, jobs))


def compare_allocations(cfg: RunConfig, jobs: int = 1, scenario: Scenario | None = None) -> SweepResult:
    """Evaluated radius of the robust allocation against the known-network optimum, per ``T``.

    Raises if a robust allocation ever beats the optimum by more than 1e-9.
    """
    res = sweep_T(cfg, jobs, scenario)
    if np.any(res.gap < -1e-9):
        bad = res.params[np.argmin(res.gap)]
        raise RuntimeError(f"robust allocation beats the known-network optimum at T={bad:g}")
    return SweepResult("T", res.rows)
