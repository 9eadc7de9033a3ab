"""Log-barrier interior-point method for :class:`~sisrobust.gp.LogDomainProgram`.

Each centering step minimizes ``t * c @ z - sum_k log(-f_k(z))`` by damped
Newton iterations on the affine set ``A_eq z = b_eq``, parametrized as
``z = z0 + N w`` with ``N`` a null-space basis. The barrier weight ``t`` grows
by ``barrier_mu`` per stage until the duality-gap bound ``m / t`` drops below
the tolerance.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp

from .gp import LogDomainProgram

__all__ = ["SolverOptions", "Solution", "KKTReport", "solve", "phase_one", "kkt_residuals", "SolverError"]

EXP_CAP = 300.0
ARMIJO = 0.01
SHRINK = 0.5
CENTERING_TOL = 1e-9


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class SolverOptions:
    tol: float = 1e-8
    max_newton: int = 200
    barrier_mu: float = 10.0
    initial_t: float = 1.0
    phase_one_slack: float = 1e-6
    phase_one_radius: float = 1e4
    check_convexity: bool = False
    trace_path: str | None = None

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if not self.barrier_mu > 1:
            raise ValueError("barrier_mu must exceed 1")
        if not self.initial_t > 0 or self.max_newton < 1:
            raise ValueError("initial_t must be positive and max_newton at least 1")


@dataclass(frozen=True)
class KKTReport:
    violation: float
    stationarity: float
    complementarity: float

    @property
    def max(self) -> float:
        return max(self.violation, self.stationarity, self.complementarity)


@dataclass(frozen=True)
class Solution:
    status: str  # "optimal" | "infeasible" | "max-iterations"
    z: np.ndarray | None
    objective: float
    kkt: KKTReport | None
    t_final: float
    newton_steps: int
    names: tuple[str, ...] = ()
    num_log: int = 0
    trace: tuple = field(default=(), repr=False)

    @property
    def kkt_residual(self) -> float:
        return np.inf if self.kkt is None else self.kkt.max

    @property
    def y(self) -> np.ndarray:
        return self.z[: self.num_log]

    @property
    def nu(self) -> np.ndarray:
        return self.z[self.num_log :]

    def value(self, name: str) -> float:
        return float(self.z[self.names.index(name)])


class _Problem:
    """Array form of a program, restricted to its equality-constrained affine set."""

    def __init__(self, c, E, eb, owner, L, h, eq_A, eq_b, offset=0.0):
        self.c = np.asarray(c, dtype=float)
        self.E = sp.csr_matrix(E)
        self.eb = np.asarray(eb, dtype=float)
        self.owner = np.asarray(owner, dtype=np.int64)
        self.L = sp.csr_matrix(L)
        self.h = np.asarray(h, dtype=float)
        self.m = len(self.h)
        self.offset = offset
        nvar = len(self.c)
        self.S = sp.csr_matrix((np.ones(len(self.owner)), (self.owner, np.arange(len(self.owner)))), shape=(self.m, len(self.owner)))
        self.eq_A = np.asarray(eq_A, dtype=float).reshape(-1, nvar)
        self.eq_b = np.asarray(eq_b, dtype=float)
        self.N = _null_space_basis(self.eq_A, nvar)

    @classmethod
    def from_program(cls, prog: LogDomainProgram) -> "_Problem":
        return cls(prog.objective, prog.exp_A, prog.exp_b, prog.exp_owner, prog.lin_A, prog.rhs, prog.eq_A, prog.eq_b, prog.objective_offset)

    def project(self, z) -> np.ndarray:
        """Nearest point of the affine set."""
        z = np.asarray(z, dtype=float)
        if not len(self.eq_b):
            return z.copy()
        r = self.eq_A @ z - self.eq_b
        return z - np.linalg.lstsq(self.eq_A, r, rcond=None)[0]

    def exponents(self, z):
        return self.E @ z + self.eb

    def values(self, z):
        """Constraint values ``f(z)`` and term weights; ``None`` if an exponent exceeds the cap."""
        a = self.exponents(z)
        if a.size and a.max() > EXP_CAP:
            return None, None
        w = np.exp(a)
        f = self.S @ w + self.L @ z - self.h
        return f, w

    def derivatives(self, z, w, f):
        d = 1.0 / -f
        G = (self.S @ sp.diags(w) @ self.E + self.L).tocsr()
        grad_b = G.T @ d
        H = (G.T @ sp.diags(d * d) @ G).toarray()
        if w.size:
            H += (self.E.T @ sp.diags(w * d[self.owner]) @ self.E).toarray()
        return G, d, grad_b, H


def _null_space_basis(A, nvar) -> sp.csr_matrix:
    """Sparse basis of ``{x : A x = 0}``; untouched columns keep unit vectors."""
    if A.shape[0] == 0:
        return sp.identity(nvar, format="csr")
    touched = np.flatnonzero(np.any(A != 0, axis=0))
    free = np.setdiff1d(np.arange(nvar), touched)
    K = la.null_space(A[:, touched])
    rows = np.concatenate([free, np.repeat(touched, K.shape[1])])
    cols = np.concatenate([np.arange(free.size), free.size + np.tile(np.arange(K.shape[1]), touched.size)])
    vals = np.concatenate([np.ones(free.size), K.ravel()])
    return sp.csr_matrix((vals, (rows, cols)), shape=(nvar, free.size + K.shape[1]))


def _newton_direction(Hw, gw, check_convexity: bool):
    scale = 1.0 / np.sqrt(np.maximum(np.diag(Hw), 1e-300))
    Hs = Hw * scale[:, None] * scale[None, :]
    reg = 0.0
    for _ in range(8):
        try:
            factor = la.cho_factor(Hs + reg * np.eye(len(gw)), lower=False, check_finite=False)
            break
        except la.LinAlgError:
            if check_convexity and reg == 0.0:
                raise SolverError("barrier Hessian is not positive definite")
            reg = 1e-12 if reg == 0.0 else reg * 100.0
    else:
        raise SolverError("Newton system could not be factored")
    return -scale * la.cho_solve(factor, scale * gw, check_finite=False)


def _barrier(prob: _Problem, z, opts: SolverOptions, stop=None, trace=None):
    """Barrier method from a strictly feasible ``z`` on the affine set.

    ``stop(z)`` may end the run early (used by phase I). Returns
    ``(z, t, status, newton_steps)``.
    """
    N = prob.N
    t = opts.initial_t
    steps = 0
    stage = 0
    f, w = prob.values(z)
    while True:
        stage += 1
        for it in range(opts.max_newton):
            G, d, grad_b, H = prob.derivatives(z, w, f)
            gw = N.T @ (t * prob.c + grad_b)
            NtH = np.asarray(N.T @ H)
            Hw = np.asarray(N.T @ NtH.T)
            dw = _newton_direction(Hw, gw, opts.check_convexity)
            dz = N @ dw
            dec = float(-gw @ dw)
            if trace is not None:
                trace.append((stage, it, float(prob.c @ z) + prob.offset, dec))
            if dec <= CENTERING_TOL:
                break
            s = 1.0
            accepted = False
            cdz = t * float(prob.c @ dz)
            while s > 1e-14:
                zn = z + s * dz
                fn, wn = prob.values(zn)
                if fn is not None and np.all(fn < 0):
                    # barrier change, computed without forming the large totals
                    dphi = s * cdz - np.sum(np.log1p((f - fn) / -f))
                    if dphi <= -ARMIJO * s * dec:
                        accepted = True
                        break
                s *= SHRINK
            steps += 1
            if not accepted:
                # numerical floor reached on this stage
                break
            z, f, w = zn, fn, wn
            if stop is not None and stop(z, f):
                return z, t, "stopped", steps
        else:
            return z, t, "max-iterations", steps
        obj = float(prob.c @ z)
        if prob.m / t <= opts.tol * (1.0 + abs(obj + prob.offset)):
            return z, t, "optimal", steps
        t *= opts.barrier_mu


def kkt_residuals(prog: LogDomainProgram, z, t: float | None = None) -> KKTReport:
    """Residuals of ``z`` as an approximate minimizer of the barrier problem at weight ``t``.

    * violation: largest inequality or equality violation;
    * stationarity: ``||grad phi_t||`` in the inverse-Hessian norm (the Newton
      decrement) divided by ``t``, so it is measured in objective units;
    * complementarity: the gap bound ``m / t`` relative to ``1 + |objective|``.

    Without ``t`` the weight that best balances the objective gradient
    against the barrier gradient is used. Infeasible points report
    infinite stationarity and complementarity.
    """
    prob = _Problem.from_program(prog)
    z = np.asarray(z, dtype=float)
    if z.shape != (prog.num_vars,):
        raise ValueError("point has the wrong dimension")
    a = prob.exponents(z)
    f = prob.S @ np.exp(np.minimum(a, 700.0)) + prob.L @ z - prob.h
    eq = np.abs(prob.eq_A @ z - prob.eq_b).max() if len(prob.eq_b) else 0.0
    violation = float(max(0.0, f.max() if f.size else 0.0, eq))
    gc = prob.N.T @ prob.c
    if not f.size:
        return KKTReport(violation, float(np.abs(gc).max()) if gc.size else 0.0, 0.0)
    if f.max() >= 0:
        return KKTReport(violation, np.inf, np.inf)
    w = np.exp(a)
    _, _, grad_b, H = prob.derivatives(z, w, f)
    gb = prob.N.T @ grad_b
    if t is None:
        denom = float(gc @ gc)
        t = max(-float(gc @ gb) / denom, 1e-300) if denom > 0 else 1.0
    Hw = np.asarray(prob.N.T @ np.asarray(prob.N.T @ H).T)
    gw = t * gc + gb
    dec = float(-gw @ _newton_direction(Hw, gw, False)) if gw.size else 0.0
    obj = float(prob.c @ z) + prob.offset
    return KKTReport(violation, float(np.sqrt(max(dec, 0.0)) / t), prob.m / t / (1.0 + abs(obj)))


def _phase_one_problem(prob: _Problem, radius: float) -> _Problem:
    """``min s`` subject to ``f_k(z) <= s``, ``s >= -1``, ``|z_j| <= radius``."""
    nv = len(prob.c)
    E = sp.hstack([prob.E, sp.csr_matrix((prob.E.shape[0], 1))]).tocsr()
    L = sp.hstack([prob.L, -sp.csr_matrix(np.ones((prob.m, 1)))])
    eye = sp.identity(nv, format="csr")
    zcol = sp.csr_matrix((nv, 1))
    L = sp.vstack(
        [
            L,
            sp.csr_matrix(([-1.0], ([0], [nv])), shape=(1, nv + 1)),
            sp.hstack([eye, zcol]),
            sp.hstack([-eye, zcol]),
        ]
    ).tocsr()
    h = np.concatenate([prob.h, [1.0], np.full(2 * nv, radius)])
    c = np.zeros(nv + 1)
    c[-1] = 1.0
    eq_A = np.hstack([prob.eq_A, np.zeros((prob.eq_A.shape[0], 1))])
    return _Problem(c, E, prob.eb, prob.owner, L, h, eq_A, prob.eq_b)


@dataclass(frozen=True)
class PhaseOneResult:
    feasible: bool
    z: np.ndarray | None
    max_violation: float  # minimized max_k f_k; positive means infeasible


def _strictly_feasible(prob: _Problem, z, slack: float) -> float | None:
    f, _ = prob.values(z)
    if f is None:
        return None
    return float(f.max()) if f.size else -np.inf


def phase_one(prog: LogDomainProgram, opts: SolverOptions | None = None, start=None) -> PhaseOneResult:
    """Strictly feasible point with every slack at least ``opts.phase_one_slack``, or a certificate.

    Candidates tried in order: ``start``, the program's hint, the projected
    origin; failing those, the auxiliary problem ``min s`` with
    ``f(z) <= s`` is solved and infeasibility is reported when its optimum
    stays above ``-slack``.
    """
    opts = opts or SolverOptions()
    prob = _Problem.from_program(prog)
    return _phase_one(prob, prog, opts, start)


def _phase_one(prob: _Problem, prog: LogDomainProgram, opts: SolverOptions, start=None) -> PhaseOneResult:
    slack = opts.phase_one_slack
    candidates = [x for x in (start, prog.hint) if x is not None] + [np.zeros(prog.num_vars)]
    z0 = None
    for cand in candidates:
        z = prob.project(cand)
        worst = _strictly_feasible(prob, z, slack)
        if worst is not None and worst <= -slack:
            return PhaseOneResult(True, z, worst)
        if z0 is None and worst is not None:
            z0 = z
    if z0 is None:
        z0 = prob.project(np.zeros(prog.num_vars))
        if _strictly_feasible(prob, z0, slack) is None:
            return PhaseOneResult(False, None, np.inf)
    if np.abs(z0).max(initial=0.0) >= opts.phase_one_radius:
        raise SolverError("phase-one start lies outside the search box")
    aux = _phase_one_problem(prob, opts.phase_one_radius)
    f0, _ = prob.values(z0)
    s0 = max(float(f0.max()), -0.5) + 1.0
    za = np.append(z0, s0)

    def stop(z, f):
        return z[-1] < -slack and prob.values(z[:-1])[0].max() <= -slack

    aux_opts = SolverOptions(tol=min(opts.tol, 1e-9), max_newton=opts.max_newton, barrier_mu=opts.barrier_mu)
    za, _, status, _ = _barrier(aux, za, aux_opts, stop=stop)
    z = za[:-1]
    worst = float(prob.values(z)[0].max())
    if worst <= -slack:
        return PhaseOneResult(True, z, worst)
    return PhaseOneResult(False, None, float(za[-1]))


def solve(prog: LogDomainProgram, opts: SolverOptions | None = None) -> Solution:
    """Minimize ``prog`` to duality gap ``m / t <= tol * (1 + |objective|)``."""
    opts = opts or SolverOptions()
    prob = _Problem.from_program(prog)
    start = _phase_one(prob, prog, opts)
    if not start.feasible:
        return Solution("infeasible", None, np.nan, None, 0.0, 0, prog.names, len(prog.log_names))
    trace: list = []
    z, t, status, steps = _barrier(prob, start.z, opts, trace=trace)
    report = kkt_residuals(prog, z, t)
    if status == "optimal" and report.max > opts.tol:
        status = "max-iterations"
    if opts.trace_path is not None:
        with open(opts.trace_path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["stage", "newton_iter", "objective", "residual"])
            writer.writerows(trace)
    objective = float(prob.c @ z) + prob.offset
    return Solution(status, z, objective, report, t, steps, prog.names, len(prog.log_names), tuple(trace))
