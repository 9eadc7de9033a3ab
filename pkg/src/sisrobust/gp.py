"""Geometric-program algebra and assembly of the robust allocation program.

Decision variables of a GP are positive reals ``x``; after the change of
variables ``y = log x`` every posynomial constraint becomes a sum of
exponentials of affine functions. Dualizing a robust posynomial row over
a polytope adds multiplier variables ``nu >= 0`` that stay in the linear
domain, so a :class:`LogDomainProgram` mixes both kinds of variable:

    minimize    c @ z
    subject to  sum_{t in k} exp(a_t @ z + b_t) + l_k @ z <= h_k   for each k
                A_eq @ z == b_eq

with ``z = (y, nu)`` and exponent rows ``a_t`` supported on ``y`` only.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
import scipy.sparse as sp

from .cost import CostModel
from .linprog import simplex_max
from .network import is_strongly_connected, spectral_radius, state_matrix
from .uncertainty import EmptyUncertaintySetError, UncertaintyModel

__all__ = [
    "Monomial",
    "Posynomial",
    "LogDomainProgram",
    "ProgramBuilder",
    "RobustRowBlock",
    "log_transform",
    "dualize_robust_row",
    "assemble_robust_allocation",
    "assemble_worst_case",
    "assemble_known_network",
    "dc_name",
    "u_name",
    "LAMBDA",
]

LAMBDA = "lam"


def dc_name(i: int) -> str:
    return f"dc[{i}]"


def u_name(i: int) -> str:
    return f"u[{i}]"


class Monomial:
    """``coeff * prod_v x_v ** exponents[v]`` with ``coeff > 0``."""

    __slots__ = ("coeff", "exponents")

    def __init__(self, coeff: float, exponents: Mapping[str, float] | None = None):
        coeff = float(coeff)
        if not coeff > 0 or not math.isfinite(coeff):
            raise ValueError(f"monomial coefficient must be positive, got {coeff}")
        exps = {k: float(v) for k, v in (exponents or {}).items() if v != 0}
        if not all(math.isfinite(v) for v in exps.values()):
            raise ValueError("monomial exponents must be finite")
        self.coeff = coeff
        self.exponents = dict(sorted(exps.items()))

    @classmethod
    def var(cls, name: str) -> "Monomial":
        return cls(1.0, {name: 1.0})

    def __mul__(self, other):
        if isinstance(other, Monomial):
            exps = dict(self.exponents)
            for k, v in other.exponents.items():
                exps[k] = exps.get(k, 0.0) + v
            return Monomial(self.coeff * other.coeff, exps)
        return Monomial(self.coeff * float(other), self.exponents)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Monomial):
            return self * other ** -1
        return Monomial(self.coeff / float(other), self.exponents)

    def __pow__(self, p: float):
        return Monomial(self.coeff**p, {k: v * p for k, v in self.exponents.items()})

    def __add__(self, other):
        return Posynomial([self]) + other

    def __call__(self, values: Mapping[str, float]) -> float:
        out = self.coeff
        for k, v in self.exponents.items():
            out *= values[k] ** v
        return out

    def __eq__(self, other):
        return isinstance(other, Monomial) and self.coeff == other.coeff and self.exponents == other.exponents

    def __repr__(self):
        body = " ".join(f"{k}^{v:g}" for k, v in self.exponents.items())
        return f"Monomial({self.coeff:g} {body})"


class Posynomial:
    """Sum of monomials over a shared variable space."""

    __slots__ = ("terms",)

    def __init__(self, terms):
        terms = list(terms)
        if not terms:
            raise ValueError("posynomial needs at least one term")
        for m in terms:
            if not isinstance(m, Monomial):
                raise TypeError("posynomial terms must be monomials")
        self.terms = tuple(terms)

    def __add__(self, other):
        if isinstance(other, Monomial):
            return Posynomial(self.terms + (other,))
        if isinstance(other, Posynomial):
            return Posynomial(self.terms + other.terms)
        return NotImplemented

    __radd__ = __add__

    def __truediv__(self, m):
        return Posynomial([t / m for t in self.terms])

    def __mul__(self, m):
        return Posynomial([t * m for t in self.terms])

    def __call__(self, values) -> float:
        return sum(t(values) for t in self.terms)

    def __len__(self):
        return len(self.terms)

    def __iter__(self):
        return iter(self.terms)

    def __repr__(self):
        return " + ".join(map(repr, self.terms))


def _as_posynomial(p) -> Posynomial | None:
    if p is None:
        return None
    if isinstance(p, Monomial):
        return Posynomial([p])
    return p


@dataclass(frozen=True)
class LogDomainProgram:
    log_names: tuple[str, ...]
    lin_names: tuple[str, ...]
    objective: np.ndarray
    exp_A: sp.csr_matrix
    exp_b: np.ndarray
    exp_owner: np.ndarray
    lin_A: sp.csr_matrix
    rhs: np.ndarray
    labels: tuple[str, ...]
    eq_A: np.ndarray
    eq_b: np.ndarray
    objective_offset: float = 0.0
    hint: np.ndarray | None = None
    _index: dict = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        names = self.log_names + self.lin_names
        object.__setattr__(self, "_index", {nm: k for k, nm in enumerate(names)})
        if np.any(~np.isfinite(self.exp_b)) or np.any(~np.isfinite(self.rhs)):
            raise ValueError("program data must be finite")
        if self.exp_A.shape[1] and self.exp_A[:, len(self.log_names):].nnz:
            raise ValueError("exponents may only involve log-domain variables")

    @property
    def names(self) -> tuple[str, ...]:
        return self.log_names + self.lin_names

    @property
    def num_vars(self) -> int:
        return len(self.log_names) + len(self.lin_names)

    @property
    def num_constraints(self) -> int:
        return len(self.rhs)

    def index(self, name: str) -> int:
        return self._index[name]

    def constraint_values(self, z) -> np.ndarray:
        """Left side minus right side of every inequality (feasible iff all <= 0)."""
        z = np.asarray(z, dtype=float)
        w = np.exp(np.minimum(self.exp_A @ z + self.exp_b, 700.0))
        f = np.bincount(self.exp_owner, weights=w, minlength=self.num_constraints)
        return f + self.lin_A @ z - self.rhs

    def to_dict(self) -> dict:
        names = self.names

        def row(M, r):
            lo, hi = M.indptr[r], M.indptr[r + 1]
            return {names[c]: float(v) for c, v in zip(M.indices[lo:hi], M.data[lo:hi])}

        return {
            "log_variables": list(self.log_names),
            "linear_variables": list(self.lin_names),
            "objective": {names[k]: float(v) for k, v in enumerate(self.objective) if v},
            "objective_offset": self.objective_offset,
            "exp_terms": [
                {"constraint": int(self.exp_owner[t]), "exponent": row(self.exp_A, t), "offset": float(self.exp_b[t])}
                for t in range(len(self.exp_b))
            ],
            "affine": [
                {"label": self.labels[k], "linear": row(self.lin_A, k), "rhs": float(self.rhs[k])}
                for k in range(self.num_constraints)
            ],
            "equalities": [
                {"linear": {names[c]: float(v) for c, v in enumerate(r) if v}, "rhs": float(b)}
                for r, b in zip(self.eq_A, self.eq_b)
            ],
        }

    def dump_json(self, path=None) -> str:
        text = json.dumps(self.to_dict(), indent=1, sort_keys=True)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text + "\n")
        return text


class ProgramBuilder:
    """Accumulates variables and constraints, then freezes a :class:`LogDomainProgram`."""

    def __init__(self):
        self.log_names: list[str] = []
        self.lin_names: list[str] = []
        self._kind: dict[str, str] = {}
        self._terms: list[tuple[int, dict, float]] = []
        self._lin_rows: list[dict] = []
        self._rhs: list[float] = []
        self._labels: list[str] = []
        self._eqs: list[tuple[dict, float]] = []
        self.objective: dict[str, float] = {}
        self.objective_offset = 0.0
        self.hint: dict[str, float] = {}

    def log_var(self, name: str) -> str:
        if name in self._kind:
            raise ValueError(f"variable {name} already declared")
        self._kind[name] = "log"
        self.log_names.append(name)
        return name

    def lin_var(self, name: str) -> str:
        if name in self._kind:
            raise ValueError(f"variable {name} already declared")
        self._kind[name] = "lin"
        self.lin_names.append(name)
        return name

    def _check(self, names, kinds=("log", "lin")):
        for nm in names:
            if self._kind.get(nm) not in kinds:
                raise KeyError(f"undeclared variable {nm}")

    def add_inequality(self, posy=None, linear: Mapping[str, float] | None = None, rhs: float = 1.0, label: str = ""):
        """``posy(exp(y)) + linear @ z <= rhs``."""
        posy = _as_posynomial(posy)
        linear = dict(linear or {})
        self._check(linear)
        k = len(self._rhs)
        if posy is not None:
            for m in posy:
                self._check(m.exponents, ("log",))
                self._terms.append((k, m.exponents, math.log(m.coeff)))
        self._lin_rows.append(linear)
        self._rhs.append(float(rhs))
        self._labels.append(label)
        return k

    def add_equality(self, linear: Mapping[str, float], rhs: float):
        self._check(linear, ("log",))
        self._eqs.append((dict(linear), float(rhs)))

    def add_monomial_equality(self, mono: Monomial):
        """``mono = 1``, i.e. ``exponents @ y + log(coeff) = 0``."""
        self.add_equality(mono.exponents, -math.log(mono.coeff))

    def add_block(self, block: "RobustRowBlock"):
        for nm in block.nu_names:
            self.lin_var(nm)
        for posy, linear, rhs, label in block.constraints:
            self.add_inequality(posy, linear, rhs, label)

    def build(self) -> LogDomainProgram:
        names = self.log_names + self.lin_names
        col = {nm: k for k, nm in enumerate(names)}
        N = len(names)
        rows, cols, vals = [], [], []
        for t, (_, exps, _) in enumerate(self._terms):
            for nm, v in exps.items():
                rows.append(t)
                cols.append(col[nm])
                vals.append(v)
        exp_A = sp.csr_matrix((vals, (rows, cols)), shape=(len(self._terms), N))
        exp_b = np.array([b for _, _, b in self._terms], dtype=float)
        owner = np.array([k for k, _, _ in self._terms], dtype=np.int64)
        rows, cols, vals = [], [], []
        for k, lin in enumerate(self._lin_rows):
            for nm, v in lin.items():
                rows.append(k)
                cols.append(col[nm])
                vals.append(v)
        lin_A = sp.csr_matrix((vals, (rows, cols)), shape=(len(self._rhs), N))
        eq_A = np.zeros((len(self._eqs), N))
        for r, (lin, _) in enumerate(self._eqs):
            for nm, v in lin.items():
                eq_A[r, col[nm]] += v
        eq_b = np.array([b for _, b in self._eqs], dtype=float)
        c = np.zeros(N)
        for nm, v in self.objective.items():
            c[col[nm]] = v
        hint = None
        if self.hint and set(self.hint) >= set(names):
            hint = np.array([self.hint[nm] for nm in names])
        return LogDomainProgram(
            tuple(self.log_names),
            tuple(self.lin_names),
            c,
            exp_A,
            exp_b,
            owner,
            lin_A,
            np.array(self._rhs, dtype=float),
            tuple(self._labels),
            eq_A,
            eq_b,
            float(self.objective_offset),
            hint,
        )


def log_transform(objective: Monomial, inequalities=(), equalities=(), builder: ProgramBuilder | None = None) -> LogDomainProgram:
    """Convexify ``min objective s.t. posy_k <= 1, mono_j = 1`` by ``y = log x``.

    Each posynomial becomes ``sum_t exp(a_t @ y + log c_t) <= 1`` and each
    monomial equality becomes ``b_j @ y + log d_j = 0``. Variables are
    declared on first use unless ``builder`` already knows them.
    """
    bld = builder or ProgramBuilder()

    def declare(m: Monomial):
        for nm in m.exponents:
            if nm not in bld._kind:
                bld.log_var(nm)

    declare(objective)
    for p in inequalities:
        for m in _as_posynomial(p):
            declare(m)
    for m in equalities:
        declare(m)
    for p in inequalities:
        bld.add_inequality(p, None, 1.0, "posy")
    for m in equalities:
        bld.add_monomial_equality(m)
    bld.objective = dict(objective.exponents)
    bld.objective_offset = math.log(objective.coeff)
    return bld.build()


@dataclass(frozen=True)
class RobustRowBlock:
    """Dualized form of ``sup_{F beta + g >= 0} beta @ m(x) + fixed(x) <= 1``.

    The reduced polytope keeps the free coordinates ``free`` and orders its
    rows as upper bounds, lower bounds, then surviving data rows.
    """

    nu_names: tuple[str, ...]
    constraints: tuple
    free: np.ndarray
    pinned: np.ndarray
    F: np.ndarray
    g: np.ndarray
    fixed_term: Posynomial
    monomials: tuple[Monomial, ...]

    def strict_multipliers(self, values: Mapping[str, float]) -> np.ndarray | None:
        """Strictly feasible ``nu`` at the point ``values`` if the upper corner leaves slack."""
        k = len(self.free)
        if k == 0:
            return np.zeros(0)
        m = np.array([self.monomials[j](values) for j in self.free])
        upper = self.g[:k]
        slack = 1.0 - (upper @ m + self.fixed_term(values))
        if slack <= 0:
            return None
        g_pos = np.abs(self.g).sum()
        eps = slack / (4.0 * (g_pos + 1.0))
        nu = np.full(len(self.g), eps)
        nu[:k] = m + 2.0 * eps
        ok = np.all(self.F.T @ nu + m < 0) and self.g @ nu + self.fixed_term(values) < 1.0
        return nu if ok else None


def _box_from_rows(F, g):
    """Bounds implied by rows with a single nonzero."""
    k = F.shape[1]
    lo = np.full(k, -np.inf)
    hi = np.full(k, np.inf)
    for r in range(F.shape[0]):
        nz = np.flatnonzero(F[r])
        if nz.size != 1:
            continue
        j = nz[0]
        a = F[r, j]
        if a > 0:
            lo[j] = max(lo[j], -g[r] / a)
        else:
            hi[j] = min(hi[j], g[r] / -a)
    return lo, hi


def _drop_redundant(rows, rhs, lo, hi):
    """Remove inequalities ``a @ beta + g >= 0`` implied by the others and the box."""
    rows = [np.asarray(a) for a in rows]
    rhs = list(rhs)
    width = hi - lo
    keep = list(range(len(rows)))
    for r in range(len(rows)):
        others = [q for q in keep if q != r]
        # shifted variable x = beta - lo in [0, width]
        A = np.vstack([np.eye(len(lo))] + [-rows[q][None, :] for q in others])
        b = np.concatenate([width, [rhs[q] + rows[q] @ lo for q in others]])
        res = simplex_max(-rows[r], A, b)
        if res.status != "optimal":
            continue
        worst = rhs[r] + rows[r] @ lo - res.value
        if worst >= -1e-13 * max(1.0, abs(rhs[r])):
            keep = others
    return [rows[q] for q in keep], [rhs[q] for q in keep]


def dualize_robust_row(
    F,
    g,
    monomials,
    fixed_term,
    prefix: str = "",
    lower=None,
    upper=None,
    prune: bool = True,
) -> RobustRowBlock:
    """Replace a robust posynomial row by its LP dual.

    ``sup { beta @ m(x) : F beta + g >= 0, beta >= 0 } + fixed(x) <= 1`` holds
    iff some ``nu >= 0`` satisfies ``F.T nu + m(x) <= 0`` and
    ``g @ nu + fixed(x) <= 1`` (strong LP duality on a bounded nonempty
    polytope).

    Coordinates with equal lower and upper bound are substituted into the
    fixed term. With ``prune``, rows that cannot bind inside the box are
    dropped; they do not change the polytope.
    """
    F = np.atleast_2d(np.asarray(F, dtype=float))
    g = np.asarray(g, dtype=float)
    monomials = tuple(monomials)
    k = len(monomials)
    if F.size == 0:
        F = np.zeros((0, k))
    if F.shape != (len(g), k):
        raise ValueError("F, g and monomials have inconsistent sizes")
    fixed = _as_posynomial(fixed_term)

    if lower is None or upper is None:
        lo, hi = _box_from_rows(F, g)
        lo = np.maximum(lo, 0.0)
    else:
        lo, hi = np.array(lower, dtype=float), np.array(upper, dtype=float)
    if k:
        res = simplex_max(np.ones(k), -F, g)
        if res.status == "unbounded":
            raise ValueError("robust row polytope is unbounded")
        if res.status == "infeasible":
            raise EmptyUncertaintySetError("robust row polytope is empty")
        for j in np.flatnonzero(~np.isfinite(hi)):
            hi[j] = simplex_max(np.eye(k)[j], -F, g).value

    pinned = np.flatnonzero(hi <= lo)
    free = np.flatnonzero(hi > lo)
    terms = list(fixed.terms)
    for j in pinned:
        if lo[j] > 0:
            terms.append(monomials[j] * lo[j])
    fixed = Posynomial(terms)

    g_red = g + F[:, pinned] @ lo[pinned]
    F_red = F[:, free]
    lo_f, hi_f = lo[free], hi[free]
    nf = len(free)
    up_rows = [-np.eye(nf), hi_f]
    low_rows = [np.eye(nf), -lo_f]
    extra_F, extra_g = [], []
    for r in range(F.shape[0]):
        a = F_red[r]
        nz = np.flatnonzero(a)
        if nz.size == 0:
            if g_red[r] < -1e-12:
                raise EmptyUncertaintySetError("robust row polytope is empty")
            continue
        worst = np.sum(np.where(a > 0, a * lo_f, a * hi_f)) + g_red[r]
        # Single-coordinate rows implied by the box duplicate a box row.
        if (prune or nz.size == 1) and worst >= -1e-15 * max(1.0, abs(g_red[r])):
            continue
        extra_F.append(a)
        extra_g.append(g_red[r])
    if prune and extra_F:
        extra_F, extra_g = _drop_redundant(extra_F, extra_g, lo_f, hi_f)
    if nf:
        F_blk = np.vstack([up_rows[0], low_rows[0]] + ([np.array(extra_F)] if extra_F else []))
        g_blk = np.concatenate([up_rows[1], low_rows[1], np.array(extra_g)])
    else:
        F_blk = np.zeros((0, 0))
        g_blk = np.zeros(0)

    nu_names = tuple(f"{prefix}nu[{r}]" for r in range(len(g_blk)))
    cons = []
    for jj, j in enumerate(free):
        lin = {nu_names[r]: F_blk[r, jj] for r in np.flatnonzero(F_blk[:, jj])}
        cons.append((monomials[j], lin, 0.0, f"{prefix}dual[{j}]"))
    cons.append((fixed, {nu_names[r]: g_blk[r] for r in range(len(g_blk)) if g_blk[r] != 0}, 1.0, f"{prefix}sup"))
    for r, nm in enumerate(nu_names):
        cons.append((None, {nm: -1.0}, 0.0, f"{prefix}nu>=0[{r}]"))
    return RobustRowBlock(nu_names, tuple(cons), free, pinned, F_blk, g_blk, fixed, monomials)


def _budget_posynomial(cost: CostModel, budget: float, control) -> Posynomial:
    """``sum_i k_i / dc_i <= C + sum_i k_i / upper_i``, normalized to ``<= 1``."""
    k = cost.k
    total = budget + sum(k[i] / cost.upper[i] for i in control)
    if total <= 0:
        raise ValueError("budget is negative after normalization")
    return Posynomial([Monomial(k[i] / total, {dc_name(i): -1.0}) for i in control])


def _starting_rates(cost: CostModel, budget: float, control) -> np.ndarray:
    dc = cost.upper.copy()
    if control:
        share = min(0.5, budget / (2.0 * len(control)))
        for i in control:
            dc[i] = cost.inverse(i, share)
    return dc


def _perron_start(B_upper, dc):
    rho, v = spectral_radius(state_matrix(B_upper, dc))
    y_u = np.log(v)
    y_u -= y_u.mean()
    return rho, y_u


def _declare_core(bld: ProgramBuilder, n: int):
    for i in range(n):
        bld.log_var(dc_name(i))
    for i in range(n):
        bld.log_var(u_name(i))
    bld.log_var(LAMBDA)
    bld.add_equality({u_name(i): 1.0 for i in range(n)}, 0.0)
    bld.objective = {LAMBDA: 1.0}


def _add_rate_constraints(bld, cost: CostModel, budget: float, control, pinned_dc):
    for i, val in pinned_dc.items():
        bld.add_equality({dc_name(i): 1.0}, math.log(val))
    for i in control:
        bld.add_inequality(None, {dc_name(i): 1.0}, math.log(cost.upper[i]), f"dc<=upper[{i}]")
        bld.add_inequality(None, {dc_name(i): -1.0}, -math.log(cost.lower[i]), f"dc>=lower[{i}]")
    if control:
        bld.add_inequality(_budget_posynomial(cost, budget, control), None, 1.0, "budget")


def _normalize_control(n: int, control, budget: float):
    if budget < 0:
        raise ValueError("budget must be nonnegative")
    control = sorted({int(i) for i in (range(n) if control is None else control)})
    if control and (control[0] < 0 or control[-1] >= n):
        raise ValueError("control node out of range")
    # A zero budget leaves exactly one feasible allocation.
    return control if budget > 0 else []


def _robust_program(model: UncertaintyModel, cost: CostModel | None, budget: float, control, pinned_dc, start_dc):
    net = model.network
    n = net.n
    if not is_strongly_connected(net):
        raise ValueError("contact network must be strongly connected")
    if cost is not None and cost.n != n:
        raise ValueError("cost model size does not match the network")
    bld = ProgramBuilder()
    _declare_core(bld, n)
    _add_rate_constraints(bld, cost, budget, control, pinned_dc)

    blocks = []
    for row in model.rows:
        i = row.row
        srcs = net.src[list(row.edges)]
        monos = [Monomial(1.0, {u_name(int(j)): 1.0, u_name(i): -1.0, LAMBDA: -1.0}) for j in srcs]
        fixed = Monomial(1.0, {dc_name(i): 1.0, LAMBDA: -1.0})
        block = dualize_robust_row(row.F, row.g, monos, fixed, f"r{i}.", row.lower, row.upper)
        bld.add_block(block)
        blocks.append(block)

    # Strictly feasible start: Perron vector of the upper-corner matrix.
    rho, y_u = _perron_start(model.upper_matrix(), start_dc)
    lam = 1.01 * rho
    values = {dc_name(i): start_dc[i] for i in range(n)}
    values.update({u_name(i): math.exp(y_u[i]) for i in range(n)})
    values[LAMBDA] = lam
    hint = {dc_name(i): math.log(start_dc[i]) for i in range(n)}
    hint.update({u_name(i): y_u[i] for i in range(n)})
    hint[LAMBDA] = math.log(lam)
    for block in blocks:
        nu = block.strict_multipliers(values)
        if nu is None:
            hint = {}
            break
        hint.update(zip(block.nu_names, nu))
    bld.hint = hint
    return bld.build()


def assemble_robust_allocation(model: UncertaintyModel, cost: CostModel, budget: float, control=None) -> LogDomainProgram:
    """Conic GP whose optimum is the smallest certified worst-case spectral radius.

    Variables: ``log dc``, ``log u``, ``log lam`` and one multiplier block per
    row of the uncertainty model. Nodes outside ``control`` keep their
    natural rate through an equality constraint.
    """
    n = model.n
    control = _normalize_control(n, control, budget)
    pinned = {i: cost.upper[i] for i in range(n) if i not in set(control)}
    start = _starting_rates(cost, budget, control)
    return _robust_program(model, cost, budget, control, pinned, start)


def assemble_worst_case(model: UncertaintyModel, dc) -> LogDomainProgram:
    """Same program with every rate pinned to ``dc``; its optimum is the worst-case radius."""
    dc = np.asarray(dc, dtype=float)
    n = model.n
    if dc.shape != (n,) or np.any(dc <= 0) or np.any(dc > 1):
        raise ValueError("dc must be a length-n vector in (0, 1]")
    pinned = {i: float(dc[i]) for i in range(n)}
    return _robust_program(model, None, 0.0, [], pinned, dc)


def assemble_known_network(B, cost: CostModel, budget: float, control=None) -> LogDomainProgram:
    """Plain GP for the allocation under a known rate matrix.

    ``minimize lam`` subject to ``sum_j B_ij u_j / (u_i lam) + dc_i / lam <= 1``,
    the budget, rate bounds and ``prod u = 1``.
    """
    B = np.asarray(B, dtype=float)
    n = B.shape[0]
    control = _normalize_control(n, control, budget)
    ctrl = set(control)
    ineqs = []
    for i in range(n):
        terms = [Monomial(1.0, {dc_name(i): 1.0, LAMBDA: -1.0})]
        for j in np.flatnonzero(B[i]):
            terms.append(Monomial(B[i, j], {u_name(int(j)): 1.0, u_name(i): -1.0, LAMBDA: -1.0}))
        ineqs.append(Posynomial(terms))
    eqs = [Monomial(1.0, {u_name(i): 1.0 for i in range(n)})]
    for i in range(n):
        if i in ctrl:
            ineqs.append(Monomial(1.0 / cost.upper[i], {dc_name(i): 1.0}))
            ineqs.append(Monomial(cost.lower[i], {dc_name(i): -1.0}))
        else:
            eqs.append(Monomial(1.0 / cost.upper[i], {dc_name(i): 1.0}))
    if control:
        ineqs.append(_budget_posynomial(cost, budget, control))

    bld = ProgramBuilder()
    for i in range(n):
        bld.log_var(dc_name(i))
    for i in range(n):
        bld.log_var(u_name(i))
    bld.log_var(LAMBDA)
    start = _starting_rates(cost, budget, control)
    rho, y_u = _perron_start(B, start)
    bld.hint = {dc_name(i): math.log(start[i]) for i in range(n)}
    bld.hint.update({u_name(i): y_u[i] for i in range(n)})
    bld.hint[LAMBDA] = math.log(1.01 * rho)
    return log_transform(Monomial.var(LAMBDA), ineqs, eqs, builder=bld)
