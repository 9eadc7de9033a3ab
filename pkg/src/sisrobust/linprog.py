"""Small dense two-phase simplex with Bland's rule.

Solves ``maximize c @ x  s.t.  A @ x <= b, x >= 0``. Intended for the
handful of variables and constraints in one row of an uncertainty set,
where a deterministic tableau method is simpler than a general solver.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["LPResult", "simplex_max"]


@dataclass(frozen=True)
class LPResult:
    status: str  # "optimal" | "infeasible" | "unbounded"
    x: np.ndarray | None
    value: float


def _pivot(tab, basis, r, k):
    tab[r] /= tab[r, k]
    col = tab[:, k].copy()
    col[r] = 0.0
    tab -= np.outer(col, tab[r])
    basis[r] = k


PIVOT_TOL = 1e-9


def _run(tab, basis, allowed, eps, max_iter):
    """Bland-rule primal simplex on ``tab``; the last row holds reduced costs."""
    m = tab.shape[0] - 1
    for _ in range(max_iter):
        obj = tab[-1, :-1]
        candidates = np.flatnonzero((obj > eps) & allowed)
        if candidates.size == 0:
            return "optimal"
        k = candidates[0]
        col = tab[:m, k]
        # Tiny pivots on nearly collinear rows wreck the tableau.
        rows = np.flatnonzero(col > PIVOT_TOL * np.abs(col).max())
        if rows.size == 0:
            return "unbounded"
        ratios = tab[rows, -1] / col[rows]
        best = ratios.min()
        ties = rows[ratios <= best + eps * max(1.0, abs(best))]
        r = ties[np.argmin(np.asarray(basis)[ties])]
        _pivot(tab, basis, r, k)
    raise RuntimeError("simplex iteration cap reached")


def _refactor(tab0, cfull, basis):
    """Tableau for ``basis`` rebuilt from the original rows, or None if singular."""
    rows = tab0[:-1]
    Bm = rows[:, basis]
    try:
        body = np.linalg.solve(Bm, rows)
    except np.linalg.LinAlgError:
        return None
    body[np.abs(body) < 1e-15] = 0.0
    body[:, -1] = np.maximum(body[:, -1], 0.0)
    out = np.vstack([body, np.zeros(rows.shape[1])])
    out[-1, :-1] = cfull
    out[-1] -= cfull[basis] @ body
    return out


def simplex_max(c, A, b, eps: float = 1e-11, max_iter: int = 10_000) -> LPResult:
    c = np.asarray(c, dtype=float)
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float)
    m, n = A.shape
    if c.shape != (n,) or b.shape != (m,):
        raise ValueError("inconsistent LP dimensions")
    if m == 0:
        if np.any(c > eps):
            return LPResult("unbounded", None, np.inf)
        return LPResult("optimal", np.zeros(n), 0.0)

    # Row then column equilibration keeps pivot and reduced-cost tolerances
    # meaningful for data rows with tiny coefficients.
    rscale = np.abs(A).max(axis=1)
    rscale[rscale == 0.0] = 1.0
    A = A / rscale[:, None]
    b = b / rscale
    cscale = np.abs(A).max(axis=0)
    cscale[cscale == 0.0] = 1.0
    A = A / cscale
    c = c / cscale
    neg = np.flatnonzero(b < 0)
    n_art = neg.size
    width = n + m + n_art + 1
    tab = np.zeros((m + 1, width))
    tab[:m, :n] = A
    tab[:m, n : n + m] = np.eye(m)
    tab[:m, -1] = b
    tab[neg, :-1] *= -1.0
    tab[neg, -1] *= -1.0
    basis = list(range(n, n + m))
    art_cols = n + m + np.arange(n_art)
    for a, r in zip(art_cols, neg):
        tab[r, a] = 1.0
        basis[r] = int(a)

    tab0 = tab.copy()
    allowed = np.ones(width - 1, dtype=bool)
    if n_art:
        # Phase I: maximize -sum(artificials).
        tab[-1, :] = tab[neg].sum(axis=0)
        tab[-1, art_cols] = 0.0
        _run(tab, basis, allowed, eps, max_iter)
        # Last row carries -objective, i.e. the remaining artificial mass.
        infeas = tab[-1, -1]
        if infeas > 1e-9 * max(1.0, np.abs(b).max()):
            return LPResult("infeasible", None, float(infeas))
        is_art = np.zeros(width - 1, dtype=bool)
        is_art[art_cols] = True
        for r in range(m):
            if is_art[basis[r]]:
                nz = np.flatnonzero((np.abs(tab[r, :-1]) > eps) & ~is_art)
                if nz.size:
                    _pivot(tab, basis, r, nz[0])
        allowed = ~is_art

    # Phase II objective row: reduced costs c_j - c_B B^{-1} A_j.
    cfull = np.zeros(width - 1)
    cfull[:n] = c
    tab[-1, :-1] = cfull
    tab[-1, -1] = 0.0
    for r, k in enumerate(basis):
        if cfull[k] != 0.0:
            tab[-1] -= cfull[k] * tab[r]
    status = _run(tab, basis, allowed, eps, max_iter)
    # Refactor from the original data and resume until the fresh tableau agrees.
    for _ in range(5):
        if status == "unbounded":
            return LPResult("unbounded", None, np.inf)
        fresh = _refactor(tab0, cfull, basis)
        if fresh is None:
            break
        tab[:] = fresh
        if not np.any((tab[-1, :-1] > eps) & allowed):
            break
        status = _run(tab, basis, allowed, eps, max_iter)
    x = np.zeros(width - 1)
    for r, k in enumerate(basis):
        x[k] = tab[r, -1]
    x = np.maximum(x[:n], 0.0)
    value = float(c @ x)
    return LPResult("optimal", x / cscale, value)
