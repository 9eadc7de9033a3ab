"""Directed contact networks and Perron-Frobenius machinery.

Node indices are 0-based in the Python API and 1-based in CSV files.
An edge ``(j, i)`` carries infection from node ``j`` into node ``i`` and
occupies entry ``B[i, j]`` of the rate matrix.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "ContactNetwork",
    "ReducibleMatrixError",
    "ConvergenceError",
    "state_matrix",
    "is_strongly_connected",
    "is_irreducible",
    "spectral_radius",
    "inf_max_value",
    "load_network_csv",
    "save_network_csv",
]


class ReducibleMatrixError(ValueError):
    """Raised when a matrix expected to be irreducible is not."""


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class ContactNetwork:
    """Directed weighted graph with nominal transmission rates.

    Parameters
    ----------
    n : int
        Number of nodes.
    src, dst : array of int
        Edge endpoints, transmission ``src -> dst``.
    weight : array of float
        Nominal rate of each edge, in (0, 1).
    """

    n: int
    src: np.ndarray
    dst: np.ndarray
    weight: np.ndarray
    _in_edges: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        src = np.asarray(self.src, dtype=np.int64).ravel()
        dst = np.asarray(self.dst, dtype=np.int64).ravel()
        w = np.asarray(self.weight, dtype=float).ravel()
        if not (len(src) == len(dst) == len(w)):
            raise ValueError("src, dst and weight must have equal length")
        if self.n < 1:
            raise ValueError("network needs at least one node")
        if len(src) and (src.min() < 0 or dst.min() < 0 or max(src.max(), dst.max()) >= self.n):
            raise ValueError("node index out of range")
        if np.any(src == dst):
            raise ValueError("self-loops are not allowed")
        if np.any(~np.isfinite(w)) or np.any(w <= 0) or np.any(w >= 1):
            raise ValueError("nominal rates must lie in (0, 1)")
        pairs = set(zip(src.tolist(), dst.tolist()))
        if len(pairs) != len(src):
            raise ValueError("duplicate edges")
        for arr in (src, dst, w):
            arr.setflags(write=False)
        object.__setattr__(self, "src", src)
        object.__setattr__(self, "dst", dst)
        object.__setattr__(self, "weight", w)
        in_edges = tuple(
            tuple(int(e) for e in np.flatnonzero(dst == i)[np.argsort(src[dst == i], kind="stable")])
            for i in range(self.n)
        )
        object.__setattr__(self, "_in_edges", in_edges)

    @classmethod
    def from_matrix(cls, B) -> "ContactNetwork":
        """Network whose edges are the nonzero off-diagonal entries of ``B``."""
        B = np.asarray(B, dtype=float)
        if B.ndim != 2 or B.shape[0] != B.shape[1]:
            raise ValueError("B must be square")
        if np.any(np.diag(B) != 0):
            raise ValueError("B must have a zero diagonal")
        dst, src = np.nonzero(B)
        order = np.lexsort((dst, src))
        return cls(B.shape[0], src[order], dst[order], B[dst[order], src[order]])

    @property
    def num_edges(self) -> int:
        return len(self.src)

    def in_edges(self, i: int) -> tuple[int, ...]:
        """Edge ids pointing into node ``i``, ordered by source node."""
        return self._in_edges[i]

    def in_neighbors(self, i: int) -> np.ndarray:
        return self.src[list(self._in_edges[i])]

    def rate_matrix(self, weights=None) -> np.ndarray:
        """Dense ``n x n`` matrix with ``B[dst, src] = weight``."""
        w = self.weight if weights is None else np.asarray(weights, dtype=float)
        B = np.zeros((self.n, self.n))
        B[self.dst, self.src] = w
        return B

    def support(self) -> np.ndarray:
        return self.rate_matrix() > 0

    def weighted_degree(self) -> np.ndarray:
        """Total (in + out) weighted degree of every node."""
        deg = np.zeros(self.n)
        np.add.at(deg, self.dst, self.weight)
        np.add.at(deg, self.src, self.weight)
        return deg


def state_matrix(B, dc) -> np.ndarray:
    """``M(B, dc) = B + diag(dc)``."""
    B = np.asarray(B, dtype=float)
    dc = np.asarray(dc, dtype=float)
    if B.ndim != 2 or B.shape[0] != B.shape[1]:
        raise ValueError("B must be square")
    if dc.shape != (B.shape[0],):
        raise ValueError(f"dc has shape {dc.shape}, expected ({B.shape[0]},)")
    if np.any(B < 0):
        raise ValueError("B must be nonnegative")
    if np.any(np.diag(B) != 0):
        raise ValueError("B must have a zero diagonal")
    if np.any(dc <= 0) or np.any(dc > 1):
        raise ValueError("dc entries must lie in (0, 1]")
    return B + np.diag(dc)


def _reaches_all(adj: np.ndarray, start: int) -> bool:
    seen = np.zeros(adj.shape[0], dtype=bool)
    seen[start] = True
    stack = [start]
    while stack:
        k = stack.pop()
        for nxt in np.flatnonzero(adj[k] & ~seen):
            seen[nxt] = True
            stack.append(int(nxt))
    return bool(seen.all())


def is_irreducible(M) -> bool:
    """True iff the directed graph of the nonzero pattern of ``M`` is strongly connected."""
    M = np.asarray(M)
    if M.shape[0] == 1:
        return True
    # a_ij != 0 is an edge j -> i; forward reach uses the transpose.
    adj = M.T != 0
    return _reaches_all(adj, 0) and _reaches_all(adj.T, 0)


def is_strongly_connected(net: ContactNetwork) -> bool:
    return is_irreducible(net.support())


def spectral_radius(M, tol: float = 1e-10, max_iter: int = 10_000):
    """Perron root and Perron vector of an irreducible nonnegative matrix.

    Power iteration from the uniform vector. Irreducibility is the
    caller's responsibility; reducible input surfaces as a nonpositive
    iterate or as non-convergence. Matrices with a zero on the
    diagonal are shifted by half their maximum row sum, which makes the
    iteration matrix primitive without changing the eigenvector.
    Iteration stops once the Collatz-Wielandt bracket
    ``min_i (Mv)_i / v_i <= rho <= max_i (Mv)_i / v_i`` is narrower than
    ``tol``.

    Returns
    -------
    rho : float
    v : ndarray
        Strictly positive, unit 1-norm.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("M must be square")
    if np.any(M < 0) or not np.all(np.isfinite(M)):
        raise ValueError("M must be finite and nonnegative")
    n = M.shape[0]
    shift = 0.0 if np.all(np.diag(M) > 0) else 0.5 * M.sum(axis=1).max()
    v = np.full(n, 1.0 / n)
    rho_prev = np.inf
    for _ in range(max_iter):
        Mv = M @ v
        if np.any(Mv <= 0):
            # a zero row of M: reducible
            raise ReducibleMatrixError("nonpositive iterate")
        ratios = Mv / v
        lo, hi = ratios.min(), ratios.max()
        rho = float(Mv.sum())  # v has unit 1-norm
        w = Mv + shift * v
        v = w / w.sum()
        if np.any(v <= 0):
            raise ReducibleMatrixError("nonpositive iterate")
        if hi - lo <= tol and abs(rho - rho_prev) <= tol:
            Mv = M @ v
            return float(Mv.sum()), v
        rho_prev = rho
    raise ConvergenceError(f"power iteration did not converge in {max_iter} steps")


def inf_max_value(M, u) -> float:
    """``max_i sum_j M_ij u_j / u_i``, an upper bound on ``rho(M)`` for ``u > 0``."""
    M = np.asarray(M, dtype=float)
    u = np.asarray(u, dtype=float)
    if u.shape != (M.shape[0],):
        raise ValueError("u has the wrong length")
    if np.any(u <= 0):
        raise ValueError("u must be strictly positive")
    return float(np.max((M @ u) / u))


def save_network_csv(net: ContactNetwork, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["src", "dst", "weight"])
        for s, d, w in zip(net.src, net.dst, net.weight):
            writer.writerow([int(s) + 1, int(d) + 1, repr(float(w))])


def load_network_csv(path, n: int | None = None) -> ContactNetwork:
    """Read a ``src,dst,weight`` edge list with 1-based node indices."""
    src, dst, w = [], [], []
    with open(Path(path), newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["src", "dst", "weight"]:
            raise ValueError(f"{path}: expected header 'src,dst,weight'")
        for row in reader:
            src.append(int(row["src"]) - 1)
            dst.append(int(row["dst"]) - 1)
            w.append(float(row["weight"]))
    if n is None:
        n = max(max(src, default=-1), max(dst, default=-1)) + 1
    return ContactNetwork(n, np.array(src, dtype=np.int64), np.array(dst, dtype=np.int64), np.array(w))
