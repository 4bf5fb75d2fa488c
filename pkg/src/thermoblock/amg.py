"""Classical Ruge-Stuben algebraic multigrid used as a fixed V(1,1) preconditioner.

Setup: negative-coupling strength graph, two-pass C/F splitting, classical
interpolation, Galerkin coarse operators. Solve: symmetric Gauss-Seidel
smoothing on every level and dense LU on the coarsest one.
"""
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ._backend import kernels
from .linalg.csr import as_csr

DENSE_COARSE_LIMIT = 3000


@dataclass(frozen=True)
class AmgOptions:
    strength_threshold: float = 0.25
    max_levels: int = 25
    coarse_threshold: int = 64
    pre_sweeps: int = 1
    post_sweeps: int = 1
    smoother: str = "symmetric_gauss_seidel"

    def __post_init__(self):
        if not 0 < self.strength_threshold < 1:
            raise ValueError("strength threshold must lie in (0, 1)")
        if self.pre_sweeps < 0 or self.post_sweeps < 0:
            raise ValueError("sweep counts must be non-negative")
        if self.max_levels < 1 or self.coarse_threshold < 1:
            raise ValueError("max_levels and coarse_threshold must be >= 1")
        if self.smoother != "symmetric_gauss_seidel":
            raise ValueError(f"unsupported smoother {self.smoother!r}")


@dataclass(eq=False)
class Level:
    A: sp.csr_matrix
    P: sp.csr_matrix = None
    R: sp.csr_matrix = None
    splitting: np.ndarray = None


@dataclass(eq=False)
class AmgHierarchy:
    levels: list
    options: AmgOptions
    coarse_solver: object = field(repr=False, default=None)

    @property
    def sizes(self):
        return [lvl.A.shape[0] for lvl in self.levels]

    def __call__(self, b):
        return vcycle(self, b)

    def operator_complexity(self):
        return sum(lvl.A.nnz for lvl in self.levels) / self.levels[0].A.nnz


def strength_graph(A, theta=0.25):
    """Boolean CSR graph: row i lists the j it strongly depends on.

    ``-a_ij >= theta * max_{k != i} (-a_ik)``, counting only negative couplings.
    """
    A = as_csr(A)
    n = A.shape[0]
    if A.shape[1] != n:
        raise ValueError("strength graph needs a square matrix")
    rows = np.repeat(np.arange(n), np.diff(A.indptr))
    off = A.indices != rows
    neg = np.where(off, -A.data, 0.0)
    rowmax = np.zeros(n)
    np.maximum.at(rowmax, rows, neg)
    keep = off & (neg > 0) & (neg >= theta * rowmax[rows])
    indptr = np.zeros(n + 1, dtype=np.int32)
    np.add.at(indptr, rows[keep] + 1, 1)
    indptr = np.cumsum(indptr).astype(np.int32)
    return sp.csr_matrix((np.ones(np.count_nonzero(keep), dtype=bool), A.indices[keep], indptr), shape=(n, n))


def coarsen(S):
    """C/F splitting (1 = coarse, 0 = fine) from a strength graph."""
    S = as_csr(S)
    T = as_csr(S.T)
    return np.asarray(kernels.rs_cf_splitting(S.indptr, S.indices, T.indptr, T.indices), dtype=np.int8)


def interpolation(A, splitting, S):
    A = as_csr(A)
    S = as_csr(S)
    splitting = np.ascontiguousarray(splitting, dtype=np.int8)
    Pp, Pj, Px, nc = kernels.classical_interpolation(A.indptr, A.indices, A.data, S.indptr, S.indices, splitting)
    return sp.csr_matrix((Px, Pj, Pp), shape=(A.shape[0], nc))


def build_hierarchy(A, options=None):
    options = options or AmgOptions()
    A = as_csr(A)
    levels = [Level(A)]
    while len(levels) < options.max_levels and A.shape[0] > options.coarse_threshold:
        S = strength_graph(A, options.strength_threshold)
        split = coarsen(S)
        nc = int(split.sum())
        if nc == 0 or nc >= A.shape[0]:
            break
        P = interpolation(A, split, S)
        R = as_csr(P.T)
        Ac = as_csr(R @ A @ P)
        lvl = levels[-1]
        lvl.P, lvl.R, lvl.splitting = as_csr(P), R, split
        A = Ac
        levels.append(Level(A))
    return AmgHierarchy(levels, options, _coarse_solver(levels[-1].A))


def _coarse_solver(A):
    n = A.shape[0]
    if n <= DENSE_COARSE_LIMIT:
        lu = sla.lu_factor(A.toarray(), check_finite=False)
        return lambda b: sla.lu_solve(lu, b, check_finite=False)
    # coarsening stalled on a large level: sparse Gaussian elimination
    solve = spla.splu(A.tocsc()).solve
    return solve


def _smooth(A, x, b, sweeps):
    for _ in range(sweeps):
        kernels.gauss_seidel(A.indptr, A.indices, A.data, x, b, True)
        kernels.gauss_seidel(A.indptr, A.indices, A.data, x, b, False)


def vcycle(hier, b):
    """One V-cycle from a zero initial guess (a fixed linear map of ``b``)."""
    b = np.ascontiguousarray(b, dtype=np.float64)
    return _cycle(hier, 0, b)


def _cycle(hier, k, b):
    levels = hier.levels
    if k == len(levels) - 1:
        return np.asarray(hier.coarse_solver(b), dtype=np.float64)
    lvl = levels[k]
    A = lvl.A
    x = np.zeros_like(b)
    _smooth(A, x, b, hier.options.pre_sweeps)
    r = b - A @ x
    x += lvl.P @ _cycle(hier, k + 1, np.ascontiguousarray(lvl.R @ r))
    _smooth(A, x, b, hier.options.post_sweeps)
    return x
