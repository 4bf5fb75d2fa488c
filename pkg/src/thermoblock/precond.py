"""CPR and block-factorization preconditioners for the pressure-temperature Newton system.

Both are fixed linear maps (one V-cycle per inner solve), so they can be used
as right preconditioners in plain GMRES.
"""
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .amg import AmgOptions, build_hierarchy
from .discretization import BlockJacobian
from .linalg import BlockVector, as_csr, ilu0_factor

SCHUR_KINDS = ("s_tilde_T", "s_att", "s_diag", "exact")
DECOUPLINGS = ("none", "quasi_impes", "true_impes")


@dataclass(frozen=True)
class PreconditionerConfig:
    kind: str = "block"              # block | cpr
    schur: str = "s_tilde_T"         # block only
    decoupling: str = "none"         # cpr only
    inner: str = "amg"               # amg | exact (direct inner solves, for verification)
    amg: AmgOptions = field(default_factory=AmgOptions)

    def __post_init__(self):
        if self.kind not in ("block", "cpr"):
            raise ValueError(f"unknown preconditioner kind {self.kind!r}")
        if self.schur not in SCHUR_KINDS:
            raise ValueError(f"unknown Schur approximation {self.schur!r}")
        if self.decoupling not in DECOUPLINGS:
            raise ValueError(f"unknown decoupling {self.decoupling!r}")
        if self.inner not in ("amg", "exact"):
            raise ValueError(f"unknown inner solver {self.inner!r}")

    @property
    def label(self):
        return f"block[{self.schur}]" if self.kind == "block" else "cpr" + ("" if self.decoupling == "none" else f"[{self.decoupling}]")


def _inner_solver(A, config):
    if config.inner == "amg":
        return build_hierarchy(A, config.amg)
    A = A.tocsc()
    if A.shape[0] <= 2000:
        lu = sla.lu_factor(A.toarray())
        return lambda b: sla.lu_solve(lu, b)
    return spla.splu(A).solve


def dense_schur(J):
    """Exact ``ATT - ATp App^-1 ApT`` as a dense array (small problems only)."""
    X = sla.lu_solve(sla.lu_factor(J.App.toarray()), J.ApT.toarray())
    return J.ATT.toarray() - J.ATp @ X


def schur_diag(J):
    """``ATT - ATp diag(App)^-1 ApT`` assembled sparsely."""
    d = J.App.diagonal()
    if np.any(d == 0):
        raise ZeroDivisionError("zero on the diagonal of App")
    return as_csr(J.ATT - J.ATp @ sp.diags(1.0 / d) @ J.ApT)


def schur_matrix(J, schur, S_e=None):
    if schur == "s_tilde_T":
        if S_e is None:
            raise ValueError("s_tilde_T needs the assembled Schur approximation")
        return as_csr(S_e)
    if schur == "s_att":
        return as_csr(J.ATT)
    if schur == "s_diag":
        return schur_diag(J)
    return dense_schur(J)


def colsum(A):
    return np.asarray(A.sum(axis=0)).ravel()


def decoupling_operator(J, mode):
    """Left-multiply the system by ``[[I, -D], [0, I]]``; returns a new BlockJacobian and D's diagonal."""
    n = J.n
    if mode == "none":
        return J, np.zeros(n)
    if mode == "quasi_impes":
        num, den = J.ApT.diagonal(), J.ATT.diagonal()
    elif mode == "true_impes":
        num, den = colsum(J.ApT), colsum(J.ATT)
    else:
        raise ValueError(f"unknown decoupling {mode!r}")
    if np.any(den == 0):
        raise ZeroDivisionError(f"zero entry in the {mode} denominator of ATT")
    d = num / den
    D = sp.diags(d)
    out = BlockJacobian(
        as_csr(J.App - D @ J.ATp), as_csr(J.ApT - D @ J.ATT), J.ATp, J.ATT,
        J.bp - d * J.bT, J.bT,
    )
    return out, d


def interleave_permutation(n):
    """``perm[k]`` is the block-ordered index stored at interleaved position k."""
    perm = np.empty(2 * n, dtype=np.int64)
    perm[0::2] = np.arange(n)
    perm[1::2] = np.arange(n) + n
    return perm


class BlockPreconditioner:
    """Lower-upper block factorization with an approximate temperature Schur complement."""

    def __init__(self, J, schur_mat, config):
        self.J = J
        self.config = config
        self.n = J.n
        self.pressure = _inner_solver(as_csr(J.App), config)
        if isinstance(schur_mat, np.ndarray):
            lu = sla.lu_factor(schur_mat)
            self.schur = lambda b: sla.lu_solve(lu, b)
        else:
            self.schur = _inner_solver(schur_mat, config)

    def apply(self, r):
        J = self.J
        rp, rT = r.p, r.T
        xp = self.pressure(rp)
        dT = self.schur(rT - J.ATp @ xp)
        dp = self.pressure(rp - J.ApT @ dT)
        return BlockVector(dp, dT)

    def __call__(self, x):
        n = self.n
        return self.apply(BlockVector(x[:n], x[n:])).flat()


class CprPreconditioner:
    """Two-stage multiplicative CPR: AMG on App, then ILU(0) of the interleaved full system."""

    def __init__(self, J, config):
        self.config = config
        self.n = n = J.n
        self.d = np.zeros(n)
        if config.decoupling != "none":
            J, self.d = decoupling_operator(J, config.decoupling)
        self.J = J
        self.pressure = _inner_solver(as_csr(J.App), config)
        self.perm = interleave_permutation(n)
        full = J.full()
        if config.inner == "exact":
            solve = _inner_solver(full, config)
            self.stage2 = solve
        else:
            A_il = as_csr(full[self.perm][:, self.perm])
            self.ilu = ilu0_factor(A_il)
            perm = self.perm

            def stage2(b):
                y = np.empty_like(b)
                y[perm] = self.ilu.solve(b[perm])
                return y
            self.stage2 = stage2

    def apply(self, r):
        J = self.J
        rp, rT = r.p, r.T
        if self.config.decoupling != "none":
            rp = rp - self.d * rT
        x1 = self.pressure(rp)
        r1 = np.concatenate([rp - J.App @ x1, rT - J.ATp @ x1])
        x = self.stage2(r1)
        x[: self.n] += x1
        return BlockVector.from_flat(x)

    def __call__(self, x):
        n = self.n
        return self.apply(BlockVector(x[:n], x[n:])).flat()


def build(config, J, S_e=None):
    if config.kind == "block":
        return BlockPreconditioner(J, schur_matrix(J, config.schur, S_e), config)
    return CprPreconditioner(J, config)


def apply_block(inst, r):
    return inst.apply(r)


def apply_cpr(inst, r):
    return inst.apply(r)
