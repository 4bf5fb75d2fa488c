"""CSR helpers on top of :mod:`scipy.sparse`, block vectors and Matrix Market I/O."""
from dataclasses import dataclass

import numpy as np
import scipy.io
import scipy.sparse as sp

MM_HEADER = "%%MatrixMarket matrix coordinate real general"


def as_csr(A):
    """Canonical CSR copy: int32 indices, sorted columns, duplicates summed.

    Explicit zeros are kept so patterns stay structural.
    """
    A = sp.csr_matrix(A, dtype=np.float64, copy=True)
    A.sum_duplicates()
    A.sort_indices()
    A.indptr = A.indptr.astype(np.int32, copy=False)
    A.indices = A.indices.astype(np.int32, copy=False)
    return A


def diag_positions(A):
    """Index into ``A.data`` of each row's diagonal entry; -1 where it is missing."""
    n = A.shape[0]
    rows = np.repeat(np.arange(n), np.diff(A.indptr))
    hit = np.nonzero(A.indices == rows)[0]
    pos = np.full(n, -1, dtype=np.int32)
    pos[rows[hit]] = hit
    return pos


def spmv(A, x):
    x = np.asarray(x, dtype=float)
    if A.shape[1] != x.shape[0]:
        raise ValueError(f"dimension mismatch: matrix {A.shape} times vector of length {x.shape[0]}")
    return A @ x


@dataclass
class BlockVector:
    p: np.ndarray
    T: np.ndarray

    def __post_init__(self):
        self.p = np.asarray(self.p, dtype=float)
        self.T = np.asarray(self.T, dtype=float)
        if self.p.shape != self.T.shape:
            raise ValueError("block parts must have equal length")

    @classmethod
    def from_flat(cls, x):
        n = len(x) // 2
        return cls(x[:n], x[n:])

    def flat(self):
        return np.concatenate([self.p, self.T])


def block_apply(J, v):
    """``[App xp + ApT xT; ATp xp + ATT xT]`` for a BlockJacobian ``J``."""
    if v.p.shape[0] != J.App.shape[1]:
        raise ValueError("block vector does not match the Jacobian")
    return BlockVector(J.App @ v.p + J.ApT @ v.T, J.ATp @ v.p + J.ATT @ v.T)


def mm_write(path, A, comment=""):
    scipy.io.mmwrite(str(path), sp.coo_matrix(A), comment=comment, field="real", symmetry="general")


def mm_read(path):
    with open(path) as fh:
        head = fh.readline().strip()
    if not head.lower().startswith("%%matrixmarket matrix coordinate"):
        raise ValueError(f"{path}: not a coordinate Matrix Market file")
    return as_csr(scipy.io.mmread(str(path)))
