"""Zero-fill incomplete LU on the sparsity pattern of A."""
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .._backend import kernels
from .csr import as_csr, diag_positions


class ZeroPivotError(ArithmeticError):
    def __init__(self, row):
        super().__init__(f"zero pivot in ILU(0) at row {row}")
        self.row = row


@dataclass(eq=False)
class Ilu0Factor:
    """L (unit lower, implicit diagonal) and U packed into one array on A's pattern."""
    indptr: np.ndarray
    indices: np.ndarray
    lu: np.ndarray
    diag: np.ndarray

    @property
    def shape(self):
        n = len(self.indptr) - 1
        return (n, n)

    def solve(self, b):
        return ilu0_solve(self, b)

    def factors(self):
        """Explicit (L, U) as scipy CSR matrices; for inspection and tests."""
        n = self.shape[0]
        M = sp.csr_matrix((self.lu, self.indices, self.indptr), shape=(n, n))
        L = sp.tril(M, k=-1, format="csr") + sp.identity(n, format="csr")
        U = sp.triu(M, format="csr")
        return L.tocsr(), U.tocsr()


def ilu0_factor(A):
    A = as_csr(A)
    if A.shape[0] != A.shape[1]:
        raise ValueError("ILU(0) needs a square matrix")
    diag = diag_positions(A)
    missing = np.nonzero(diag < 0)[0]
    if len(missing):
        raise ZeroPivotError(int(missing[0]))
    lu = A.data.copy()
    bad = kernels.ilu0_factor(A.indptr, A.indices, lu, diag)
    if bad >= 0:
        raise ZeroPivotError(int(bad))
    return Ilu0Factor(A.indptr, A.indices, lu, diag)


def ilu0_solve(F, b):
    b = np.ascontiguousarray(b, dtype=np.float64)
    if b.shape[0] != F.shape[0]:
        raise ValueError("right-hand side does not match the factor")
    return kernels.ilu0_solve(F.indptr, F.indices, F.lu, F.diag, b)
