from .csr import BlockVector, as_csr, block_apply, diag_positions, mm_read, mm_write, spmv
from .gmres import GmresResult, gmres
from .ilu import Ilu0Factor, ZeroPivotError, ilu0_factor, ilu0_solve

__all__ = [
    "BlockVector", "as_csr", "block_apply", "diag_positions", "mm_read", "mm_write", "spmv",
    "GmresResult", "gmres", "Ilu0Factor", "ZeroPivotError", "ilu0_factor", "ilu0_solve",
]
