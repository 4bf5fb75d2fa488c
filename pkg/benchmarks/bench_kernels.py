"""Time the compiled kernels against the pure-Python fallback.

Usage: python benchmarks/bench_kernels.py [--n 60] [--repeat 3]
"""
import argparse
import timeit

import numpy as np
import scipy.sparse as sp

from thermoblock import _fallback
from thermoblock.amg import strength_graph
from thermoblock.linalg.csr import as_csr, diag_positions


def poisson2d(n):
    T = sp.diags([-1.0, 2.0, -1.0], [-1, 0, 1], shape=(n, n))
    return as_csr(sp.kron(sp.identity(n), T) + sp.kron(T, sp.identity(n)))


def workloads(mod, A):
    S = as_csr(strength_graph(A))
    T = as_csr(S.T)
    diag = diag_positions(A)
    split = np.asarray(mod.rs_cf_splitting(S.indptr, S.indices, T.indptr, T.indices), dtype=np.int8)
    lu = A.data.copy()
    mod.ilu0_factor(A.indptr, A.indices, lu, diag)
    b = np.ones(A.shape[0])
    x = np.zeros(A.shape[0])
    return {
        "ilu0_factor": lambda: mod.ilu0_factor(A.indptr, A.indices, A.data.copy(), diag),
        "ilu0_solve": lambda: mod.ilu0_solve(A.indptr, A.indices, lu, diag, b),
        "gauss_seidel": lambda: mod.gauss_seidel(A.indptr, A.indices, A.data, x, b, True),
        "rs_cf_splitting": lambda: mod.rs_cf_splitting(S.indptr, S.indices, T.indptr, T.indices),
        "classical_interpolation": lambda: mod.classical_interpolation(A.indptr, A.indices, A.data,
                                                                       S.indptr, S.indices, split),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=60, help="Poisson grid is n x n")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    try:
        from thermoblock import _kernels
    except ImportError:
        raise SystemExit("compiled extension not built; run `pip install --no-build-isolation -e .` first")

    A = poisson2d(args.n)
    fast, slow = workloads(_kernels, A), workloads(_fallback, A)
    print(f"2D Poisson {args.n}x{args.n} ({A.shape[0]} unknowns, {A.nnz} nonzeros), best of {args.repeat}")
    print(f"{'kernel':<26}{'cython [ms]':>13}{'python [ms]':>13}{'speedup':>10}")
    for name in fast:
        tf = min(timeit.repeat(fast[name], number=1, repeat=args.repeat))
        ts = min(timeit.repeat(slow[name], number=1, repeat=args.repeat))
        print(f"{name:<26}{1e3 * tf:>13.3f}{1e3 * ts:>13.1f}{ts / tf:>10.0f}x")


if __name__ == "__main__":
    main()
