"""Pure-Python versions of the routines in ``_kernels.pyx``.

Used when the compiled extension is unavailable or ``THERMOBLOCK_BACKEND=python``.
Same signatures and results (up to floating-point summation order, which is kept
identical where it matters).
"""
import heapq

import numpy as np


def ilu0_factor(indptr, indices, lu, diag):
    n = len(indptr) - 1
    work = np.full(n, -1, dtype=np.int64)
    for i in range(n):
        start, stop = indptr[i], indptr[i + 1]
        work[indices[start:stop]] = np.arange(start, stop)
        for kk in range(start, diag[i]):
            k = indices[kk]
            piv = lu[diag[k]]
            if piv == 0.0:
                return int(k)
            lik = lu[kk] / piv
            lu[kk] = lik
            for jj in range(diag[k] + 1, indptr[k + 1]):
                pos = work[indices[jj]]
                if pos >= 0:
                    lu[pos] -= lik * lu[jj]
        work[indices[start:stop]] = -1
        if lu[diag[i]] == 0.0:
            return i
    return -1


def ilu0_solve(indptr, indices, lu, diag, b):
    n = len(indptr) - 1
    x = np.array(b, dtype=np.float64)
    for i in range(n):
        lo = indptr[i]
        d = diag[i]
        if d > lo:
            x[i] -= lu[lo:d] @ x[indices[lo:d]]
    for i in range(n - 1, -1, -1):
        d = diag[i]
        hi = indptr[i + 1]
        if hi > d + 1:
            x[i] -= lu[d + 1:hi] @ x[indices[d + 1:hi]]
        x[i] /= lu[d]
    return x


def gauss_seidel(indptr, indices, data, x, b, forward):
    n = len(indptr) - 1
    rows = range(n) if forward else range(n - 1, -1, -1)
    for i in rows:
        lo, hi = indptr[i], indptr[i + 1]
        cols = indices[lo:hi]
        vals = data[lo:hi]
        on = cols == i
        d = vals[on].sum()
        if d != 0.0:
            off = ~on
            x[i] = (b[i] - vals[off] @ x[cols[off]]) / d


def rs_cf_splitting(Sp, Sj, Tp, Tj):
    n = len(Sp) - 1
    lam = [int(Tp[i + 1] - Tp[i]) for i in range(n)]
    state = np.full(n, -1, dtype=np.int8)
    heap = [(-lam[i], i) for i in range(n)]
    heapq.heapify(heap)
    while heap:
        neg, i = heapq.heappop(heap)
        if state[i] != -1 or -neg != lam[i]:
            continue
        state[i] = 1
        for j in Tj[Tp[i]:Tp[i + 1]]:
            if state[j] == -1:
                state[j] = 0
                for k in Sj[Sp[j]:Sp[j + 1]]:
                    if state[k] == -1:
                        lam[k] += 1
                        heapq.heappush(heap, (-lam[k], k))
        for j in Sj[Sp[i]:Sp[i + 1]]:
            if state[j] == -1 and lam[j] > 0:
                lam[j] -= 1
                heapq.heappush(heap, (-lam[j], j))

    for i in range(n):
        if state[i] != 0:
            continue
        nbrs = Sj[Sp[i]:Sp[i + 1]]
        cset = {int(j) for j in nbrs if state[j] == 1}
        for j in nbrs:
            if state[j] != 0 or j == i:
                continue
            if not cset.intersection(Sj[Sp[j]:Sp[j + 1]].tolist()):
                state[j] = 1
                cset.add(int(j))
    return state


def classical_interpolation(Ap, Aj, Ax, Sp, Sj, splitting):
    n = len(Ap) - 1
    cmap = np.cumsum(splitting == 1) - 1
    nc = int(np.count_nonzero(splitting == 1))
    rows, cols, vals = [], [], []
    for i in range(n):
        if splitting[i] == 1:
            rows.append(i)
            cols.append(cmap[i])
            vals.append(1.0)
            continue
        strong = {int(j) for j in Sj[Sp[i]:Sp[i + 1]] if j != i}
        cstrong = sorted(j for j in strong if splitting[j] == 1)
        if not cstrong:
            raise RuntimeError("F-point %d has no strong C neighbour" % i)
        cset = set(cstrong)
        acc = dict.fromkeys(cstrong, 0.0)
        diag = 0.0
        for jj in range(Ap[i], Ap[i + 1]):
            j = int(Aj[jj])
            if j == i or j not in strong:
                diag += Ax[jj]
            elif j in cset:
                acc[j] += Ax[jj]
        for jj in range(Ap[i], Ap[i + 1]):
            k = int(Aj[jj])
            if k == i or k not in strong or k in cset:
                continue
            aik = Ax[jj]
            lo, hi = Ap[k], Ap[k + 1]
            kc = Aj[lo:hi]
            kv = Ax[lo:hi]
            akk = kv[kc == k].sum()
            picks = [(int(m), v) for m, v in zip(kc, kv) if m != k and m in cset and v * akk < 0.0]
            denom = sum(v for _, v in picks)
            if denom == 0.0:
                diag += aik
                continue
            for m, v in picks:
                acc[m] += aik * v / denom
        for j in cstrong:
            rows.append(i)
            cols.append(cmap[j])
            vals.append(-acc[j] / diag)
    counts = np.bincount(np.asarray(rows, dtype=np.int64), minlength=n)
    Pp = np.concatenate([[0], np.cumsum(counts)]).astype(np.int32)
    return Pp, np.asarray(cols, dtype=np.int32), np.asarray(vals, dtype=np.float64), nc
