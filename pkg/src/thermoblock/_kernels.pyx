# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled sparse kernels: ILU(0), Gauss-Seidel, Ruge-Stuben splitting and interpolation.

Every routine works on raw CSR arrays (int32 indptr/indices, float64 values) with
column indices sorted within each row. ``_fallback.py`` mirrors these signatures.
"""
import numpy as np
cimport numpy as cnp

ctypedef cnp.int32_t idx_t


def ilu0_factor(const idx_t[::1] indptr, const idx_t[::1] indices,
                double[::1] lu, const idx_t[::1] diag):
    """Overwrite ``lu`` (a copy of A's values) with the ILU(0) factors.

    Returns -1 on success or the row index where a zero pivot appeared.
    """
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef Py_ssize_t i, kk, jj, k, j, pos
    cdef double lik, piv
    cdef cnp.ndarray[idx_t, ndim=1] work_arr = np.full(n, -1, dtype=np.int32)
    cdef idx_t[::1] work = work_arr
    for i in range(n):
        for kk in range(indptr[i], indptr[i + 1]):
            work[indices[kk]] = <idx_t>kk
        for kk in range(indptr[i], diag[i]):
            k = indices[kk]
            piv = lu[diag[k]]
            if piv == 0.0:
                return k
            lik = lu[kk] / piv
            lu[kk] = lik
            for jj in range(diag[k] + 1, indptr[k + 1]):
                j = indices[jj]
                pos = work[j]
                if pos >= 0:
                    lu[pos] -= lik * lu[jj]
        for kk in range(indptr[i], indptr[i + 1]):
            work[indices[kk]] = -1
        if lu[diag[i]] == 0.0:
            return i
    return -1


def ilu0_solve(const idx_t[::1] indptr, const idx_t[::1] indices,
               const double[::1] lu, const idx_t[::1] diag, const double[::1] b):
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef Py_ssize_t i, kk
    cdef double s
    x_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] x = x_arr
    for i in range(n):
        s = b[i]
        for kk in range(indptr[i], diag[i]):
            s -= lu[kk] * x[indices[kk]]
        x[i] = s
    for i in range(n - 1, -1, -1):
        s = x[i]
        for kk in range(diag[i] + 1, indptr[i + 1]):
            s -= lu[kk] * x[indices[kk]]
        x[i] = s / lu[diag[i]]
    return x_arr


def gauss_seidel(const idx_t[::1] indptr, const idx_t[::1] indices,
                 const double[::1] data, double[::1] x, const double[::1] b,
                 bint forward):
    """One in-place Gauss-Seidel sweep on ``x``."""
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef Py_ssize_t i, kk, start, stop, step
    cdef double s, d
    if forward:
        start, stop, step = 0, n, 1
    else:
        start, stop, step = n - 1, -1, -1
    i = start
    while i != stop:
        s = b[i]
        d = 0.0
        for kk in range(indptr[i], indptr[i + 1]):
            if indices[kk] == i:
                d = data[kk]
            else:
                s -= data[kk] * x[indices[kk]]
        if d != 0.0:
            x[i] = s / d
        i += step


cdef inline void _heap_push(cnp.int64_t[::1] heap, Py_ssize_t *size, cnp.int64_t key):
    cdef Py_ssize_t c = size[0]
    cdef Py_ssize_t p
    heap[c] = key
    size[0] += 1
    while c > 0:
        p = (c - 1) >> 1
        if heap[p] >= heap[c]:
            break
        heap[p], heap[c] = heap[c], heap[p]
        c = p


cdef inline cnp.int64_t _heap_pop(cnp.int64_t[::1] heap, Py_ssize_t *size):
    cdef cnp.int64_t top = heap[0]
    cdef Py_ssize_t c, l, r, big
    size[0] -= 1
    heap[0] = heap[size[0]]
    c = 0
    while True:
        l = 2 * c + 1
        r = l + 1
        big = c
        if l < size[0] and heap[l] > heap[big]:
            big = l
        if r < size[0] and heap[r] > heap[big]:
            big = r
        if big == c:
            break
        heap[big], heap[c] = heap[c], heap[big]
        c = big
    return top


def rs_cf_splitting(const idx_t[::1] Sp, const idx_t[::1] Sj,
                    const idx_t[::1] Tp, const idx_t[::1] Tj):
    """Classical two-pass C/F splitting. Returns int8 array, 1 = C, 0 = F.

    ``S`` holds the points each row strongly depends on, ``T`` is its transpose.
    Ties in the influence measure go to the lowest index.
    """
    cdef Py_ssize_t n = Sp.shape[0] - 1
    cdef Py_ssize_t i, j, k, jj, kk, m, mm, size = 0
    cdef cnp.int64_t key, nn = n
    cdef int common
    lam_arr = np.zeros(n, dtype=np.int64)
    cdef cnp.int64_t[::1] lam = lam_arr
    state_arr = np.full(n, -1, dtype=np.int8)   # -1 unassigned, 0 F, 1 C
    cdef cnp.int8_t[::1] state = state_arr
    heap_arr = np.empty(n + 2 * Sj.shape[0] + 1, dtype=np.int64)
    cdef cnp.int64_t[::1] heap = heap_arr
    mark_arr = np.full(n, -1, dtype=np.int64)
    cdef cnp.int64_t[::1] mark = mark_arr

    for i in range(n):
        lam[i] = Tp[i + 1] - Tp[i]
        _heap_push(heap, &size, lam[i] * nn + (nn - 1 - i))
    while size > 0:
        key = _heap_pop(heap, &size)
        i = nn - 1 - (key % nn)
        if state[i] != -1 or key // nn != lam[i]:
            continue
        state[i] = 1
        for jj in range(Tp[i], Tp[i + 1]):
            j = Tj[jj]
            if state[j] == -1:
                state[j] = 0
                for kk in range(Sp[j], Sp[j + 1]):
                    k = Sj[kk]
                    if state[k] == -1:
                        lam[k] += 1
                        _heap_push(heap, &size, lam[k] * nn + (nn - 1 - k))
        for jj in range(Sp[i], Sp[i + 1]):
            j = Sj[jj]
            if state[j] == -1 and lam[j] > 0:
                lam[j] -= 1
                _heap_push(heap, &size, lam[j] * nn + (nn - 1 - j))

    # second pass: strong F-F pairs need a common strong C point
    for i in range(n):
        if state[i] != 0:
            continue
        for jj in range(Sp[i], Sp[i + 1]):
            j = Sj[jj]
            if state[j] == 1:
                mark[j] = i
        for jj in range(Sp[i], Sp[i + 1]):
            j = Sj[jj]
            if state[j] != 0 or j == i:
                continue
            common = 0
            for mm in range(Sp[j], Sp[j + 1]):
                m = Sj[mm]
                if mark[m] == i:
                    common = 1
                    break
            if not common:
                state[j] = 1
                mark[j] = i
    return state_arr


def classical_interpolation(const idx_t[::1] Ap, const idx_t[::1] Aj, const double[::1] Ax,
                            const idx_t[::1] Sp, const idx_t[::1] Sj,
                            const cnp.int8_t[::1] splitting):
    """Ruge-Stuben interpolation with strong-F distribution. Returns (indptr, indices, data)."""
    cdef Py_ssize_t n = Ap.shape[0] - 1
    cdef Py_ssize_t i, jj, j, kk, k, mm, m, nc = 0, nnz = 0, pos, ncs
    cdef double diag, akk, denom, aik, w
    cmap_arr = np.full(n, -1, dtype=np.int32)
    cdef idx_t[::1] cmap = cmap_arr
    strong_arr = np.full(n, -1, dtype=np.int64)
    cdef cnp.int64_t[::1] strong = strong_arr
    slot_arr = np.full(n, -1, dtype=np.int64)
    cdef cnp.int64_t[::1] slot = slot_arr
    Pp_arr = np.zeros(n + 1, dtype=np.int32)
    cdef idx_t[::1] Pp = Pp_arr

    for i in range(n):
        if splitting[i] == 1:
            cmap[i] = <idx_t>nc
            nc += 1
    for i in range(n):
        if splitting[i] == 1:
            nnz += 1
        else:
            for jj in range(Sp[i], Sp[i + 1]):
                if splitting[Sj[jj]] == 1 and Sj[jj] != i:
                    nnz += 1
        Pp[i + 1] = <idx_t>nnz
    Pj_arr = np.empty(nnz, dtype=np.int32)
    Px_arr = np.zeros(nnz, dtype=np.float64)
    cdef idx_t[::1] Pj = Pj_arr
    cdef double[::1] Px = Px_arr

    for i in range(n):
        pos = Pp[i]
        if splitting[i] == 1:
            Pj[pos] = cmap[i]
            Px[pos] = 1.0
            continue
        ncs = 0
        for jj in range(Sp[i], Sp[i + 1]):
            j = Sj[jj]
            if j == i:
                continue
            strong[j] = i
            if splitting[j] == 1:
                slot[j] = pos + ncs
                Pj[pos + ncs] = cmap[j]
                ncs += 1
        if ncs == 0:
            raise RuntimeError("F-point %d has no strong C neighbour" % i)
        diag = 0.0
        for jj in range(Ap[i], Ap[i + 1]):
            j = Aj[jj]
            if j == i:
                diag += Ax[jj]
            elif strong[j] != i:
                diag += Ax[jj]
            elif splitting[j] == 1:
                Px[slot[j]] += Ax[jj]
        for jj in range(Ap[i], Ap[i + 1]):
            k = Aj[jj]
            if k == i or strong[k] != i or splitting[k] == 1:
                continue
            aik = Ax[jj]
            akk = 0.0
            for mm in range(Ap[k], Ap[k + 1]):
                if Aj[mm] == k:
                    akk = Ax[mm]
                    break
            denom = 0.0
            for mm in range(Ap[k], Ap[k + 1]):
                m = Aj[mm]
                if m != k and strong[m] == i and splitting[m] == 1 and Ax[mm] * akk < 0.0:
                    denom += Ax[mm]
            if denom == 0.0:
                diag += aik
                continue
            for mm in range(Ap[k], Ap[k + 1]):
                m = Aj[mm]
                if m != k and strong[m] == i and splitting[m] == 1 and Ax[mm] * akk < 0.0:
                    Px[slot[m]] += aik * Ax[mm] / denom
        for kk in range(pos, pos + ncs):
            Px[kk] = -Px[kk] / diag
        for jj in range(Sp[i], Sp[i + 1]):
            slot[Sj[jj]] = -1
    return Pp_arr, Pj_arr, Px_arr, nc
