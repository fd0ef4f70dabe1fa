# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: polar transform and min-sum SCL decoding.

Mirrors ``_core_py`` operation for operation; see that module for the
reference semantics.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs
from libc.stdlib cimport malloc, free
from libc.string cimport memcpy, memset

cnp.import_array()


def polar_transform(u):
    x = np.array(u, dtype=np.uint8, copy=True, order="C")
    squeeze = x.ndim == 1
    x = np.atleast_2d(x)
    cdef unsigned char[:, ::1] xv = x
    cdef Py_ssize_t rows = xv.shape[0], N = xv.shape[1]
    cdef Py_ssize_t r, h, j, k
    with nogil:
        for r in range(rows):
            h = 1
            while h < N:
                j = 0
                while j < N:
                    for k in range(j, j + h):
                        xv[r, k] ^= xv[r, k + h]
                    j += 2 * h
                h *= 2
    return x[0] if squeeze else x


cdef inline double _f(double a, double b) noexcept nogil:
    cdef double fa = fabs(a)
    cdef double fb = fabs(b)
    cdef double m = fa if fa < fb else fb
    if (a < 0) != (b < 0):
        return -m
    return m


cdef inline int _bitlen(Py_ssize_t v) noexcept nogil:
    cdef int n = 0
    while v:
        v >>= 1
        n += 1
    return n


def scl_decode_paths(llr, frozen, int list_size):
    cdef double[::1] ch = np.ascontiguousarray(llr, dtype=np.float64)
    cdef unsigned char[::1] fz = np.ascontiguousarray(frozen, dtype=np.uint8)
    cdef Py_ssize_t N = ch.shape[0]
    cdef int n = _bitlen(N) - 1
    cdef int L = list_size
    cdef Py_ssize_t S = N  # per-slot stride (depth d lives at off[d], size N >> d)

    cdef Py_ssize_t* off = <Py_ssize_t*> malloc((n + 2) * sizeof(Py_ssize_t))
    cdef double* alpha = <double*> malloc(L * S * sizeof(double))
    cdef unsigned char* left = <unsigned char*> malloc(L * S)
    cdef unsigned char* uu = <unsigned char*> malloc(L * S)
    cdef unsigned char* tmp_a = <unsigned char*> malloc(N)
    cdef unsigned char* tmp_b = <unsigned char*> malloc(N)
    cdef int* slot = <int*> malloc(L * sizeof(int))
    cdef int* new_slot = <int*> malloc(L * sizeof(int))
    cdef int* claimed = <int*> malloc(L * sizeof(int))
    cdef int* nchild = <int*> malloc(L * sizeof(int))
    cdef int* free_slots = <int*> malloc(L * sizeof(int))
    cdef double* pm = <double*> malloc(L * sizeof(double))
    cdef double* lam = <double*> malloc(L * sizeof(double))
    cdef double* cand = <double*> malloc(2 * L * sizeof(double))
    cdef int* order = <int*> malloc(2 * L * sizeof(int))
    cdef unsigned char* bits = <unsigned char*> malloc(L)
    cdef double* new_pm = <double*> malloc(L * sizeof(double))
    cdef Py_ssize_t i, h, k, t, idx, length
    cdef int d, d0, start, Lc, p, s, e, q, nkeep, nfree, key_e
    cdef double a, b, key, pen0, pen1
    cdef double* src
    cdef double* dst
    cdef unsigned char* cw
    cdef unsigned char* other
    cdef unsigned char* lft

    try:
        if (off == NULL or alpha == NULL or left == NULL or uu == NULL or tmp_a == NULL
                or tmp_b == NULL or slot == NULL or new_slot == NULL or claimed == NULL
                or nchild == NULL or free_slots == NULL or pm == NULL or lam == NULL
                or cand == NULL or order == NULL or bits == NULL or new_pm == NULL):
            raise MemoryError()
        with nogil:
            off[0] = 0
            off[1] = 0
            for d in range(2, n + 2):
                off[d] = off[d - 1] + (N >> (d - 1))
            memset(alpha, 0, L * S * sizeof(double))
            memset(left, 0, L * S)
            memset(uu, 0, L * S)
            Lc = 1
            slot[0] = 0
            pm[0] = 0.0

            for i in range(N):
                # LLR recursion for every active path
                if i == 0:
                    d0 = -1
                else:
                    d0 = n - 1 - (_bitlen(i ^ (i - 1)) - 1)
                for k in range(Lc):
                    s = slot[k]
                    if d0 >= 0:
                        h = N >> (d0 + 1)
                        if d0 == 0:
                            src = &ch[0]
                        else:
                            src = alpha + s * S + off[d0]
                        dst = alpha + s * S + off[d0 + 1]
                        lft = left + s * S + off[d0 + 1]
                        for t in range(h):
                            a = src[t]
                            b = src[t + h]
                            if lft[t] != 0:
                                dst[t] = b - a
                            else:
                                dst[t] = b + a
                        start = d0 + 1
                    else:
                        start = 0
                    for d in range(start, n):
                        h = N >> (d + 1)
                        if d == 0:
                            src = &ch[0]
                        else:
                            src = alpha + s * S + off[d]
                        dst = alpha + s * S + off[d + 1]
                        for t in range(h):
                            dst[t] = _f(src[t], src[t + h])
                    lam[k] = alpha[s * S + off[n]]

                if fz[i]:
                    for k in range(Lc):
                        pen0 = -lam[k] if lam[k] < 0 else 0.0
                        pm[k] = pm[k] + pen0
                        bits[k] = 0
                else:
                    for k in range(Lc):
                        pen0 = -lam[k] if lam[k] < 0 else 0.0
                        pen1 = lam[k] if lam[k] > 0 else 0.0
                        cand[2 * k] = pm[k] + pen0
                        cand[2 * k + 1] = pm[k] + pen1
                    # stable insertion sort of candidate indices by metric
                    for e in range(2 * Lc):
                        key = cand[e]
                        key_e = e
                        q = e - 1
                        while q >= 0 and cand[order[q]] > key:
                            order[q + 1] = order[q]
                            q -= 1
                        order[q + 1] = key_e
                    nkeep = 2 * Lc if 2 * Lc < L else L

                    # reuse a parent's slot for its first surviving child, copy for the rest
                    for k in range(Lc):
                        nchild[k] = 0
                        claimed[k] = 0
                    for q in range(nkeep):
                        nchild[order[q] >> 1] += 1
                    nfree = 0
                    for s in range(L):
                        free_slots[s] = 1
                    for k in range(Lc):
                        if nchild[k] > 0:
                            free_slots[slot[k]] = 0
                    for q in range(nkeep):
                        p = order[q] >> 1
                        if not claimed[p]:
                            claimed[p] = 1
                            new_slot[q] = slot[p]
                        else:
                            s = 0
                            while not free_slots[s]:
                                s += 1
                            free_slots[s] = 0
                            memcpy(alpha + s * S, alpha + slot[p] * S, S * sizeof(double))
                            memcpy(left + s * S, left + slot[p] * S, S)
                            memcpy(uu + s * S, uu + slot[p] * S, S)
                            new_slot[q] = s
                        new_pm[q] = cand[order[q]]
                        bits[q] = <unsigned char> (order[q] & 1)
                    Lc = nkeep
                    for k in range(Lc):
                        slot[k] = new_slot[k]
                        pm[k] = new_pm[k]

                # record the decision and propagate partial sums
                for k in range(Lc):
                    s = slot[k]
                    uu[s * S + i] = bits[k]
                    cw = tmp_a
                    other = tmp_b
                    cw[0] = bits[k]
                    length = 1
                    d = n
                    idx = i
                    while d > 0 and (idx & 1):
                        lft = left + s * S + off[d]
                        for t in range(length):
                            other[t] = lft[t] ^ cw[t]
                            other[t + length] = cw[t]
                        length *= 2
                        lft = cw
                        cw = other
                        other = lft
                        d -= 1
                        idx >>= 1
                    if d > 0:
                        memcpy(left + s * S + off[d], cw, length)

        pm_out = np.empty(Lc, dtype=np.float64)
        u_out = np.empty((Lc, N), dtype=np.uint8)
        for k in range(Lc):
            pm_out[k] = pm[k]
            u_out[k, :] = np.frombuffer((<char*> (uu + slot[k] * S))[:N], dtype=np.uint8)
        rank = np.argsort(pm_out, kind="stable")
        return u_out[rank], pm_out[rank]
    finally:
        free(off); free(alpha); free(left); free(uu); free(tmp_a); free(tmp_b)
        free(slot); free(new_slot); free(claimed); free(nchild); free(free_slots)
        free(pm); free(lam); free(cand); free(order); free(bits); free(new_pm)
