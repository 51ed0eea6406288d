# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled fused conv / rectifier / max-pool kernels.

Same contract as the numpy reference backend (see reference.py); kept in
lockstep by the backend equivalence tests. Loops run filters-outer so one
kernel row stays cache-hot across every sample's candidate windows, and the
window dot product uses four accumulators so the compiler can vectorize it.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

cdef double _NEG_HUGE = -1.7976931348623157e308


def conv_pool_forward(object X_in, object kernels_in, object bias_in):
    cdef cnp.ndarray[cnp.float64_t, ndim=3] X = np.ascontiguousarray(X_in, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=3] K = np.ascontiguousarray(kernels_in, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] bias = np.ascontiguousarray(bias_in, dtype=np.float64)

    cdef Py_ssize_t n_samples = X.shape[0]
    cdef Py_ssize_t rows = X.shape[1]
    cdef Py_ssize_t width = X.shape[2]
    cdef Py_ssize_t n_filters = K.shape[0]
    cdef Py_ssize_t w = K.shape[1]
    cdef Py_ssize_t t_count = rows - w + 1

    if K.shape[2] != width or t_count < 1:
        raise ValueError("kernel does not fit input")

    pooled_arr = np.empty((n_samples, n_filters), dtype=np.float64)
    argmax_arr = np.empty((n_samples, n_filters), dtype=np.int64)
    cand_arr = np.empty((n_samples, t_count), dtype=np.int64)
    n_cand_arr = np.empty(n_samples, dtype=np.int64)
    first_zero_arr = np.empty(n_samples, dtype=np.int64)
    mask_arr = np.empty(t_count, dtype=np.uint8)

    cdef double[:, ::1] pooled = pooled_arr
    cdef long long[:, ::1] argmax = argmax_arr
    cdef long long[:, ::1] cand = cand_arr
    cdef long long[::1] n_cand = n_cand_arr
    cdef long long[::1] first_zero = first_zero_arr
    cdef unsigned char[::1] mask = mask_arr
    cdef double[:, :, ::1] Xv = X
    cdef double[:, :, ::1] Kv = K
    cdef double[::1] bv = bias

    cdef Py_ssize_t n, r, t, f, fb, m, i, j, c, lo, hi, count, fz
    cdef double acc, best, b
    cdef double acc0, acc1, acc2, acc3, xv
    cdef long long best_t
    cdef bint row_nonzero
    cdef const double* kp
    cdef const double* krow
    cdef const double* xrow
    cdef const double* k0
    cdef const double* k1
    cdef const double* k2
    cdef const double* k3

    # Candidate windows per sample: those touching a nonzero row, plus the
    # earliest all-zero window standing in for all of them (its value is
    # exactly the bias).
    for n in range(n_samples):
        for t in range(t_count):
            mask[t] = 0
        for r in range(rows):
            row_nonzero = False
            for j in range(width):
                if Xv[n, r, j] != 0.0:
                    row_nonzero = True
                    break
            if row_nonzero:
                lo = r - w + 1
                if lo < 0:
                    lo = 0
                hi = r + 1
                if hi > t_count:
                    hi = t_count
                for t in range(lo, hi):
                    mask[t] = 1
        fz = -1
        for t in range(t_count):
            if mask[t] == 0:
                fz = t
                break
        first_zero[n] = fz
        count = 0
        for t in range(t_count):
            if mask[t] == 1 or t == fz:
                cand[n, count] = t
                count += 1
        n_cand[n] = count

    best4_arr = np.empty(4, dtype=np.float64)
    bt4_arr = np.empty(4, dtype=np.int64)
    cdef double[::1] best4 = best4_arr
    cdef long long[::1] bt4 = bt4_arr

    # Four filters at a time: each window value is loaded once and feeds four
    # independent accumulator chains.
    fb = 0
    while fb + 4 <= n_filters:
        for n in range(n_samples):
            for m in range(4):
                best4[m] = _NEG_HUGE
                bt4[m] = 0
            fz = first_zero[n]
            for c in range(n_cand[n]):
                t = cand[n, c]
                if t == fz:
                    acc0 = bv[fb]
                    acc1 = bv[fb + 1]
                    acc2 = bv[fb + 2]
                    acc3 = bv[fb + 3]
                else:
                    acc0 = bv[fb]
                    acc1 = bv[fb + 1]
                    acc2 = bv[fb + 2]
                    acc3 = bv[fb + 3]
                    for i in range(w):
                        k0 = &Kv[fb, i, 0]
                        k1 = &Kv[fb + 1, i, 0]
                        k2 = &Kv[fb + 2, i, 0]
                        k3 = &Kv[fb + 3, i, 0]
                        xrow = &Xv[n, t + i, 0]
                        for j in range(width):
                            xv = xrow[j]
                            acc0 = acc0 + k0[j] * xv
                            acc1 = acc1 + k1[j] * xv
                            acc2 = acc2 + k2[j] * xv
                            acc3 = acc3 + k3[j] * xv
                if acc0 > best4[0]:
                    best4[0] = acc0
                    bt4[0] = t
                if acc1 > best4[1]:
                    best4[1] = acc1
                    bt4[1] = t
                if acc2 > best4[2]:
                    best4[2] = acc2
                    bt4[2] = t
                if acc3 > best4[3]:
                    best4[3] = acc3
                    bt4[3] = t
            for m in range(4):
                pooled[n, fb + m] = best4[m] if best4[m] > 0.0 else 0.0
                argmax[n, fb + m] = bt4[m]
        fb += 4

    for f in range(fb, n_filters):
        b = bv[f]
        kp = &Kv[f, 0, 0]
        for n in range(n_samples):
            best = _NEG_HUGE
            best_t = 0
            fz = first_zero[n]
            for c in range(n_cand[n]):
                t = cand[n, c]
                if t == fz:
                    acc = b
                else:
                    acc = b
                    for i in range(w):
                        krow = kp + i * width
                        xrow = &Xv[n, t + i, 0]
                        for j in range(width):
                            acc = acc + krow[j] * xrow[j]
                if acc > best:
                    best = acc
                    best_t = t
            pooled[n, f] = best if best > 0.0 else 0.0
            argmax[n, f] = best_t

    return pooled_arr, argmax_arr


def conv_pool_backward(object X_in, object grad_in, object argmax_in, Py_ssize_t w,
                       object dk_out, object db_out):
    cdef cnp.ndarray[cnp.float64_t, ndim=3] X = np.ascontiguousarray(X_in, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] G = np.ascontiguousarray(grad_in, dtype=np.float64)
    cdef cnp.ndarray[cnp.int64_t, ndim=2] A = np.ascontiguousarray(argmax_in, dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=3] dK = dk_out
    cdef cnp.ndarray[cnp.float64_t, ndim=1] dB = db_out

    cdef double[:, :, ::1] Xv = X
    cdef double[:, ::1] Gv = G
    cdef long long[:, ::1] Av = A
    cdef double[:, :, ::1] dKv = dK
    cdef double[::1] dBv = dB

    cdef Py_ssize_t n_samples = X.shape[0]
    cdef Py_ssize_t width = X.shape[2]
    cdef Py_ssize_t n_filters = G.shape[1]
    cdef Py_ssize_t n, f, i, j, t
    cdef double g

    for f in range(n_filters):
        for n in range(n_samples):
            g = Gv[n, f]
            if g == 0.0:
                continue
            dBv[f] += g
            t = Av[n, f]
            for i in range(w):
                for j in range(width):
                    dKv[f, i, j] += g * Xv[n, t + i, j]
