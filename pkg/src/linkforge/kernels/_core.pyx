# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: 2-D convolution and sum-product LDPC decoding.

Same contracts as :mod:`linkforge.kernels.numpy_backend`; see there for
the full documentation.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport atanh, nextafter, tanh


cdef inline double _clampd(double v, double lim) nogil:
    if v > lim:
        return lim
    if v < -lim:
        return -lim
    return v


def conv2d_forward(double[:, :, :, ::1] x, double[:, :, :, ::1] kernels,
                   double[::1] bias):
    cdef Py_ssize_t b = x.shape[0], h = x.shape[1], w = x.shape[2], c_in = x.shape[3]
    cdef Py_ssize_t c_out = kernels.shape[0], z = kernels.shape[1]
    cdef Py_ssize_t p = (z - 1) // 2
    out_arr = np.empty((b, h, w, c_out), dtype=np.float64)
    cdef double[:, :, :, ::1] y = out_arr
    cdef Py_ssize_t ib, i, j, co, k, l, ci, u, v
    cdef double acc

    with nogil:
        for ib in range(b):
            for i in range(h):
                for j in range(w):
                    for co in range(c_out):
                        acc = bias[co]
                        for k in range(z):
                            u = i + k - p
                            if u < 0 or u >= h:
                                continue
                            for l in range(z):
                                v = j + l - p
                                if v < 0 or v >= w:
                                    continue
                                for ci in range(c_in):
                                    acc += kernels[co, k, l, ci] * x[ib, u, v, ci]
                        y[ib, i, j, co] = acc
    return out_arr


def conv2d_backward(double[:, :, :, ::1] x, double[:, :, :, ::1] kernels,
                    double[:, :, :, ::1] grad):
    cdef Py_ssize_t b = x.shape[0], h = x.shape[1], w = x.shape[2], c_in = x.shape[3]
    cdef Py_ssize_t c_out = kernels.shape[0], z = kernels.shape[1]
    cdef Py_ssize_t p = (z - 1) // 2
    dx_arr = np.zeros((b, h, w, c_in), dtype=np.float64)
    dk_arr = np.zeros((c_out, z, z, c_in), dtype=np.float64)
    db_arr = np.zeros(c_out, dtype=np.float64)
    cdef double[:, :, :, ::1] dx = dx_arr
    cdef double[:, :, :, ::1] dk = dk_arr
    cdef double[::1] db = db_arr
    cdef Py_ssize_t ib, i, j, co, k, l, ci, u, v
    cdef double g

    with nogil:
        for ib in range(b):
            for i in range(h):
                for j in range(w):
                    for co in range(c_out):
                        g = grad[ib, i, j, co]
                        db[co] += g
                        for k in range(z):
                            u = i + k - p
                            if u < 0 or u >= h:
                                continue
                            for l in range(z):
                                v = j + l - p
                                if v < 0 or v >= w:
                                    continue
                                for ci in range(c_in):
                                    dk[co, k, l, ci] += g * x[ib, u, v, ci]
                                    dx[ib, u, v, ci] += g * kernels[co, k, l, ci]
    return dx_arr, dk_arr, db_arr


def bp_decode_batch(double[:, ::1] llr, int[::1] row_ptr, int[::1] edge_col,
                    int max_iters, double llr_clamp=38.0):
    cdef Py_ssize_t batch = llr.shape[0], n = llr.shape[1]
    cdef Py_ssize_t n_rows = row_ptr.shape[0] - 1
    cdef Py_ssize_t n_edges = edge_col.shape[0]
    cdef double t_max = nextafter(1.0, 0.0)

    bits_arr = np.zeros((batch, n), dtype=np.uint8)
    iters_arr = np.full(batch, max_iters, dtype=np.int32)
    conv_arr = np.zeros(batch, dtype=np.uint8)
    cdef unsigned char[:, ::1] bits_out = bits_arr
    cdef int[::1] iters_out = iters_arr
    cdef unsigned char[::1] conv_out = conv_arr

    cdef Py_ssize_t deg_max = 0, r
    for r in range(n_rows):
        if row_ptr[r + 1] - row_ptr[r] > deg_max:
            deg_max = row_ptr[r + 1] - row_ptr[r]

    q_arr = np.empty(n_edges, dtype=np.float64)
    r_arr = np.empty(n_edges, dtype=np.float64)
    post_arr = np.empty(n, dtype=np.float64)
    t_arr = np.empty(deg_max, dtype=np.float64)
    pre_arr = np.empty(deg_max + 1, dtype=np.float64)
    cdef double[::1] q = q_arr
    cdef double[::1] rmsg = r_arr
    cdef double[::1] post = post_arr
    cdef double[::1] t = t_arr
    cdef double[::1] pre = pre_arr

    cdef Py_ssize_t cw, it, e, i, v, s, deg
    cdef double suf, prod, x
    cdef int parity
    cdef bint ok, zero_post

    with nogil:
        for cw in range(batch):
            for e in range(n_edges):
                q[e] = _clampd(llr[cw, edge_col[e]], llr_clamp)
            for it in range(1, max_iters + 1):
                for r in range(n_rows):
                    s = row_ptr[r]
                    deg = row_ptr[r + 1] - s
                    pre[0] = 1.0
                    for i in range(deg):
                        t[i] = tanh(0.5 * q[s + i])
                        pre[i + 1] = pre[i] * t[i]
                    suf = 1.0
                    for i in range(deg - 1, -1, -1):
                        prod = pre[i] * suf
                        if prod > t_max:
                            prod = t_max
                        elif prod < -t_max:
                            prod = -t_max
                        rmsg[s + i] = _clampd(2.0 * atanh(prod), llr_clamp)
                        suf *= t[i]

                # sum check messages per column first, then add the channel
                # LLR, matching the accumulation grouping of the numpy lane
                for v in range(n):
                    post[v] = 0.0
                for e in range(n_edges):
                    post[edge_col[e]] += rmsg[e]
                for v in range(n):
                    post[v] += llr[cw, v]
                for e in range(n_edges):
                    q[e] = _clampd(post[edge_col[e]] - rmsg[e], llr_clamp)

                zero_post = False
                for v in range(n):
                    bits_out[cw, v] = 1 if post[v] < 0.0 else 0
                    if post[v] == 0.0:
                        zero_post = True
                ok = not zero_post
                if ok:
                    for r in range(n_rows):
                        parity = 0
                        for e in range(row_ptr[r], row_ptr[r + 1]):
                            parity ^= bits_out[cw, edge_col[e]]
                        if parity:
                            ok = False
                            break
                if ok:
                    iters_out[cw] = it
                    conv_out[cw] = 1
                    break
    return bits_arr, iters_arr, conv_arr.astype(bool)
