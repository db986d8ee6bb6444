# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled quadrature kernels for the average error of ReLU and softmax models.

Every error kernel takes a batch of parameter vectors ``W`` (one per row)
and returns the mean squared output difference over the quadrature points.
Once the running sum exceeds ``cap * Q`` the loop stops; such entries are
only guaranteed to be larger than ``cap``.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, INFINITY
from libc.stdlib cimport malloc, free

cnp.import_array()


cdef inline void _relu_point(const double* w, const double* x, double* hid, double* out,
                             int h1, int h2, int h3) noexcept nogil:
    cdef int i, j, k
    cdef const double* a1 = w
    cdef const double* a2 = w + h1 * h2
    cdef const double* b2 = w + h1 * h2 + h2 * h3
    cdef double acc
    for j in range(h2):
        acc = 0.0
        for k in range(h3):
            acc = acc + a2[j * h3 + k] * x[k]
        acc = acc + b2[j]
        hid[j] = acc if acc > 0.0 else 0.0
    for i in range(h1):
        acc = 0.0
        for j in range(h2):
            acc = acc + a1[i * h2 + j] * hid[j]
        out[i] = acc


def relu_forward(const double[::1] params, const double[:, ::1] X, int h1, int h2, int h3):
    cdef Py_ssize_t q, Q = X.shape[0]
    out = np.empty((Q, h1))
    cdef double[:, ::1] o = out
    cdef double* hid = <double*> malloc(max(h2, 1) * sizeof(double))
    try:
        with nogil:
            for q in range(Q):
                _relu_point(&params[0], &X[q, 0], hid, &o[q, 0], h1, h2, h3)
    finally:
        free(hid)
    return out


def relu_sq_error(const double[:, ::1] W, const double[:, ::1] X, const double[:, ::1] target,
                  int h1, int h2, int h3, double cap=INFINITY):
    cdef Py_ssize_t m, q, M = W.shape[0], Q = X.shape[0]
    cdef int i
    cdef double acc, diff, limit = cap * Q
    out = np.empty(M)
    cdef double[::1] o = out
    cdef double* hid = <double*> malloc((max(h2, 1) + h1) * sizeof(double))
    cdef double* y = hid + max(h2, 1)
    try:
        with nogil:
            for m in range(M):
                acc = 0.0
                for q in range(Q):
                    _relu_point(&W[m, 0], &X[q, 0], hid, y, h1, h2, h3)
                    for i in range(h1):
                        diff = y[i] - target[q, i]
                        acc = acc + diff * diff
                    if acc > limit:
                        break
                o[m] = acc / Q
    finally:
        free(hid)
    return out


cdef inline Py_ssize_t _n_weights(const int* widths, int L) noexcept nogil:
    cdef Py_ssize_t n = 0
    cdef int i
    for i in range(L):
        n = n + widths[i] * widths[i + 1]
    return n


cdef inline void _softmax_point(const double* w, const double* x, const int* widths, int L, int bias,
                                double* buf_a, double* buf_b, double* out) noexcept nogil:
    # layers run from s = L (input side) down to s = 1 (output side)
    cdef int s, i, k, rows, cols
    cdef Py_ssize_t a_off, b_off, nw = _n_weights(widths, L)
    cdef double acc, mx, tot
    cdef double* src = buf_a
    cdef double* dst = buf_b
    cdef double* tmp
    for k in range(widths[L]):
        src[k] = x[k]
    for s in range(L - 1, -1, -1):
        rows = widths[s]
        cols = widths[s + 1]
        a_off = 0
        b_off = 0
        for i in range(s):
            a_off = a_off + widths[i] * widths[i + 1]
            b_off = b_off + widths[i]
        for i in range(rows):
            acc = 0.0
            for k in range(cols):
                acc = acc + w[a_off + i * cols + k] * src[k]
            if bias:
                acc = acc + w[nw + b_off + i]
            dst[i] = acc
        tmp = src
        src = dst
        dst = tmp
    mx = src[0]
    for i in range(1, widths[0]):
        if src[i] > mx:
            mx = src[i]
    tot = 0.0
    for i in range(widths[0]):
        out[i] = exp(src[i] - mx)
        tot = tot + out[i]
    for i in range(widths[0]):
        out[i] = out[i] / tot


def softmax_forward(const double[::1] params, const double[:, ::1] X, const int[::1] widths, bint bias):
    cdef int L = widths.shape[0] - 1
    cdef int h1 = widths[0]
    cdef int wmax = 0, i
    for i in range(L + 1):
        wmax = max(wmax, widths[i])
    cdef Py_ssize_t q, Q = X.shape[0]
    out = np.empty((Q, h1))
    cdef double[:, ::1] o = out
    cdef double* buf = <double*> malloc(2 * wmax * sizeof(double))
    try:
        with nogil:
            for q in range(Q):
                _softmax_point(&params[0], &X[q, 0], &widths[0], L, bias, buf, buf + wmax, &o[q, 0])
    finally:
        free(buf)
    return out


def softmax_sq_error(const double[:, ::1] W, const double[:, ::1] X, const double[:, ::1] target,
                     const int[::1] widths, bint bias, double cap=INFINITY):
    cdef int L = widths.shape[0] - 1
    cdef int h1 = widths[0]
    cdef int wmax = 0, i
    for i in range(L + 1):
        wmax = max(wmax, widths[i])
    cdef Py_ssize_t m, q, M = W.shape[0], Q = X.shape[0]
    cdef double acc, diff, limit = cap * Q
    out = np.empty(M)
    cdef double[::1] o = out
    cdef double* buf = <double*> malloc((2 * wmax + h1) * sizeof(double))
    cdef double* y = buf + 2 * wmax
    try:
        with nogil:
            for m in range(M):
                acc = 0.0
                for q in range(Q):
                    _softmax_point(&W[m, 0], &X[q, 0], &widths[0], L, bias, buf, buf + wmax, y)
                    for i in range(h1):
                        diff = y[i] - target[q, i]
                        acc = acc + diff * diff
                    if acc > limit:
                        break
                o[m] = acc / Q
    finally:
        free(buf)
    return out
