# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled recurrences for the diagonal state-space scan.

Both kernels release the GIL so per-path scans can run on worker threads.
Summation over the state axis runs in index order, so results match
``pasmamba._fallback`` bit for bit.
"""
import numpy as np

cimport numpy as cnp

cnp.import_array()


def scan_lanes(const double[:, :, ::1] a_bar,
               const double[:, :, ::1] bx,
               const double[:, :, ::1] c):
    """h_t = a_bar_t * h_{t-1} + bx_t, y_t = <c_t, h_t>, per lane, h_0 = 0."""
    cdef Py_ssize_t K = a_bar.shape[0], L = a_bar.shape[1], n = a_bar.shape[2]
    cdef Py_ssize_t k, t, j
    cdef double acc
    out = np.zeros((K, L), dtype=np.float64)
    h_buf = np.zeros(n, dtype=np.float64)
    cdef double[:, ::1] y = out
    cdef double[::1] h = h_buf
    with nogil:
        for k in range(K):
            for j in range(n):
                h[j] = 0.0
            for t in range(L):
                acc = 0.0
                for j in range(n):
                    h[j] = a_bar[k, t, j] * h[j] + bx[k, t, j]
                    acc = acc + c[k, t, j] * h[j]
                y[k, t] = acc
    return out


def selective_scan(const double[:, :, ::1] x,
                   const double[:, :, ::1] a_bar,
                   const double[:, :, ::1] b_bar,
                   const double[:, :, ::1] cm):
    """Channel-independent scan with per-step parameters shared across channels.

    x is (B, C, L); a_bar, b_bar, cm are (B, L, n). Returns y of shape (B, C, L)
    with h_{b,c,t} = a_bar[b,t] * h_{b,c,t-1} + b_bar[b,t] * x[b,c,t] and
    y[b,c,t] = <cm[b,t], h_{b,c,t}>.
    """
    cdef Py_ssize_t B = x.shape[0], C = x.shape[1], L = x.shape[2]
    cdef Py_ssize_t n = a_bar.shape[2]
    cdef Py_ssize_t b, ch, t, j
    cdef double acc, xt
    if a_bar.shape[0] != B or a_bar.shape[1] != L:
        raise ValueError("a_bar must be (B, L, n) matching x")
    out = np.zeros((B, C, L), dtype=np.float64)
    h_buf = np.zeros(n, dtype=np.float64)
    cdef double[:, :, ::1] y = out
    cdef double[::1] h = h_buf
    with nogil:
        for b in range(B):
            for ch in range(C):
                for j in range(n):
                    h[j] = 0.0
                for t in range(L):
                    xt = x[b, ch, t]
                    acc = 0.0
                    for j in range(n):
                        h[j] = a_bar[b, t, j] * h[j] + b_bar[b, t, j] * xt
                        acc = acc + cm[b, t, j] * h[j]
                    y[b, ch, t] = acc
    return out
