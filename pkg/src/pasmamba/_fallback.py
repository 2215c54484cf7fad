"""Pure numpy versions of the compiled scan kernels.

Same signatures and semantics as ``pasmamba._kernels``; the time loop stays in
Python, the lane axes are vectorized, and the state axis is summed in index
order so results match the compiled kernels bit for bit.
"""
import numpy as np


def scan_lanes(a_bar, bx, c):
    a_bar = np.asarray(a_bar, dtype=np.float64)
    bx = np.asarray(bx, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    K, L, n = a_bar.shape
    y = np.zeros((K, L))
    h = np.zeros((K, n))
    for t in range(L):
        h = a_bar[:, t] * h + bx[:, t]
        acc = np.zeros(K)
        for j in range(n):
            acc += c[:, t, j] * h[:, j]
        y[:, t] = acc
    return y


def selective_scan(x, a_bar, b_bar, cm):
    x = np.asarray(x, dtype=np.float64)
    B, C, L = x.shape
    n = a_bar.shape[2]
    if a_bar.shape[:2] != (B, L):
        raise ValueError("a_bar must be (B, L, n) matching x")
    y = np.zeros((B, C, L))
    h = np.zeros((B, C, n))
    for t in range(L):
        h = a_bar[:, None, t, :] * h + b_bar[:, None, t, :] * x[:, :, t, None]
        acc = np.zeros((B, C))
        for j in range(n):
            acc += cm[:, t, None, j] * h[:, :, j]
        y[:, :, t] = acc
    return y
