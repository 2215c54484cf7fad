"""Slow, independent reference implementations used for verification.

Nothing here shares code paths with the fast implementations beyond numpy
itself: transforms are explicit sums, convolutions and scans are plain
loops, and SSIM is evaluated window by window from its definition.
"""
from __future__ import annotations

import math

import numpy as np


def naive_dft2_centered(img) -> np.ndarray:
    """Direct double-sum DFT with the DC bin placed at ``(H // 2, W // 2)``."""
    img = np.asarray(img, dtype=np.float64)
    H, W = img.shape
    ku = np.arange(H) - H // 2
    kv = np.arange(W) - W // 2
    m = np.arange(H)
    n = np.arange(W)
    phase = (
        np.multiply.outer(ku, m)[:, None, :, None] / H
        + np.multiply.outer(kv, n)[None, :, None, :] / W
    )
    kernel = np.exp(-2j * np.pi * phase)  # (u, v, m, n)
    return np.einsum("uvmn,mn->uv", kernel, img)


def naive_idft2_centered(spec) -> np.ndarray:
    spec = np.asarray(spec, dtype=np.complex128)
    H, W = spec.shape
    ku = np.arange(H) - H // 2
    kv = np.arange(W) - W // 2
    phase = (
        np.multiply.outer(np.arange(H), ku)[:, None, :, None] / H
        + np.multiply.outer(np.arange(W), kv)[None, :, None, :] / W
    )
    kernel = np.exp(2j * np.pi * phase)  # (m, n, u, v)
    return np.einsum("mnuv,uv->mn", kernel, spec) / (H * W)


def conv2d_loops(x, weights, bias, stride=1, padding=0) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    B, C, H, W = x.shape
    O, _, kh, kw = weights.shape
    Ho = (H + 2 * padding - kh) // stride + 1
    Wo = (W + 2 * padding - kw) // stride + 1
    out = np.zeros((B, O, Ho, Wo))
    for b in range(B):
        for o in range(O):
            for i in range(Ho):
                for j in range(Wo):
                    acc = bias[o]
                    for c in range(C):
                        for p in range(kh):
                            for q in range(kw):
                                r = i * stride + p - padding
                                s = j * stride + q - padding
                                if 0 <= r < H and 0 <= s < W:
                                    acc += x[b, c, r, s] * weights[o, c, p, q]
                    out[b, o, i, j] = acc
    return out


def _softplus(z):
    return max(z, 0.0) + math.log1p(math.exp(-abs(z)))


def ssm_interpreter(seq, params) -> np.ndarray:
    """Step-by-step selective scan with scalar arithmetic."""
    seq = np.asarray(seq, dtype=np.float64)
    B, D, L = seq.shape
    n = params.a.size
    y = np.zeros_like(seq)
    for b in range(B):
        for c in range(D):
            h = [0.0] * n
            for t in range(L):
                xs = seq[b, :, t]
                z = params.delta_bias + sum(params.delta_proj[d] * xs[d] for d in range(D))
                delta = max(_softplus(z), np.finfo(np.float64).tiny)
                out = 0.0
                for j in range(n):
                    bj = sum(params.b_proj[j, d] * xs[d] for d in range(D))
                    cj = sum(params.c_proj[j, d] * xs[d] for d in range(D))
                    a_bar = math.exp(delta * params.a[j])
                    b_bar = math.expm1(delta * params.a[j]) / params.a[j] * bj
                    h[j] = a_bar * h[j] + b_bar * seq[b, c, t]
                    out += cj * h[j]
                y[b, c, t] = out + params.skip * seq[b, c, t]
    return y


def gated_set(omega, fraction, min_gated, use_abs=False):
    vals = [abs(v) if use_abs else v for v in np.asarray(omega).reshape(-1)]
    k = min(len(vals), max(min_gated, int(math.floor(fraction * len(vals)))))
    ranked = sorted(range(len(vals)), key=lambda i: (vals[i], i))
    return set(ranked[:k])


def ddcfm_interpreter(f_a, f_b, state, cfg) -> np.ndarray:
    """Channel-by-channel evaluation of the fusion module."""
    f_a = np.asarray(f_a, dtype=np.float64)
    f_b = np.asarray(f_b, dtype=np.float64)
    B, C, H, W = f_a.shape

    def inorm(f, w, g):
        out = np.empty_like(f)
        for b in range(B):
            for c in range(C):
                plane = f[b, c]
                mu = plane.sum() / plane.size
                var = ((plane - mu) ** 2).sum() / plane.size
                out[b, c] = w[c] * (plane - mu) / math.sqrt(var + state.eps) + g[c]
        return out

    if cfg.normalized:
        src_a = inorm(f_a, state.omega_a, state.gamma_a)
        src_b = inorm(f_b, state.omega_b, state.gamma_b)
    else:
        src_a, src_b = f_a, f_b
    ga = gated_set(state.omega_a, cfg.fraction, cfg.min_gated, cfg.use_abs)
    gb = gated_set(state.omega_b, cfg.fraction, cfg.min_gated, cfg.use_abs)
    cat = np.zeros((B, 2 * C, H, W))
    for c in range(C):
        cat[:, c] = src_a[:, c] * src_b[:, c] if c in ga else src_a[:, c]
        cat[:, C + c] = src_b[:, c] * src_a[:, c] if c in gb else src_b[:, c]
    w = state.fusion.weights[:, :, 0, 0]
    out = np.zeros((B, C, H, W))
    for o in range(C):
        acc = np.full((B, H, W), state.fusion.bias[o])
        for c in range(2 * C):
            acc = acc + w[o, c] * cat[:, c]
        out[:, o] = acc
    return out


def ssim_direct(x, y, data_range=1.0, win=11, sigma=1.5) -> float:
    """Mean SSIM over all fully contained windows, each evaluated from scratch."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    r = np.arange(win) - (win - 1) / 2.0
    g1 = np.exp(-(r ** 2) / (2 * sigma ** 2))
    wgt = np.outer(g1, g1)
    wgt /= wgt.sum()
    c1 = (0.01 * data_range) ** 2
    c2 = (0.03 * data_range) ** 2
    vals = []
    for i in range(x.shape[0] - win + 1):
        for j in range(x.shape[1] - win + 1):
            px = x[i : i + win, j : j + win]
            py = y[i : i + win, j : j + win]
            mx = (wgt * px).sum()
            my = (wgt * py).sum()
            vx = (wgt * (px - mx) ** 2).sum()
            vy = (wgt * (py - my) ** 2).sum()
            cxy = (wgt * (px - mx) * (py - my)).sum()
            vals.append(((2 * mx * my + c1) * (2 * cxy + c2)) / ((mx ** 2 + my ** 2 + c1) * (vx + vy + c2)))
    return float(np.mean(vals))


def central_difference(f, x, step=1e-6) -> np.ndarray:
    """Elementwise central finite-difference gradient of scalar ``f`` at ``x``."""
    x = np.array(x, dtype=np.float64)
    grad = np.zeros_like(x)
    flat, gflat = x.reshape(-1), grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + step
        fp = f(x)
        flat[i] = orig - step
        fm = f(x)
        flat[i] = orig
        gflat[i] = (fp - fm) / (2 * step)
    return grad
