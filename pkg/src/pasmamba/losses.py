"""Hybrid image/phase/amplitude L1 loss, its gradient, and image metrics."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .fourier import ZERO_AMPLITUDE, decompose, dft2_centered, idft2_complex, wrap_phase

ALPHA = 0.05
BETA = 0.05
DATA_RANGE = 1.0


@dataclass
class LossBreakdown:
    image_l1: float
    phase_l1: float
    amp_l1: float
    alpha: float
    beta: float

    @property
    def total(self) -> float:
        return self.image_l1 + self.alpha * self.phase_l1 + self.beta * self.amp_l1

    def as_dict(self):
        d = asdict(self)
        d["total"] = self.total
        return d


def _pair(out, gt):
    out = np.asarray(out, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    if out.shape != gt.shape or out.ndim != 2:
        raise ValueError(f"expected two 2-D images of equal shape, got {out.shape} and {gt.shape}")
    return out, gt


def phase_l1(phase_out, phase_gt) -> float:
    """Mean absolute principal-value phase difference."""
    return float(np.mean(np.abs(wrap_phase(np.asarray(phase_out) - np.asarray(phase_gt)))))


def hybrid_loss(out, gt, alpha: float = ALPHA, beta: float = BETA) -> LossBreakdown:
    """Mean L1 in the image, on wrapped phase differences, and on amplitudes."""
    out, gt = _pair(out, gt)
    po, pg = decompose(dft2_centered(out)), decompose(dft2_centered(gt))
    return LossBreakdown(
        image_l1=float(np.mean(np.abs(out - gt))),
        phase_l1=phase_l1(po.phase, pg.phase),
        amp_l1=float(np.mean(np.abs(po.amplitude - pg.amplitude))),
        alpha=alpha,
        beta=beta,
    )


def hybrid_loss_grad(out, gt, alpha: float = ALPHA, beta: float = BETA) -> np.ndarray:
    """Gradient of ``hybrid_loss(out, gt).total`` with respect to ``out``.

    With ``X = F(out)`` and per-bin weights ``g = beta s_A X/|X| + alpha s_P i X/|X|^2``
    (``s`` the L1 signs, ``sign(0) = 0``), the spectral part of the gradient is
    ``Re(F^-1(g))``, the 1/N of the inverse supplying the mean. Bins with
    ``|X|`` below ``ZERO_AMPLITUDE`` contribute nothing.
    """
    out, gt = _pair(out, gt)
    N = out.size
    X = dft2_centered(out)
    po, pg = decompose(X), decompose(dft2_centered(gt))
    s_amp = np.sign(po.amplitude - pg.amplitude)
    s_pha = np.sign(wrap_phase(po.phase - pg.phase))
    amp = po.amplitude
    live = amp >= ZERO_AMPLITUDE
    safe = np.where(live, amp, 1.0)
    g = np.where(live, beta * s_amp * X / safe + alpha * s_pha * 1j * X / (safe * safe), 0.0)
    # (1/N) sum_k Re(conj(g_k) dX_k/dout_n) == Re(ifft(g))_n
    spectral = np.real(idft2_complex(g))
    return np.sign(out - gt) / N + spectral


def psnr(x, gt, data_range: float = DATA_RANGE) -> float:
    """Peak signal-to-noise ratio in dB; ``inf`` when the images are identical."""
    x, gt = _pair(x, gt)
    if not data_range > 0:
        raise ValueError("data_range must be > 0")
    mse = float(np.mean((x - gt) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(data_range * data_range / mse)


def gaussian_window(size: int = 11, sigma: float = 1.5) -> np.ndarray:
    r = np.arange(size) - (size - 1) / 2.0
    g = np.exp(-(r * r) / (2.0 * sigma * sigma))
    return g / g.sum()


def _filter_valid(img, g):
    k = g.size
    rows = sum(g[i] * img[i : img.shape[0] - k + 1 + i, :] for i in range(k))
    return sum(g[j] * rows[:, j : rows.shape[1] - k + 1 + j] for j in range(k))


def ssim_map(x, gt, data_range: float = DATA_RANGE, win: int = 11, sigma: float = 1.5) -> np.ndarray:
    x, gt = _pair(x, gt)
    if min(x.shape) < win:
        raise ValueError(f"images must be at least {win}x{win}, got {x.shape}")
    g = gaussian_window(win, sigma)
    c1 = (0.01 * data_range) ** 2
    c2 = (0.03 * data_range) ** 2
    mx, my = _filter_valid(x, g), _filter_valid(gt, g)
    sxx = _filter_valid(x * x, g) - mx * mx
    syy = _filter_valid(gt * gt, g) - my * my
    sxy = _filter_valid(x * gt, g) - mx * my
    num = (2.0 * mx * my + c1) * (2.0 * sxy + c2)
    den = (mx * mx + my * my + c1) * (sxx + syy + c2)
    return num / den


def ssim(x, gt, data_range: float = DATA_RANGE) -> float:
    """Single-scale SSIM: 11x11 Gaussian window (sigma 1.5), valid region mean."""
    return float(np.mean(ssim_map(x, gt, data_range)))


def toy_optimize(measured, gt, steps: int = 200, lr: float = 0.5, alpha: float = ALPHA, beta: float = BETA):
    """Pixel-wise gradient descent on the hybrid loss, starting from ``measured``.

    Returns ``(estimate, trace)`` where ``trace[i]`` is the loss breakdown
    before step ``i`` (``steps + 1`` entries).
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    x = np.array(measured, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    trace = [hybrid_loss(x, gt, alpha, beta)]
    for _ in range(steps):
        x = x - lr * hybrid_loss_grad(x, gt, alpha, beta)
        trace.append(hybrid_loss(x, gt, alpha, beta))
    return x, trace
