"""Single-coil k-space measurement simulation.

Masks live on the centered spectrum grid (DC at ``(H // 2, W // 2)``).
Cartesian masks sample whole phase-encode columns; radial masks rasterize
golden-angle diametral spokes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fourier import (
    AmpPhase,
    decompose,
    dft2_centered,
    hermitian_part,
    idft2_centered,
    idft2_complex,
    recompose,
)

PATTERNS = ("cartesian", "radial")
CENTER_FRACTIONS = {2: 0.16, 4: 0.08}
GOLDEN_ANGLE_DEG = 111.246117975
PHANTOM_KINDS = ("shepp_logan", "checker", "gaussian_blobs")


@dataclass
class SamplingMask:
    grid: np.ndarray
    pattern: str
    acceleration: int
    center_fraction: float
    seed: int

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=np.uint8)
        if self.pattern not in PATTERNS + ("full",):
            raise ValueError(f"unknown mask pattern {self.pattern!r}")

    @property
    def shape(self):
        return self.grid.shape

    @property
    def sampled_fraction(self) -> float:
        return float(self.grid.sum()) / self.grid.size


@dataclass
class NoiseSpec:
    sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("noise sigma must be >= 0")


def _check_accel(acceleration):
    if acceleration not in CENTER_FRACTIONS:
        raise ValueError(f"acceleration must be one of {sorted(CENTER_FRACTIONS)}, got {acceleration}")


def make_full_mask(h: int, w: int) -> SamplingMask:
    return SamplingMask(np.ones((h, w), np.uint8), "full", 1, 1.0, 0)


def make_cartesian_mask(
    h: int, w: int, acceleration: int, seed: int = 0, center_fraction: float | None = None
) -> SamplingMask:
    """Random phase-encode column mask with a fully sampled center block.

    ``round(w / acceleration)`` columns are sampled in total: the central
    ``ceil(center_fraction * w)`` plus columns drawn uniformly without
    replacement from the rest.
    """
    _check_accel(acceleration)
    if w < 8 or h < 1:
        raise ValueError("cartesian masks need w >= 8")
    cf = CENTER_FRACTIONS[acceleration] if center_fraction is None else center_fraction
    n_center = math.ceil(cf * w)
    n_total = int(math.floor(w / acceleration + 0.5))
    if n_total < n_center:
        raise ValueError(
            f"acceleration x{acceleration} allows {n_total} columns, fewer than the "
            f"{n_center}-column center block"
        )
    start = w // 2 - n_center // 2
    center = np.arange(start, start + n_center)
    rest = np.setdiff1d(np.arange(w), center)
    rng = np.random.default_rng(seed)
    picked = rng.choice(rest, size=n_total - n_center, replace=False)
    cols = np.zeros(w, dtype=np.uint8)
    cols[center] = 1
    cols[picked] = 1
    grid = np.repeat(cols[None, :], h, axis=0)
    return SamplingMask(grid, "cartesian", acceleration, cf, seed)


def _bresenham(r0, c0, r1, c1):
    dr, dc = abs(r1 - r0), abs(c1 - c0)
    sr = 1 if r1 >= r0 else -1
    sc = 1 if c1 >= c0 else -1
    err = dc - dr
    r, c = r0, c0
    pts = [(r, c)]
    while (r, c) != (r1, c1):
        e2 = 2 * err
        if e2 > -dr:
            err -= dr
            c += sc
        if e2 < dc:
            err += dc
            r += sr
        pts.append((r, c))
    return pts


def _ray_end(h, w, cy, cx, dy, dx):
    """Furthest rounded grid point along (dy, dx) from the center that stays inside."""
    ts = []
    for d, lo, hi, c in ((dy, 0, h - 1, cy), (dx, 0, w - 1, cx)):
        if d > 1e-12:
            ts.append((hi - c) / d)
        elif d < -1e-12:
            ts.append((lo - c) / d)
    t = min(ts)
    r = min(max(int(round(cy + t * dy)), 0), h - 1)
    c = min(max(int(round(cx + t * dx)), 0), w - 1)
    return r, c


def make_radial_mask(h: int, w: int, acceleration: int, seed: int = 0) -> SamplingMask:
    """Golden-angle spoke mask, spokes added until the fraction reaches 1/acceleration.

    The seed sets the angle of the first spoke; spoke ``k`` sits at
    ``theta0 + k * 111.246 deg``.
    """
    _check_accel(acceleration)
    if min(h, w) < 8:
        raise ValueError("radial masks need min(h, w) >= 8")
    cy, cx = h // 2, w // 2
    theta0 = np.random.default_rng(seed).uniform(0.0, 180.0)
    grid = np.zeros((h, w), dtype=np.uint8)
    grid[cy, cx] = 1
    target = h * w / acceleration
    k = 0
    while grid.sum() < target:
        theta = math.radians(theta0 + k * GOLDEN_ANGLE_DEG)
        dy, dx = math.sin(theta), math.cos(theta)
        for sgn in (1.0, -1.0):
            r1, c1 = _ray_end(h, w, cy, cx, sgn * dy, sgn * dx)
            for r, c in _bresenham(cy, cx, r1, c1):
                grid[r, c] = 1
        k += 1
        if k > 100 * (h + w):
            raise RuntimeError("radial mask did not reach the target fraction")
    return SamplingMask(grid, "radial", acceleration, 0.0, seed)


def make_mask(pattern: str, h: int, w: int, acceleration: int, seed: int = 0) -> SamplingMask:
    if pattern == "cartesian":
        return make_cartesian_mask(h, w, acceleration, seed)
    if pattern == "radial":
        return make_radial_mask(h, w, acceleration, seed)
    raise ValueError(f"unknown mask pattern {pattern!r}")


def _masked_spectrum(img, mask, noise):
    img = np.asarray(img, dtype=np.float64)
    grid = np.asarray(mask.grid if isinstance(mask, SamplingMask) else mask)
    if img.shape != grid.shape:
        raise ValueError(f"image shape {img.shape} != mask shape {grid.shape}")
    k = dft2_centered(img)
    noise = noise or NoiseSpec()
    if noise.sigma > 0:
        rng = np.random.default_rng(noise.seed)
        k = k + noise.sigma * (rng.standard_normal(k.shape) + 1j * rng.standard_normal(k.shape))
    return grid * k


def zero_filled(img, mask: SamplingMask, noise: NoiseSpec | None = None) -> np.ndarray:
    """Complex zero-filled image ``F^-1(M * (F(img) + eps))``.

    Noise is i.i.d. complex Gaussian with std ``sigma`` per real/imaginary
    part, added on the sampled bins only.
    """
    return idft2_complex(_masked_spectrum(img, mask, noise))


def undersample(
    img, mask: SamplingMask, noise: NoiseSpec | None = None, output: str = "magnitude"
) -> np.ndarray:
    """Real zero-filled reconstruction of ``img`` under ``mask``.

    A random column mask is not conjugate-symmetric, so the zero-filled image
    is complex. ``output="magnitude"`` (default) returns its modulus, the
    usual magnitude-MRI input image. ``output="real"`` returns the real part,
    computed as the inverse of the Hermitian part of the masked spectrum;
    that variant is linear in ``img`` and exact for images of any sign.
    """
    if output == "magnitude":
        return np.ascontiguousarray(np.abs(zero_filled(img, mask, noise)))
    if output == "real":
        return idft2_centered(hermitian_part(_masked_spectrum(img, mask, noise)))
    raise ValueError(f"output must be 'magnitude' or 'real', got {output!r}")


# Modified Shepp-Logan (Toft): intensity, semi-axis a, semi-axis b, x0, y0, angle deg
SHEPP_LOGAN = np.array(
    [
        [1.0, 0.69, 0.92, 0.0, 0.0, 0.0],
        [-0.8, 0.6624, 0.8740, 0.0, -0.0184, 0.0],
        [-0.2, 0.1100, 0.3100, 0.22, 0.0, -18.0],
        [-0.2, 0.1600, 0.4100, -0.22, 0.0, 18.0],
        [0.1, 0.2100, 0.2500, 0.0, 0.35, 0.0],
        [0.1, 0.0460, 0.0460, 0.0, 0.1, 0.0],
        [0.1, 0.0460, 0.0460, 0.0, -0.1, 0.0],
        [0.1, 0.0460, 0.0230, -0.08, -0.605, 0.0],
        [0.1, 0.0230, 0.0230, 0.0, -0.606, 0.0],
        [0.1, 0.0230, 0.0460, 0.06, -0.605, 0.0],
    ]
)


def _ellipses(h, w, table):
    y, x = np.meshgrid(np.linspace(1, -1, h), np.linspace(-1, 1, w), indexing="ij")
    img = np.zeros((h, w))
    for val, a, b, x0, y0, ang in table:
        t = math.radians(ang)
        xr = (x - x0) * math.cos(t) + (y - y0) * math.sin(t)
        yr = -(x - x0) * math.sin(t) + (y - y0) * math.cos(t)
        img[(xr / a) ** 2 + (yr / b) ** 2 <= 1.0] += val
    return img


def make_phantom(h: int, w: int, kind: str = "shepp_logan", seed: int = 0, period: int = 4) -> np.ndarray:
    """Deterministic synthetic test image with values in [0, 1].

    ``shepp_logan`` with seed 0 is the standard ten-ellipse table; other seeds
    jitter centers, axes and angles slightly so a seed sweep yields a family
    of anatomically similar phantoms.
    """
    if h < 16 or w < 16:
        raise ValueError("phantoms need h, w >= 16")
    if kind == "shepp_logan":
        table = SHEPP_LOGAN.copy()
        if seed:
            rng = np.random.default_rng(seed)
            table[:, 1:3] *= 1.0 + rng.uniform(-0.08, 0.08, size=(10, 2))
            table[:, 3:5] += rng.uniform(-0.03, 0.03, size=(10, 2))
            table[:, 5] += rng.uniform(-8.0, 8.0, size=10)
        img = _ellipses(h, w, table)
    elif kind == "checker":
        r, c = np.indices((h, w))
        img = (((r // period) + (c // period)) % 2).astype(np.float64)
    elif kind == "gaussian_blobs":
        rng = np.random.default_rng(seed)
        r, c = np.indices((h, w), dtype=np.float64)
        img = np.zeros((h, w))
        for _ in range(rng.integers(3, 8)):
            cy, cx = rng.uniform(0.2 * h, 0.8 * h), rng.uniform(0.2 * w, 0.8 * w)
            s = rng.uniform(0.04, 0.15) * min(h, w)
            img += rng.uniform(0.3, 1.0) * np.exp(-((r - cy) ** 2 + (c - cx) ** 2) / (2 * s * s))
    else:
        raise ValueError(f"unknown phantom kind {kind!r}; expected one of {PHANTOM_KINDS}")
    img = np.clip(img, 0.0, None)
    peak = img.max()
    return img / peak if peak > 0 else img


def swap_spectrum(amp_source, phase_source, clamp: bool = True) -> np.ndarray:
    """Image with the amplitude spectrum of one input and the phase spectrum of the other.

    Amplitude is even and phase odd for real inputs, but bins whose amplitude
    is at round-off level carry arbitrary phase, so the mixed spectrum is
    projected onto its Hermitian part before the inverse. ``clamp``
    restricts the result to [0, 1].
    """
    a = np.asarray(amp_source, dtype=np.float64)
    p = np.asarray(phase_source, dtype=np.float64)
    if a.shape != p.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {p.shape}")
    amp = decompose(dft2_centered(a)).amplitude
    pha = decompose(dft2_centered(p)).phase
    out = idft2_centered(hermitian_part(recompose(AmpPhase(amp, pha))))
    return np.clip(out, 0.0, 1.0) if clamp else out
