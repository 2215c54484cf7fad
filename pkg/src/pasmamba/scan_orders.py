"""Serialization orders that flatten 2D grids into 1D scan sequences.

* ``cfds``: concentric square (Chebyshev) shells around the centered DC bin,
  low to high frequency, each shell walked from a named corner in a named
  rotational sense.
* ``local``: non-overlapping windows in raster order, raster order inside.
* ``raster``: row- or column-major sweeps from one of the four corners.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

KINDS = ("cfds", "local", "raster")

# path id -> (start corner, clockwise)
CFDS_PATHS = {
    0: ("top-left", True),
    1: ("top-right", False),
    2: ("bottom-left", False),
    3: ("bottom-right", True),
}
RASTER_PATHS = {0: "top-left", 1: "bottom-right", 2: "bottom-left", 3: "top-right"}


@dataclass(frozen=True)
class ScanOrder:
    h: int
    w: int
    perm: np.ndarray
    kind: str
    path_id: int
    mirrored: bool = False

    @property
    def length(self) -> int:
        return self.h * self.w

    @property
    def inverse(self) -> np.ndarray:
        inv = np.empty_like(self.perm)
        inv[self.perm] = np.arange(self.perm.size)
        return inv

    def validate(self):
        """Raise ``ValueError`` if ``perm`` is not a bijection on the grid."""
        n = self.h * self.w
        if self.perm.shape != (n,):
            raise ValueError(f"perm has length {self.perm.size}, expected {n}")
        seen = np.zeros(n, dtype=bool)
        if self.perm.min() < 0 or self.perm.max() >= n:
            raise ValueError("perm index out of range")
        seen[self.perm] = True
        if not seen.all():
            raise ValueError("perm is not a bijection")


def _corner(name, h, w):
    return {
        "top-left": (0, 0),
        "top-right": (0, w - 1),
        "bottom-left": (h - 1, 0),
        "bottom-right": (h - 1, w - 1),
    }[name]


def _ring(cy, cx, r):
    """Cells of the Chebyshev shell of radius ``r``, clockwise from its top-left corner."""
    if r == 0:
        return [(cy, cx)]
    top, bot, left, right = cy - r, cy + r, cx - r, cx + r
    cells = [(top, c) for c in range(left, right + 1)]
    cells += [(row, right) for row in range(top + 1, bot + 1)]
    cells += [(bot, c) for c in range(right - 1, left - 1, -1)]
    cells += [(row, left) for row in range(bot - 1, top, -1)]
    return cells


def chebyshev_radius(h: int, w: int) -> np.ndarray:
    """Flat array of Chebyshev distances to the DC bin ``(h // 2, w // 2)``."""
    r, c = np.indices((h, w))
    return np.maximum(np.abs(r - h // 2), np.abs(c - w // 2)).ravel()


def cfds_order(h: int, w: int, path_id: int = 0, mirrored: bool = False) -> ScanOrder:
    """Circular frequency-domain scan.

    Paths 0..3 are top-left clockwise, top-right counterclockwise,
    bottom-left counterclockwise and bottom-right clockwise. ``mirrored``
    flips the rotational sense, giving the other four of the eight paths.
    Each shell starts at its in-grid cell nearest the named grid corner
    (ties: smaller row, then smaller column); shells clipped by the grid
    border skip missing cells but keep their rotational order.
    """
    if path_id not in CFDS_PATHS:
        raise ValueError(f"cfds path_id must be in 0..3, got {path_id}")
    if h < 2 or w < 2:
        raise ValueError("cfds needs h, w >= 2")
    corner_name, clockwise = CFDS_PATHS[path_id]
    clockwise ^= mirrored
    ky, kx = _corner(corner_name, h, w)
    cy, cx = h // 2, w // 2
    rmax = max(cy, cx, h - 1 - cy, w - 1 - cx)
    perm = []
    for r in range(rmax + 1):
        ring = _ring(cy, cx, r)
        inside = [i for i, (y, x) in enumerate(ring) if 0 <= y < h and 0 <= x < w]
        start = min(
            inside,
            key=lambda i: ((ring[i][0] - ky) ** 2 + (ring[i][1] - kx) ** 2, ring[i][0], ring[i][1]),
        )
        n = len(ring)
        step = 1 if clockwise else -1
        for m in range(n):
            y, x = ring[(start + step * m) % n]
            if 0 <= y < h and 0 <= x < w:
                perm.append(y * w + x)
    return ScanOrder(h, w, np.asarray(perm, dtype=np.int64), "cfds", path_id, mirrored)


def local_order(h: int, w: int, window: int = 4) -> ScanOrder:
    """Non-overlapping ``window`` x ``window`` tiles in raster order, raster inside.

    Tiles on the bottom and right borders are clipped when ``window`` does
    not divide the grid.
    """
    if window < 1:
        raise ValueError(f"window must be >= 1, got {window}")
    r, c = np.indices((h, w))
    key = np.lexsort(((c % window).ravel(), (r % window).ravel(), (c // window).ravel(), (r // window).ravel()))
    return ScanOrder(h, w, key.astype(np.int64), "local", window)


def raster_order(h: int, w: int, path_id: int = 0) -> ScanOrder:
    """Vanilla four-direction scans.

    0: row-major from the top-left; 1: its reversal (from the bottom-right);
    2: column-major from the bottom-left, each column walked upward;
    3: the reversal of 2 (from the top-right).
    """
    if path_id not in RASTER_PATHS:
        raise ValueError(f"raster path_id must be in 0..3, got {path_id}")
    idx = np.arange(h * w).reshape(h, w)
    if path_id in (0, 1):
        perm = idx.reshape(-1)
    else:
        perm = idx[::-1, :].T.reshape(-1)
    if path_id in (1, 3):
        perm = perm[::-1]
    return ScanOrder(h, w, np.ascontiguousarray(perm), "raster", path_id)


def make_order(kind: str, h: int, w: int, path_id: int = 0, window: int = 4, mirrored: bool = False) -> ScanOrder:
    if kind == "cfds":
        return cfds_order(h, w, path_id, mirrored)
    if kind == "local":
        return local_order(h, w, window)
    if kind == "raster":
        return raster_order(h, w, path_id)
    raise ValueError(f"unknown scan kind {kind!r}; expected one of {KINDS}")


def serialize(x, order: ScanOrder) -> np.ndarray:
    """(B, C, H, W) -> (B, C, H*W) with ``seq[..., t] = x.flat[..., perm[t]]``."""
    x = np.asarray(x)
    H, W = x.shape[-2:]
    if H * W != order.length or (H, W) != (order.h, order.w):
        raise ValueError(f"grid {H}x{W} does not match order {order.h}x{order.w}")
    return np.ascontiguousarray(x.reshape(*x.shape[:-2], H * W)[..., order.perm])


def deserialize(seq, order: ScanOrder) -> np.ndarray:
    seq = np.asarray(seq)
    if seq.shape[-1] != order.length:
        raise ValueError(f"sequence length {seq.shape[-1]} != {order.length}")
    flat = np.empty_like(seq)
    flat[..., order.perm] = seq
    return flat.reshape(*seq.shape[:-1], order.h, order.w)
