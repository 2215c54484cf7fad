"""Dense forward-only neural primitives on float64 NCHW arrays.

Tensors are plain ``numpy.ndarray`` objects of dtype float64 in
(batch, channels, height, width) layout. Convolutions use the
cross-correlation convention (no kernel flip) and zero padding only.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class ShapeError(ValueError):
    """Raised when tensor shapes are inconsistent with an operation."""


def as_tensor(x, ndim=None) -> np.ndarray:
    arr = np.ascontiguousarray(x, dtype=np.float64)
    if ndim is not None and arr.ndim != ndim:
        raise ShapeError(f"expected a {ndim}-D tensor, got shape {arr.shape}")
    if any(d < 1 for d in arr.shape):
        raise ShapeError(f"all dimensions must be >= 1, got {arr.shape}")
    return arr


@dataclass
class ConvSpec:
    """Weights and geometry of a 2D (transposed) convolution.

    For a regular convolution ``weights`` has shape (out, in, kh, kw). With
    ``transposed=True`` the layout is (in, out, kh, kw), so a transposed spec
    sharing the weight array of a regular one is its exact adjoint.
    """

    weights: np.ndarray
    bias: np.ndarray | None = None
    stride: int = 1
    padding: int = 0
    transposed: bool = False

    def __post_init__(self):
        self.weights = as_tensor(self.weights, ndim=4)
        if self.bias is None:
            self.bias = np.zeros(self.out_channels)
        self.bias = np.ascontiguousarray(self.bias, dtype=np.float64).reshape(-1)
        if self.bias.shape != (self.out_channels,):
            raise ShapeError(
                f"bias length {self.bias.shape[0]} != out_channels {self.out_channels}"
            )
        if self.stride < 1 or self.padding < 0:
            raise ValueError("stride must be >= 1 and padding >= 0")

    @property
    def in_channels(self) -> int:
        return self.weights.shape[1 if not self.transposed else 0]

    @property
    def out_channels(self) -> int:
        return self.weights.shape[0 if not self.transposed else 1]

    @property
    def kernel(self) -> tuple[int, int]:
        return self.weights.shape[2], self.weights.shape[3]

    def adjoint(self) -> "ConvSpec":
        """The bias-free spec whose forward map is the adjoint of this one."""
        return ConvSpec(
            self.weights, None, self.stride, self.padding, transposed=not self.transposed
        )

    @property
    def n_params(self) -> int:
        return self.weights.size + self.bias.size


def _check_channels(x: np.ndarray, spec: ConvSpec):
    if x.shape[1] != spec.in_channels:
        raise ShapeError(
            f"channel axis (1): input has {x.shape[1]} channels, spec expects {spec.in_channels}"
        )


def conv2d(x, spec: ConvSpec) -> np.ndarray:
    """2D cross-correlation of an NCHW tensor plus per-channel bias."""
    x = as_tensor(x, ndim=4)
    if spec.transposed:
        return conv_transpose2d(x, spec)
    _check_channels(x, spec)
    kh, kw = spec.kernel
    s, p = spec.stride, spec.padding
    H, W = x.shape[2:]
    Ho = (H + 2 * p - kh) // s + 1
    Wo = (W + 2 * p - kw) // s + 1
    if Ho < 1 or Wo < 1:
        raise ShapeError(
            f"spatial axes (2, 3): input {H}x{W} with kernel {kh}x{kw}, "
            f"pad {p}, stride {s} gives empty output"
        )
    xp = np.pad(x, ((0, 0), (0, 0), (p, p), (p, p))) if p else x
    out = np.zeros((x.shape[0], spec.out_channels, Ho, Wo))
    # fixed accumulation order over kernel taps keeps results thread-count independent
    for i in range(kh):
        for j in range(kw):
            patch = xp[:, :, i : i + s * (Ho - 1) + 1 : s, j : j + s * (Wo - 1) + 1 : s]
            out += np.einsum("bchw,oc->bohw", patch, spec.weights[:, :, i, j])
    out += spec.bias[None, :, None, None]
    return out


def conv_transpose2d(x, spec: ConvSpec) -> np.ndarray:
    """Transposed convolution (scatter-add), the adjoint of :func:`conv2d`.

    A regular (non-transposed) ``spec`` is replaced by its bias-free
    :meth:`ConvSpec.adjoint`.
    """
    x = as_tensor(x, ndim=4)
    if not spec.transposed:
        spec = ConvSpec(spec.weights, None, spec.stride, spec.padding, transposed=True)
    _check_channels(x, spec)
    kh, kw = spec.kernel
    s, p = spec.stride, spec.padding
    B, _, H, W = x.shape
    Hf = (H - 1) * s + kh
    Wf = (W - 1) * s + kw
    Ho, Wo = Hf - 2 * p, Wf - 2 * p
    if Ho < 1 or Wo < 1:
        raise ShapeError(
            f"spatial axes (2, 3): input {H}x{W} with kernel {kh}x{kw}, "
            f"pad {p}, stride {s} gives empty output"
        )
    full = np.zeros((B, spec.out_channels, Hf, Wf))
    for i in range(kh):
        for j in range(kw):
            full[:, :, i : i + s * (H - 1) + 1 : s, j : j + s * (W - 1) + 1 : s] += np.einsum(
                "bchw,co->bohw", x, spec.weights[:, :, i, j]
            )
    out = np.ascontiguousarray(full[:, :, p : p + Ho, p : p + Wo])
    out += spec.bias[None, :, None, None]
    return out


def instance_norm(x, weight, offset, eps: float = 1e-5) -> np.ndarray:
    """Per-(batch, channel) plane normalization with affine scale and shift.

    Uses the population (biased) variance of each plane.
    """
    x = as_tensor(x, ndim=4)
    weight = np.asarray(weight, dtype=np.float64).reshape(-1)
    offset = np.asarray(offset, dtype=np.float64).reshape(-1)
    C = x.shape[1]
    if weight.shape != (C,) or offset.shape != (C,):
        raise ShapeError(
            f"channel axis (1): weight/offset lengths {weight.size}/{offset.size} != {C}"
        )
    if not eps > 0:
        raise ValueError("eps must be > 0")
    mu = x.mean(axis=(2, 3), keepdims=True)
    centered = x - mu
    var = (centered * centered).mean(axis=(2, 3), keepdims=True)
    normed = centered / np.sqrt(var + eps)
    return normed * weight[None, :, None, None] + offset[None, :, None, None]


def channel_layer_norm(x, weight, offset, eps: float = 1e-5) -> np.ndarray:
    """Normalize each pixel's channel vector, then apply a per-channel affine map."""
    x = as_tensor(x, ndim=4)
    C = x.shape[1]
    weight = np.asarray(weight, dtype=np.float64).reshape(-1)
    offset = np.asarray(offset, dtype=np.float64).reshape(-1)
    if weight.shape != (C,) or offset.shape != (C,):
        raise ShapeError(
            f"channel axis (1): weight/offset lengths {weight.size}/{offset.size} != {C}"
        )
    mu = x.mean(axis=1, keepdims=True)
    var = ((x - mu) ** 2).mean(axis=1, keepdims=True)
    return (x - mu) / np.sqrt(var + eps) * weight[None, :, None, None] + offset[None, :, None, None]
