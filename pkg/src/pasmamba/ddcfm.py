"""Dual-domain complementary fusion.

Each branch gets per-channel importance weights (the scale of an instance
norm). The ``k`` least important channels of a branch, with
``k = max(min_gated, floor(fraction * C))``, are multiplied element-wise by
the same channels of the other branch; the two enhanced branches are
concatenated and fused back to ``C`` channels by a 1x1 convolution.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .numerics import ConvSpec, ShapeError, as_tensor, conv2d, instance_norm


@dataclass(frozen=True)
class GateConfig:
    fraction: float = 0.1
    use_abs: bool = False
    min_gated: int = 1
    # enhance with instance-normalized features instead of raw ones
    normalized: bool = False

    def __post_init__(self):
        if not 0.0 <= self.fraction < 1.0:
            raise ValueError("gate fraction must lie in [0, 1)")
        if self.min_gated < 0:
            raise ValueError("min_gated must be >= 0")

    def count(self, channels: int) -> int:
        return min(channels, max(self.min_gated, math.floor(self.fraction * channels)))


@dataclass(frozen=True)
class ChannelImportance:
    omega: np.ndarray
    threshold: float
    gated: tuple


def channel_importance(omega, cfg: GateConfig = GateConfig()) -> ChannelImportance:
    """Gated channel set: the ``k`` smallest weights, lower index first on ties."""
    omega = np.asarray(omega, dtype=np.float64).reshape(-1)
    key = np.abs(omega) if cfg.use_abs else omega
    k = cfg.count(omega.size)
    order = np.argsort(key, kind="stable")
    gated = tuple(sorted(int(i) for i in order[:k]))
    threshold = float(key[order[k - 1]]) if k else -math.inf
    return ChannelImportance(omega, threshold, gated)


def importance_threshold(omega, cfg: GateConfig = GateConfig()) -> float:
    omega = np.asarray(omega).reshape(-1)
    if omega.size < 2:
        raise ValueError("need at least two channels")
    return channel_importance(omega, cfg).threshold


def cross_enhance(f_a, f_b, omega_a, cfg: GateConfig = GateConfig()) -> np.ndarray:
    """Multiply the gated channels of ``f_a`` by ``f_b``; other channels pass through."""
    f_a = as_tensor(f_a, ndim=4)
    f_b = as_tensor(f_b, ndim=4)
    if f_a.shape != f_b.shape:
        raise ShapeError(f"branch shapes differ: {f_a.shape} vs {f_b.shape}")
    omega_a = np.asarray(omega_a).reshape(-1)
    if omega_a.size != f_a.shape[1]:
        raise ShapeError(f"omega has {omega_a.size} entries for {f_a.shape[1]} channels")
    out = f_a.copy()
    gated = list(channel_importance(omega_a, cfg).gated)
    if gated:
        out[:, gated] = f_a[:, gated] * f_b[:, gated]
    return out


@dataclass
class DdcfmState:
    """Instance-norm affine parameters for both branches plus the 1x1 fusion conv (2C -> C)."""

    omega_a: np.ndarray
    gamma_a: np.ndarray
    omega_b: np.ndarray
    gamma_b: np.ndarray
    fusion: ConvSpec
    eps: float = 1e-5

    @property
    def channels(self) -> int:
        return self.omega_a.size

    @property
    def n_params(self) -> int:
        return 4 * self.channels + self.fusion.n_params

    def mirrored(self) -> "DdcfmState":
        """The same module with the branch roles exchanged."""
        C = self.channels
        w = self.fusion.weights
        swapped = np.concatenate([w[:, C:], w[:, :C]], axis=1)
        return DdcfmState(
            self.omega_b, self.gamma_b, self.omega_a, self.gamma_a,
            ConvSpec(swapped, self.fusion.bias.copy()), self.eps,
        )

    def named(self, prefix=""):
        return {
            prefix + "omega_a": self.omega_a,
            prefix + "gamma_a": self.gamma_a,
            prefix + "omega_b": self.omega_b,
            prefix + "gamma_b": self.gamma_b,
            prefix + "fusion.weight": self.fusion.weights,
            prefix + "fusion.bias": self.fusion.bias,
        }


def init_ddcfm(channels: int, rng: np.random.Generator) -> DdcfmState:
    bound = 1.0 / math.sqrt(2 * channels)
    return DdcfmState(
        omega_a=rng.uniform(0.5, 1.5, channels),
        gamma_a=np.zeros(channels),
        omega_b=rng.uniform(0.5, 1.5, channels),
        gamma_b=np.zeros(channels),
        fusion=ConvSpec(
            rng.uniform(-bound, bound, (channels, 2 * channels, 1, 1)),
            rng.uniform(-bound, bound, channels),
        ),
    )


def identity_ddcfm(channels: int) -> DdcfmState:
    """Fusion that returns the (enhanced) first branch unchanged."""
    w = np.zeros((channels, 2 * channels, 1, 1))
    w[np.arange(channels), np.arange(channels), 0, 0] = 1.0
    ones, zeros = np.ones(channels), np.zeros(channels)
    return DdcfmState(ones, zeros, ones.copy(), zeros.copy(), ConvSpec(w, np.zeros(channels)))


def enhanced_branches(f_a, f_b, state: DdcfmState, cfg: GateConfig = GateConfig()):
    f_a = as_tensor(f_a, ndim=4)
    f_b = as_tensor(f_b, ndim=4)
    if f_a.shape != f_b.shape:
        raise ShapeError(f"branch shapes differ: {f_a.shape} vs {f_b.shape}")
    if f_a.shape[1] != state.channels:
        raise ShapeError(f"state has {state.channels} channels, input has {f_a.shape[1]}")
    if cfg.normalized:
        src_a = instance_norm(f_a, state.omega_a, state.gamma_a, state.eps)
        src_b = instance_norm(f_b, state.omega_b, state.gamma_b, state.eps)
    else:
        src_a, src_b = f_a, f_b
    enh_a = cross_enhance(src_a, src_b, state.omega_a, cfg)
    enh_b = cross_enhance(src_b, src_a, state.omega_b, cfg)
    return enh_a, enh_b


def ddcfm_fuse(f_a, f_b, state: DdcfmState, cfg: GateConfig = GateConfig()) -> np.ndarray:
    enh_a, enh_b = enhanced_branches(f_a, f_b, state, cfg)
    return conv2d(np.concatenate([enh_a, enh_b], axis=1), state.fusion)
