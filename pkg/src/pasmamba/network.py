"""Forward-only assembly of the dual-branch reconstruction network.

Pipeline for a (B, 1, H, W) input image::

    F_s = shallow conv(img)
    image branch:      RMG groups over windowed (local) scans of F_s
    frequency branch:  centered DFT per channel -> amplitude / phase
                       -> RMG groups over circular scans (separate parameters)
                       -> amplitude<->phase fusion -> recompose -> inverse DFT
    F_d = image<->frequency fusion
    out = transposed-conv head(concat(F_s, F_d)) + img
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from functools import lru_cache

import numpy as np

from ._parallel import ordered_map
from .ddcfm import DdcfmState, GateConfig, ddcfm_fuse, init_ddcfm
from .fourier import (
    AmpPhase,
    decompose,
    dft2_centered,
    hermitian_part,
    idft2_centered,
    idft2_complex,
    recompose,
    wrap_phase,
)
from .numerics import ConvSpec, ShapeError, as_tensor, channel_layer_norm, conv2d, conv_transpose2d
from .scan_orders import ScanOrder, cfds_order, deserialize, local_order, raster_order, serialize
from .ssm import SsmParams, init_ssm_params, selective_ssm, softplus


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class NetConfig:
    channels: int = 8
    rmg_count: int = 1
    blocks_per_rmg: int = 2
    ssm_state: int = 8
    local_window: int = 4
    cfds_paths: int = 4
    gate: GateConfig = field(default_factory=GateConfig)
    height: int = 32
    width: int = 32
    image_scan: str = "local"
    freq_scan: str = "cfds"
    shallow_kernel: int = 3
    head_kernel: int = 3
    amp_activation: str = "relu"

    def validate(self):
        errors = []
        if self.channels < 1:
            errors.append("channels: must be >= 1")
        if self.rmg_count < 0 or self.blocks_per_rmg < 0:
            errors.append("rmg_count/blocks_per_rmg: must be >= 0")
        if self.ssm_state < 1:
            errors.append("ssm_state: must be >= 1")
        if self.height % 2 or self.width % 2 or self.height < 2 or self.width < 2:
            errors.append(f"height/width: must be even and >= 2, got {self.height}x{self.width}")
        if self.local_window < 1:
            errors.append(f"local_window: must be >= 1, got {self.local_window}")
        if self.cfds_paths not in (1, 4, 8):
            errors.append(f"cfds_paths: must be 1, 4 or 8, got {self.cfds_paths}")
        if self.image_scan not in ("local", "raster"):
            errors.append(f"image_scan: must be 'local' or 'raster', got {self.image_scan!r}")
        if self.freq_scan not in ("cfds", "raster"):
            errors.append(f"freq_scan: must be 'cfds' or 'raster', got {self.freq_scan!r}")
        for name in ("shallow_kernel", "head_kernel"):
            k = getattr(self, name)
            if k < 1 or k % 2 == 0:
                errors.append(f"{name}: must be odd and >= 1, got {k}")
        if self.amp_activation not in AMP_ACTIVATIONS:
            errors.append(f"amp_activation: must be one of {sorted(AMP_ACTIVATIONS)}")
        if errors:
            raise ConfigError("invalid network config: " + "; ".join(errors))
        return self


AMP_ACTIVATIONS = {
    "relu": lambda a: np.maximum(a, 0.0),
    "softplus": softplus,
    "abs": np.abs,
}


@lru_cache(maxsize=64)
def _orders(kind, h, w, paths, window):
    if kind == "local":
        return (local_order(h, w, window),)
    if kind == "cfds":
        out = [cfds_order(h, w, p) for p in range(min(paths, 4))]
        if paths == 8:
            out += [cfds_order(h, w, p, mirrored=True) for p in range(4)]
        return tuple(out)
    if kind == "raster":
        return tuple(raster_order(h, w, p) for p in range(min(paths, 4)))
    raise ValueError(kind)


def image_orders(cfg: NetConfig):
    return _orders(cfg.image_scan, cfg.height, cfg.width, 1, cfg.local_window)


def frequency_orders(cfg: NetConfig):
    return _orders(cfg.freq_scan, cfg.height, cfg.width, cfg.cfds_paths, cfg.local_window)


def linear(x, weight, bias):
    """Per-pixel channel mixing: (B, C, H, W) -> (B, O, H, W)."""
    return np.einsum("oc,bchw->bohw", weight, x) + bias[None, :, None, None]


@dataclass
class MambaBlock:
    """Pre-norm residual block: ``z + out(scan(in(norm(z))))``."""

    norm_weight: np.ndarray
    norm_bias: np.ndarray
    in_weight: np.ndarray
    in_bias: np.ndarray
    ssm: SsmParams
    out_weight: np.ndarray
    out_bias: np.ndarray

    def named(self, prefix):
        d = {
            prefix + "norm.weight": self.norm_weight,
            prefix + "norm.bias": self.norm_bias,
            prefix + "in.weight": self.in_weight,
            prefix + "in.bias": self.in_bias,
            prefix + "out.weight": self.out_weight,
            prefix + "out.bias": self.out_bias,
        }
        d.update(self.ssm.named(prefix + "ssm."))
        return d


@dataclass
class RmgBlock:
    blocks: list
    conv: ConvSpec
    residual_scale: float = 1.0

    def named(self, prefix):
        d = {}
        for i, blk in enumerate(self.blocks):
            d.update(blk.named(f"{prefix}block{i}."))
        d[prefix + "conv.weight"] = self.conv.weights
        d[prefix + "conv.bias"] = self.conv.bias
        d[prefix + "residual_scale"] = np.array([self.residual_scale])
        return d


def scan_paths(u, params: SsmParams, orders) -> np.ndarray:
    """Average of serialize -> selective scan -> deserialize over ``orders``."""

    def one(order: ScanOrder):
        return deserialize(selective_ssm(serialize(u, order), params), order)

    results = ordered_map(one, orders)
    acc = results[0].copy()
    for r in results[1:]:
        acc += r
    return acc / len(results)


def mamba_block_forward(z, blk: MambaBlock, orders) -> np.ndarray:
    u = linear(channel_layer_norm(z, blk.norm_weight, blk.norm_bias), blk.in_weight, blk.in_bias)
    return z + linear(scan_paths(u, blk.ssm, orders), blk.out_weight, blk.out_bias)


def rmg_forward(x, block: RmgBlock, orders) -> np.ndarray:
    x = as_tensor(x, ndim=4)
    y = x
    for blk in block.blocks:
        y = mamba_block_forward(y, blk, orders)
    return block.residual_scale * x + conv2d(y, block.conv)


def _group_forward(x, group, orders):
    for rmg in group:
        x = rmg_forward(x, rmg, orders)
    return x


@dataclass
class NetworkState:
    cfg: NetConfig
    shallow: ConvSpec
    ife: list
    afe: list
    pfe: list
    ddcfm_amp: DdcfmState
    ddcfm_pha: DdcfmState
    ddcfm_if: DdcfmState
    head: ConvSpec

    def named_parameters(self) -> dict:
        d = {"shallow.weight": self.shallow.weights, "shallow.bias": self.shallow.bias}
        for name in ("ife", "afe", "pfe"):
            for i, rmg in enumerate(getattr(self, name)):
                d.update(rmg.named(f"{name}.{i}."))
        d.update(self.ddcfm_amp.named("ddcfm_amp."))
        d.update(self.ddcfm_pha.named("ddcfm_pha."))
        d.update(self.ddcfm_if.named("ddcfm_if."))
        d["head.weight"] = self.head.weights
        d["head.bias"] = self.head.bias
        return d

    @property
    def n_params(self) -> int:
        return sum(v.size for v in self.named_parameters().values())


def _uniform(rng, fan_in, shape):
    bound = 1.0 / math.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


def _init_rmg(cfg: NetConfig, rng) -> RmgBlock:
    C = cfg.channels
    blocks = []
    for _ in range(cfg.blocks_per_rmg):
        blocks.append(
            MambaBlock(
                np.ones(C),
                np.zeros(C),
                _uniform(rng, C, (C, C)),
                _uniform(rng, C, C),
                init_ssm_params(C, cfg.ssm_state, rng),
                _uniform(rng, C, (C, C)),
                _uniform(rng, C, C),
            )
        )
    conv = ConvSpec(_uniform(rng, 9 * C, (C, C, 3, 3)), _uniform(rng, 9 * C, C), padding=1)
    return RmgBlock(blocks, conv, 1.0)


def init_network(cfg: NetConfig, seed: int = 0) -> NetworkState:
    """Deterministic random parameters for ``cfg``."""
    cfg.validate()
    rng = np.random.default_rng(seed)
    C, ks, kh = cfg.channels, cfg.shallow_kernel, cfg.head_kernel
    shallow = ConvSpec(_uniform(rng, ks * ks, (C, 1, ks, ks)), _uniform(rng, ks * ks, C), padding=ks // 2)
    ife = [_init_rmg(cfg, rng) for _ in range(cfg.rmg_count)]
    afe = [_init_rmg(cfg, rng) for _ in range(cfg.rmg_count)]
    pfe = [_init_rmg(cfg, rng) for _ in range(cfg.rmg_count)]
    ddcfm_amp, ddcfm_pha, ddcfm_if = (init_ddcfm(C, rng) for _ in range(3))
    head = ConvSpec(
        _uniform(rng, 2 * C * kh * kh, (2 * C, 1, kh, kh)),
        _uniform(rng, 2 * C * kh * kh, 1),
        padding=kh // 2,
        transposed=True,
    )
    return NetworkState(cfg, shallow, ife, afe, pfe, ddcfm_amp, ddcfm_pha, ddcfm_if, head)


def _take(d, key, shape=None):
    try:
        v = np.asarray(d[key], dtype=np.float64)
    except KeyError:
        raise ConfigError(f"missing parameter {key!r}") from None
    if shape is not None and v.shape != tuple(shape):
        raise ShapeError(f"parameter {key!r} has shape {v.shape}, expected {tuple(shape)}")
    return v.copy()


def _ssm_from(d, p, C, n):
    return SsmParams(
        _take(d, p + "a", (n,)),
        _take(d, p + "b_proj", (n, C)),
        _take(d, p + "c_proj", (n, C)),
        _take(d, p + "delta_proj", (C,)),
        float(_take(d, p + "delta_bias", (1,))[0]),
        float(_take(d, p + "skip", (1,))[0]),
    )


def _rmg_from(d, p, cfg):
    C, n = cfg.channels, cfg.ssm_state
    blocks = []
    for i in range(cfg.blocks_per_rmg):
        b = f"{p}block{i}."
        blocks.append(
            MambaBlock(
                _take(d, b + "norm.weight", (C,)),
                _take(d, b + "norm.bias", (C,)),
                _take(d, b + "in.weight", (C, C)),
                _take(d, b + "in.bias", (C,)),
                _ssm_from(d, b + "ssm.", C, n),
                _take(d, b + "out.weight", (C, C)),
                _take(d, b + "out.bias", (C,)),
            )
        )
    conv = ConvSpec(_take(d, p + "conv.weight", (C, C, 3, 3)), _take(d, p + "conv.bias", (C,)), padding=1)
    return RmgBlock(blocks, conv, float(_take(d, p + "residual_scale", (1,))[0]))


def _ddcfm_from(d, p, C):
    return DdcfmState(
        _take(d, p + "omega_a", (C,)),
        _take(d, p + "gamma_a", (C,)),
        _take(d, p + "omega_b", (C,)),
        _take(d, p + "gamma_b", (C,)),
        ConvSpec(_take(d, p + "fusion.weight", (C, 2 * C, 1, 1)), _take(d, p + "fusion.bias", (C,))),
    )


def state_from_parameters(cfg: NetConfig, params: dict) -> NetworkState:
    """Rebuild a :class:`NetworkState` from :meth:`NetworkState.named_parameters` output."""
    cfg.validate()
    C, ks, kh = cfg.channels, cfg.shallow_kernel, cfg.head_kernel
    groups = {
        name: [_rmg_from(params, f"{name}.{i}.", cfg) for i in range(cfg.rmg_count)]
        for name in ("ife", "afe", "pfe")
    }
    return NetworkState(
        cfg,
        ConvSpec(_take(params, "shallow.weight", (C, 1, ks, ks)), _take(params, "shallow.bias", (C,)), padding=ks // 2),
        groups["ife"],
        groups["afe"],
        groups["pfe"],
        _ddcfm_from(params, "ddcfm_amp.", C),
        _ddcfm_from(params, "ddcfm_pha.", C),
        _ddcfm_from(params, "ddcfm_if.", C),
        ConvSpec(
            _take(params, "head.weight", (2 * C, 1, kh, kh)),
            _take(params, "head.bias", (1,)),
            padding=kh // 2,
            transposed=True,
        ),
    )


# kept as-is when building the residual skeleton
_RESIDUAL_KEYS = ("residual_scale", "ssm.a", "ssm.delta_bias")


def residual_skeleton(state: NetworkState) -> NetworkState:
    """Copy of ``state`` with every non-residual weight set to zero.

    SSM state entries and delta biases are kept so the parameters stay
    valid; with zero projections they have no effect.
    """
    params = {
        k: (v.copy() if k.endswith(_RESIDUAL_KEYS) else np.zeros_like(v))
        for k, v in state.named_parameters().items()
    }
    return state_from_parameters(state.cfg, params)


def frequency_branch(f_s, state: NetworkState, return_residue: bool = False):
    """Amplitude/phase processing of the channel-wise spectra of ``f_s``.

    The recombined spectrum is projected onto its Hermitian part, so the
    inverse transform is real by construction; the residual imaginary part
    is checked against the package tolerance and optionally returned.
    """
    cfg = state.cfg
    f_s = as_tensor(f_s, ndim=4)
    if f_s.shape[2] % 2 or f_s.shape[3] % 2:
        raise ShapeError("frequency branch needs even H and W")
    orders = frequency_orders(cfg)
    ap = decompose(dft2_centered(f_s))
    amp = _group_forward(ap.amplitude, state.afe, orders)
    pha = _group_forward(ap.phase, state.pfe, orders)
    amp_f = ddcfm_fuse(amp, pha, state.ddcfm_amp, cfg.gate)
    pha_f = ddcfm_fuse(pha, amp, state.ddcfm_pha, cfg.gate)
    spec = recompose(AmpPhase(AMP_ACTIVATIONS[cfg.amp_activation](amp_f), wrap_phase(pha_f)))
    spec = hermitian_part(spec)
    residue = float(np.max(np.abs(idft2_complex(spec).imag)))
    out = idft2_centered(spec)
    return (out, residue) if return_residue else out


def image_branch(f_s, state: NetworkState) -> np.ndarray:
    return _group_forward(as_tensor(f_s, ndim=4), state.ife, image_orders(state.cfg))


def forward(img, state: NetworkState, return_features: bool = False):
    """Reconstruct a (B, 1, H, W) batch."""
    cfg = state.cfg
    img = as_tensor(img, ndim=4)
    if img.shape[1] != 1 or img.shape[2:] != (cfg.height, cfg.width):
        raise ShapeError(
            f"expected (B, 1, {cfg.height}, {cfg.width}) input, got {img.shape}"
        )
    f_s = conv2d(img, state.shallow)
    f_img = image_branch(f_s, state)
    f_freq = frequency_branch(f_s, state)
    f_d = ddcfm_fuse(f_img, f_freq, state.ddcfm_if, cfg.gate)
    out = conv_transpose2d(np.concatenate([f_s, f_d], axis=1), state.head) + img
    if return_features:
        return out, {"shallow": f_s, "image": f_img, "frequency": f_freq, "fused": f_d}
    return out


def config_fields():
    return [f.name for f in fields(NetConfig)]


def with_overrides(cfg: NetConfig, **kw) -> NetConfig:
    return replace(cfg, **kw).validate()
