"""MRI reconstruction building blocks: k-space simulation, scan orders, selective scans, fusion and losses."""
from ._backend import BACKEND
from .ddcfm import DdcfmState, GateConfig, channel_importance, cross_enhance, ddcfm_fuse, init_ddcfm
from .fourier import (
    AmpPhase,
    ConjugateSymmetryError,
    decompose,
    dft2_centered,
    hermitian_part,
    idft2_centered,
    recompose,
    wrap_phase,
)
from .kspace import NoiseSpec, SamplingMask, make_mask, make_phantom, swap_spectrum, undersample, zero_filled
from .losses import LossBreakdown, hybrid_loss, hybrid_loss_grad, psnr, ssim, toy_optimize
from .network import ConfigError, NetConfig, NetworkState, forward, init_network, residual_skeleton
from .numerics import ConvSpec, ShapeError, conv2d, conv_transpose2d, instance_norm
from .scan_orders import ScanOrder, cfds_order, deserialize, local_order, make_order, raster_order, serialize
from .ssm import SsmParams, discretize, init_ssm_params, scan_parallel, scan_sequential, selective_ssm

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "AmpPhase",
    "ConfigError",
    "ConjugateSymmetryError",
    "ConvSpec",
    "DdcfmState",
    "GateConfig",
    "LossBreakdown",
    "NetConfig",
    "NetworkState",
    "NoiseSpec",
    "SamplingMask",
    "ScanOrder",
    "ShapeError",
    "SsmParams",
    "cfds_order",
    "channel_importance",
    "conv2d",
    "conv_transpose2d",
    "cross_enhance",
    "ddcfm_fuse",
    "decompose",
    "deserialize",
    "dft2_centered",
    "discretize",
    "forward",
    "hermitian_part",
    "hybrid_loss",
    "hybrid_loss_grad",
    "idft2_centered",
    "init_ddcfm",
    "init_network",
    "init_ssm_params",
    "instance_norm",
    "local_order",
    "make_mask",
    "make_order",
    "make_phantom",
    "psnr",
    "raster_order",
    "recompose",
    "residual_skeleton",
    "scan_parallel",
    "scan_sequential",
    "selective_ssm",
    "serialize",
    "ssim",
    "swap_spectrum",
    "toy_optimize",
    "undersample",
    "wrap_phase",
    "zero_filled",
]
