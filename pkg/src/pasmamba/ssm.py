"""Diagonal selective state-space scan.

The continuous system ``h' = A h + B x, y = C h`` with diagonal negative
``A`` is discretized by zero-order hold and run as the recurrence
``h_t = a_bar_t * h_{t-1} + b_bar_t * x_t``, ``y_t = <c_t, h_t>``, ``h_0 = 0``.
The time loop itself runs in the active kernel backend (see
:mod:`pasmamba._backend`).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _backend


def softplus(z):
    return np.logaddexp(0.0, z)


def inverse_softplus(y: float) -> float:
    return math.log(math.expm1(y))


def discretize(a, b, delta):
    """Zero-order-hold discretization for a diagonal state matrix.

    Returns ``(exp(delta * a), (exp(delta * a) - 1) / a * b)`` elementwise.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    delta = np.asarray(delta, dtype=np.float64)
    if np.any(delta <= 0):
        raise ValueError("delta must be > 0")
    if np.any(a == 0):
        raise ValueError("diagonal state entries must be nonzero")
    da = delta * a
    return np.exp(da), np.expm1(da) / a * b


def _lanes(x, a_bar, b_bar, c):
    x = np.asarray(x, dtype=np.float64)
    a_bar, b_bar, c = (np.asarray(v, dtype=np.float64) for v in (a_bar, b_bar, c))
    n = max(v.shape[-1] if v.ndim else 1 for v in (a_bar, b_bar, c))
    full = x.shape + (n,)

    def expand(v):
        try:
            return np.broadcast_to(v, full)
        except ValueError:
            raise ValueError(f"parameter of shape {v.shape} does not broadcast to {full}") from None

    a_bar, b_bar, c = expand(a_bar), expand(b_bar), expand(c)
    bx = b_bar * x[..., None]
    K = int(np.prod(x.shape[:-1], dtype=np.int64))
    L = x.shape[-1]
    flat = lambda v: np.ascontiguousarray(v.reshape(K, L, n))  # noqa: E731
    return flat(a_bar), flat(bx), flat(c), x.shape


def scan_sequential(x, a_bar, b_bar, c) -> np.ndarray:
    """Left-to-right recurrence over the last axis of ``x``.

    ``a_bar``, ``b_bar`` and ``c`` broadcast against ``x.shape + (n,)``:
    scalars, length-``n`` vectors (time-invariant) or per-step ``(..., L, n)``.
    """
    A, BX, Cm, shape = _lanes(x, a_bar, b_bar, c)
    return _backend.scan_lanes(A, BX, Cm).reshape(shape)


def _combine(a1, b1, a2, b2):
    """Compose step (a1, b1) followed by (a2, b2)."""
    return a2 * a1, a2 * b1 + b2


def scan_parallel(x, a_bar, b_bar, c) -> np.ndarray:
    """Same result as :func:`scan_sequential` via a Blelloch (work-efficient) scan.

    Elements are the affine maps ``h -> a_bar_t * h + b_bar_t * x_t``; the
    up-sweep/down-sweep tree is fixed by the padded length, so the result is
    deterministic.
    """
    A, BX, Cm, shape = _lanes(x, a_bar, b_bar, c)
    K, L, n = A.shape
    size = 1 << max(0, (L - 1).bit_length())
    a = np.ones((K, size, n))
    b = np.zeros((K, size, n))
    a[:, :L], b[:, :L] = A, BX
    # up-sweep: node r accumulates the segment ending at r
    step = 1
    while step < size:
        r = np.arange(2 * step - 1, size, 2 * step)
        l = r - step
        a[:, r], b[:, r] = _combine(a[:, l], b[:, l], a[:, r], b[:, r])
        step *= 2
    # down-sweep to exclusive prefixes
    a[:, size - 1], b[:, size - 1] = 1.0, 0.0
    step = size // 2
    while step >= 1:
        r = np.arange(2 * step - 1, size, 2 * step)
        l = r - step
        la, lb = a[:, l].copy(), b[:, l].copy()
        a[:, l], b[:, l] = a[:, r], b[:, r]
        a[:, r], b[:, r] = _combine(a[:, r], b[:, r], la, lb)
        step //= 2
    # inclusive state: apply element t after its exclusive prefix (h_0 = 0)
    h = A * b[:, :L] + BX
    # reduce over the state axis in index order, as the sequential kernels do
    y = np.zeros((K, L))
    for j in range(n):
        y += Cm[..., j] * h[..., j]
    return y.reshape(shape)


@dataclass
class SsmParams:
    """Selective SSM parameters for ``d`` input channels and state size ``n``.

    ``b_proj`` and ``c_proj`` are (n, d), ``delta_proj`` is (d,). Each channel
    runs its own recurrence; the per-step ``delta``, ``B`` and ``C`` are
    computed from all channels at that step and shared across channels.
    """

    a: np.ndarray
    b_proj: np.ndarray
    c_proj: np.ndarray
    delta_proj: np.ndarray
    delta_bias: float
    skip: float = 1.0

    def __post_init__(self):
        self.a = np.asarray(self.a, dtype=np.float64).reshape(-1)
        self.b_proj = np.asarray(self.b_proj, dtype=np.float64)
        self.c_proj = np.asarray(self.c_proj, dtype=np.float64)
        self.delta_proj = np.asarray(self.delta_proj, dtype=np.float64).reshape(-1)
        if np.any(self.a >= 0):
            raise ValueError("state entries a must be strictly negative")
        n, d = self.n, self.d
        if self.b_proj.shape != (n, d) or self.c_proj.shape != (n, d):
            raise ValueError(f"b_proj/c_proj must be ({n}, {d})")

    @property
    def n(self) -> int:
        return self.a.size

    @property
    def d(self) -> int:
        return self.delta_proj.size

    @property
    def n_params(self) -> int:
        return self.a.size + self.b_proj.size + self.c_proj.size + self.delta_proj.size + 2

    def named(self, prefix=""):
        return {
            prefix + "a": self.a,
            prefix + "b_proj": self.b_proj,
            prefix + "c_proj": self.c_proj,
            prefix + "delta_proj": self.delta_proj,
            prefix + "delta_bias": np.array([self.delta_bias]),
            prefix + "skip": np.array([self.skip]),
        }


def init_ssm_params(d: int, n: int, rng: np.random.Generator) -> SsmParams:
    bound = 1.0 / math.sqrt(d)
    return SsmParams(
        a=-(np.arange(n) + 1.0),
        b_proj=rng.uniform(-bound, bound, size=(n, d)),
        c_proj=rng.uniform(-bound, bound, size=(n, d)),
        delta_proj=rng.uniform(-bound, bound, size=d),
        delta_bias=inverse_softplus(0.1),
        skip=1.0,
    )


def selective_inputs(seq, params: SsmParams):
    """Per-step ``(delta, a_bar, b_bar, c)`` for a (B, d, L) sequence."""
    seq = np.asarray(seq, dtype=np.float64)
    delta = softplus(np.einsum("d,bdl->bl", params.delta_proj, seq) + params.delta_bias)
    # softplus underflows to 0 for large negative arguments; delta must stay > 0
    delta = np.maximum(delta, np.finfo(np.float64).tiny)
    bt = np.einsum("nd,bdl->bln", params.b_proj, seq)
    ct = np.einsum("nd,bdl->bln", params.c_proj, seq)
    a_bar, b_bar = discretize(params.a, bt, delta[..., None])
    return delta, a_bar, b_bar, ct


def selective_ssm(seq, params: SsmParams, method: str = "kernel") -> np.ndarray:
    """Run the selective scan over a (B, d, L) sequence.

    ``method="kernel"`` uses the backend recurrence; ``"parallel"`` the
    Blelloch scan.
    """
    seq = np.ascontiguousarray(seq, dtype=np.float64)
    if seq.ndim != 3 or seq.shape[1] != params.d:
        raise ValueError(f"expected (B, {params.d}, L) sequence, got {seq.shape}")
    _, a_bar, b_bar, ct = selective_inputs(seq, params)
    if method == "kernel":
        y = _backend.selective_scan(
            seq, np.ascontiguousarray(a_bar), np.ascontiguousarray(b_bar), np.ascontiguousarray(ct)
        )
    elif method == "parallel":
        y = scan_parallel(seq, a_bar[:, None], b_bar[:, None], ct[:, None])
    else:
        raise ValueError(f"unknown method {method!r}")
    return y + params.skip * seq
