"""Acceptance checks shared by ``pasm verify`` and the test suite.

Each ``check_*`` function runs one criterion end to end and returns a
:class:`CheckResult`; a criterion passes only if every sub-check holds and
the wall time stays within its budget.
"""
from __future__ import annotations

import math
import os
import time
from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np

from . import oracles
from .ddcfm import GateConfig, channel_importance, cross_enhance, ddcfm_fuse, init_ddcfm
from .fourier import decompose, dft2_centered, idft2_centered
from .kspace import make_mask, make_phantom, swap_spectrum, undersample
from .losses import ALPHA, BETA, hybrid_loss, hybrid_loss_grad, phase_l1, psnr, ssim, toy_optimize
from .network import NetConfig, forward, frequency_branch, init_network, residual_skeleton
from .scan_orders import chebyshev_radius, cfds_order, deserialize, local_order, raster_order, serialize
from .ssm import discretize, scan_parallel, scan_sequential

# (size, seed) pairs of the phantom suite
PHANTOM_SUITE = tuple((size, seed) for size in (64, 128) for seed in range(5))


@dataclass
class CheckResult:
    number: int
    title: str
    passed: bool
    seconds: float
    budget: float
    details: dict = field(default_factory=dict)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        info = ", ".join(f"{k}={_fmt(v)}" for k, v in self.details.items())
        return f"[{status}] criterion {self.number}: {self.title} ({self.seconds:.2f}s / {self.budget:.0f}s) {info}"


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.3g}"
    return str(v)


def _finish(number, title, budget, t0, ok, details):
    dt = time.perf_counter() - t0
    return CheckResult(number, title, bool(ok) and dt < budget, dt, budget, details)


@contextmanager
def _env(key, value):
    old = os.environ.get(key)
    os.environ[key] = value
    try:
        yield
    finally:
        if old is None:
            os.environ.pop(key, None)
        else:
            os.environ[key] = old


def suite_phantoms():
    for size, seed in PHANTOM_SUITE:
        yield size, seed, make_phantom(size, size, "shepp_logan", seed)


def check_spectrum_swap() -> CheckResult:
    t0 = time.perf_counter()
    wins_psnr = wins_ssim = wins_both = 0
    for size, seed, fs in suite_phantoms():
        us = undersample(fs, make_mask("cartesian", size, size, 4, seed))
        keep_amp = swap_spectrum(fs, us)
        keep_pha = swap_spectrum(us, fs)
        p_ok = psnr(keep_amp, fs) > psnr(keep_pha, fs)
        s_ok = ssim(keep_pha, fs) > ssim(keep_amp, fs)
        wins_psnr += p_ok
        wins_ssim += s_ok
        wins_both += p_ok and s_ok
    n = len(PHANTOM_SUITE)
    details = {"both": f"{wins_both}/{n}", "psnr": f"{wins_psnr}/{n}", "ssim": f"{wins_ssim}/{n}"}
    return _finish(1, "spectrum-swap ordering", 10, t0, wins_both >= 8, details)


def check_fourier(seed: int = 0) -> CheckResult:
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    dft_err = pars_err = trip_err = 0.0
    for i in range(50):
        n = 8 if i < 25 else 16
        x = rng.standard_normal((n, n))
        X = dft2_centered(x)
        dft_err = max(dft_err, float(np.max(np.abs(X - oracles.naive_dft2_centered(x)))))
        e_img = float(np.sum(x * x))
        e_spec = float(np.sum(np.abs(X) ** 2)) / x.size
        pars_err = max(pars_err, abs(e_img - e_spec) / e_img)
        trip_err = max(trip_err, float(np.max(np.abs(idft2_centered(X) - x))))
    ok = dft_err < 1e-9 and pars_err < 1e-8 and trip_err < 1e-9
    details = {"dft_err": dft_err, "parseval_rel": pars_err, "roundtrip_err": trip_err}
    return _finish(2, "fourier correctness", 5, t0, ok, details)


def _local_contained(order, window) -> bool:
    r, c = np.divmod(order.perm, order.w)
    tile = (r // window) * (-(-order.w // window)) + c // window
    # tiles appear as contiguous runs, in increasing order
    return bool(np.all(np.diff(tile) >= 0))


def _roundtrip(order, rng) -> bool:
    x = rng.standard_normal((2, 3, order.h, order.w))
    seq = serialize(x, order)
    ok = np.array_equal(deserialize(seq, order), x)
    ok &= np.array_equal(seq[..., 0], x.reshape(2, 3, -1)[..., order.perm[0]])
    return bool(ok)


def _bijective(order) -> bool:
    return bool(np.array_equal(np.sort(order.perm), np.arange(order.h * order.w)))


def check_scan_orders(seed: int = 0) -> CheckResult:
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    sizes = (4, 6, 8, 16, 32)
    failures, checked = [], 0
    for h in sizes:
        for w in sizes:
            orders = []
            for p in range(4):
                for mirrored in (False, True):
                    o = cfds_order(h, w, p, mirrored)
                    orders.append(o)
                    rad = chebyshev_radius(h, w)[o.perm]
                    if np.any(np.diff(rad) < 0):
                        failures.append(f"cfds {h}x{w} p{p} radius")
                orders.append(raster_order(h, w, p))
            for win in (2, 4):
                o = local_order(h, w, win)
                orders.append(o)
                if not _local_contained(o, win):
                    failures.append(f"local {h}x{w} w{win} containment")
            for o in orders:
                checked += 1
                if not _bijective(o):
                    failures.append(f"{o.kind} {h}x{w} p{o.path_id} bijection")
                if not _roundtrip(o, rng):
                    failures.append(f"{o.kind} {h}x{w} p{o.path_id} roundtrip")
    details = {"orders": checked, "failures": len(failures)}
    if failures:
        details["first"] = failures[0]
    return _finish(3, "scan-order suite", 5, t0, not failures, details)


def _random_scan_case(rng, L):
    lanes = (int(rng.integers(1, 3)), int(rng.integers(1, 4)))
    n = int(rng.integers(1, 5))
    x = rng.standard_normal(lanes + (L,))
    a_bar = rng.uniform(0.0, 1.0, lanes + (L, n))
    b_bar = rng.standard_normal(lanes + (L, n))
    c = rng.standard_normal(lanes + (L, n))
    return x, a_bar, b_bar, c


def check_ssm(seed: int = 0) -> CheckResult:
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    lengths = (1, 2, 7, 64, 4096)
    max_dev, causal = 0.0, True
    for i in range(1000):
        L = lengths[i % len(lengths)]
        x, a_bar, b_bar, c = _random_scan_case(rng, L)
        ys = scan_sequential(x, a_bar, b_bar, c)
        yp = scan_parallel(x, a_bar, b_bar, c)
        max_dev = max(max_dev, float(np.max(np.abs(ys - yp))))
        if L > 1 and i % 10 == 0:
            t = int(rng.integers(1, L))
            x2 = x.copy()
            x2[..., t:] += rng.standard_normal(x2[..., t:].shape)
            for scan, y in ((scan_sequential, ys), (scan_parallel, yp)):
                causal &= np.array_equal(scan(x2, a_bar, b_bar, c)[..., :t], y[..., :t])
    disc_err = 0.0
    for b in (1.0, -2.5, 3.0, 0.125):
        a_bar, b_bar = discretize(-1.0, b, math.log(2.0))
        disc_err = max(disc_err, abs(float(a_bar) - 0.5), abs(float(b_bar) - 0.5 * b))
    ok = max_dev < 1e-10 and disc_err <= 1e-15 and causal
    details = {"max_dev": max_dev, "discretize_err": disc_err, "causal": causal}
    return _finish(4, "ssm kernel", 30, t0, ok, details)


def check_ddcfm(seed: int = 0) -> CheckResult:
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    card_ok = passthrough_ok = True
    for C in range(2, 65):
        omega = rng.uniform(0.5, 1.5, C)
        gated = channel_importance(omega).gated
        card_ok &= len(gated) == max(1, math.floor(0.1 * C))
        f_a, f_b = rng.standard_normal((2, 2, C, 3, 3))
        out = cross_enhance(f_a, f_b, omega)
        keep = [c for c in range(C) if c not in gated]
        passthrough_ok &= np.array_equal(out[:, keep], f_a[:, keep])
    max_rel = 0.0
    for i in range(100):
        C = int(rng.integers(2, 17))
        cfg = GateConfig(
            fraction=float(rng.choice([0.1, 0.25, 0.5])),
            use_abs=bool(i % 3 == 0),
            normalized=bool(i % 2),
        )
        state = init_ddcfm(C, rng)
        if cfg.use_abs:
            state.omega_a = rng.uniform(-1.5, 1.5, C)
        shape = (int(rng.integers(1, 3)), C, int(rng.integers(2, 7)), int(rng.integers(2, 7)))
        f_a, f_b = rng.standard_normal(shape), rng.standard_normal(shape)
        got = ddcfm_fuse(f_a, f_b, state, cfg)
        ref = oracles.ddcfm_interpreter(f_a, f_b, state, cfg)
        max_rel = max(max_rel, float(np.max(np.abs(got - ref)) / max(1.0, np.max(np.abs(ref)))))
    ok = card_ok and passthrough_ok and max_rel < 1e-12
    details = {"cardinality": card_ok, "passthrough": passthrough_ok, "oracle_err": max_rel}
    return _finish(5, "ddcfm gate contract", 5, t0, ok, details)


def random_config(rng) -> NetConfig:
    size = int(rng.choice([8, 12, 16, 24, 32]))
    return NetConfig(
        channels=int(rng.integers(2, 9)),
        rmg_count=int(rng.integers(0, 3)),
        blocks_per_rmg=int(rng.integers(1, 3)),
        ssm_state=int(rng.integers(1, 9)),
        local_window=int(rng.choice([2, 4])),
        cfds_paths=int(rng.choice([1, 4, 8])),
        gate=GateConfig(fraction=float(rng.choice([0.1, 0.25]))),
        height=size,
        width=size,
        image_scan=str(rng.choice(["local", "raster"])),
        freq_scan=str(rng.choice(["cfds", "raster"])),
        amp_activation=str(rng.choice(["relu", "softplus", "abs"])),
    ).validate()


def check_network(seed: int = 0) -> CheckResult:
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    shape_ok = skeleton_ok = determinism_ok = True
    residue = 0.0
    for i in range(20):
        cfg = random_config(rng)
        state = init_network(cfg, seed=i)
        img = rng.uniform(0.0, 1.0, (int(rng.integers(1, 3)), 1, cfg.height, cfg.width))
        with _env("PASM_THREADS", "1"):
            y1 = forward(img, state)
            y2 = forward(img, state)
        with _env("PASM_THREADS", "4"):
            y4 = forward(img, state)
        shape_ok &= y1.shape == img.shape and bool(np.all(np.isfinite(y1)))
        determinism_ok &= np.array_equal(y1, y2) and np.array_equal(y1, y4)
        skeleton_ok &= np.array_equal(forward(img, residual_skeleton(state)), img)
        f_s = rng.standard_normal((1, cfg.channels, cfg.height, cfg.width))
        residue = max(residue, frequency_branch(f_s, state, return_residue=True)[1])
    ok = shape_ok and skeleton_ok and determinism_ok and residue < 1e-6
    details = {
        "shapes": shape_ok,
        "skeleton": skeleton_ok,
        "deterministic": determinism_ok,
        "freq_residue": residue,
    }
    return _finish(6, "network skeleton", 60, t0, ok, details)


def _self_conjugate(h, w):
    """Centered bins that are their own conjugate partner (always real for real images)."""
    keep = np.zeros((h, w), dtype=bool)
    for r in (0, h // 2):
        for c in (0, w // 2):
            keep[r, c] = True
    return keep


def kink_margin(out, gt) -> float:
    """Distance of ``out`` from the nearest non-differentiable point of the hybrid loss."""
    po, pg = decompose(dft2_centered(out)), decompose(dft2_centered(gt))
    d_pha = np.abs(np.angle(np.exp(1j * (po.phase - pg.phase))))
    live = ~_self_conjugate(*out.shape)
    return float(min(
        np.min(np.abs(out - gt)),
        np.min(np.abs(po.amplitude - pg.amplitude)[live]),
        np.min(po.amplitude),
        np.min(d_pha[live]),
        np.min(np.pi - d_pha[live]),
    ))


def random_gradient_pair(rng, size=8, margin=1e-3):
    while True:
        gt = rng.uniform(0.0, 1.0, (size, size))
        out = gt + rng.choice([-1.0, 1.0], gt.shape) * rng.uniform(0.05, 0.3, gt.shape)
        if kink_margin(out, gt) > margin:
            return out, gt


def check_loss_gradient(seed: int = 0) -> CheckResult:
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    max_rel = 0.0
    compose_ok = True
    wrap_err = 0.0
    for _ in range(10):
        out, gt = random_gradient_pair(rng)
        g = hybrid_loss_grad(out, gt)
        fd = oracles.central_difference(lambda v: hybrid_loss(v, gt).total, out, 1e-6)
        max_rel = max(max_rel, float(np.max(np.abs(g - fd) / np.maximum(np.abs(fd), 1e-12))))
        br = hybrid_loss(out, gt)
        compose_ok &= br.total == br.image_l1 + ALPHA * br.phase_l1 + BETA * br.amp_l1
        po, pg = decompose(dft2_centered(out)), decompose(dft2_centered(gt))
        shift = 2 * np.pi * rng.integers(-1, 2, po.phase.shape)
        wrap_err = max(wrap_err, abs(phase_l1(po.phase + shift, pg.phase) - br.phase_l1))
    ok = max_rel < 1e-4 and compose_ok and wrap_err < 1e-12
    details = {"grad_rel_err": max_rel, "composition": compose_ok, "wrap_err": wrap_err}
    return _finish(7, "loss gradient", 10, t0, ok, details)


def toy_problem(size=32, acceleration=2, seed=0):
    gt = make_phantom(size, size, "shepp_logan", seed)
    measured = undersample(gt, make_mask("cartesian", size, size, acceleration, seed))
    return measured, gt


def check_toy_optimization() -> CheckResult:
    t0 = time.perf_counter()
    measured, gt = toy_problem()
    est, trace = toy_optimize(measured, gt, steps=200, lr=0.5)
    first, last = trace[0].total, trace[-1].total
    p0, p1 = psnr(measured, gt), psnr(est, gt)
    ok = last < 0.5 * first and p1 > p0
    details = {"loss_start": first, "loss_end": last, "psnr_zf": p0, "psnr_est": p1}
    return _finish(8, "toy optimization", 60, t0, ok, details)


def check_zf_ordering() -> CheckResult:
    t0 = time.perf_counter()
    wins = 0
    gaps = []
    for size, seed, img in suite_phantoms():
        p_rad = psnr(undersample(img, make_mask("radial", size, size, 2, seed)), img)
        p_cart = psnr(undersample(img, make_mask("cartesian", size, size, 2, seed)), img)
        wins += p_rad > p_cart
        gaps.append(p_rad - p_cart)
    n = len(PHANTOM_SUITE)
    details = {"radial_wins": f"{wins}/{n}", "mean_gap_db": float(np.mean(gaps))}
    return _finish(9, "zero-filled radial vs cartesian", 10, t0, wins >= 8, details)


CHECKS = (
    check_spectrum_swap,
    check_fourier,
    check_scan_orders,
    check_ssm,
    check_ddcfm,
    check_network,
    check_loss_gradient,
    check_toy_optimization,
    check_zf_ordering,
)


def run_all(numbers=None):
    return [fn() for i, fn in enumerate(CHECKS, 1) if numbers is None or i in numbers]
