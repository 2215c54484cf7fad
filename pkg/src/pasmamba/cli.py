"""``pasm`` command line interface.

Exit codes: 0 success, 1 verification failure, 2 usage or configuration error.
Structured results go to stdout as JSON; images are written as PASM-T
tensors and, where useful, 8-bit PGM previews.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import _backend, acceptance, fileio, oracles
from .config import RunConfig, load_config
from .ddcfm import GateConfig, channel_importance, ddcfm_fuse, enhanced_branches, init_ddcfm
from .kspace import PHANTOM_KINDS, NoiseSpec, make_mask, make_phantom, swap_spectrum, undersample
from .losses import hybrid_loss, psnr, ssim, toy_optimize
from .network import ConfigError, forward, init_network, state_from_parameters
from .scan_orders import KINDS, make_order
from .ssm import init_ssm_params, scan_parallel, scan_sequential, selective_ssm

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _size(text: str):
    parts = text.lower().split("x")
    try:
        dims = [int(p) for p in parts]
    except ValueError:
        raise argparse.ArgumentTypeError(f"size must look like HxW or N, got {text!r}") from None
    if len(dims) == 1:
        dims *= 2
    if len(dims) != 2 or min(dims) < 1:
        raise argparse.ArgumentTypeError(f"size must look like HxW or N, got {text!r}")
    return tuple(dims)


def _json_value(v):
    if isinstance(v, float) and math.isinf(v):
        return "inf" if v > 0 else "-inf"
    if isinstance(v, dict):
        return {k: _json_value(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_json_value(x) for x in v]
    if isinstance(v, np.generic):
        return v.item()
    return v


def _emit(obj):
    print(json.dumps(_json_value(obj), indent=2, sort_keys=True))


def _run_config(args) -> RunConfig:
    return load_config(args.config) if getattr(args, "config", None) else RunConfig()


def _maybe_pgm(path, img, lo=0.0, hi=1.0):
    if path:
        fileio.write_pgm(path, img, lo, hi)


# -- subcommands ---------------------------------------------------------------


def cmd_phantom(args):
    h, w = args.size
    img = make_phantom(h, w, args.kind, args.seed)
    fileio.write_tensor(args.out, img)
    _maybe_pgm(args.pgm, img)
    _emit({"out": args.out, "shape": [h, w], "kind": args.kind, "seed": args.seed})


def cmd_gen_mask(args):
    h, w = args.size
    mask = make_mask(args.pattern, h, w, args.accel, args.seed)
    fileio.write_mask(args.out, mask)
    _maybe_pgm(args.pgm, mask.grid.astype(np.float64))
    _emit({"out": args.out, "pattern": args.pattern, "accel": args.accel, "sampled_fraction": mask.sampled_fraction})


def cmd_undersample(args):
    img = fileio.read_image(args.img)
    mask = fileio.read_mask(args.mask)
    out = undersample(img, mask, NoiseSpec(args.sigma, args.noise_seed), output=args.output)
    fileio.write_tensor(args.out, out)
    _maybe_pgm(args.pgm, out)
    _emit({"out": args.out, "psnr": psnr(out, img), "ssim": ssim(out, img) if min(img.shape) >= 11 else None})


def cmd_swap_spectrum(args):
    amp = fileio.read_image(args.amp)
    pha = fileio.read_image(args.phase)
    out = swap_spectrum(amp, pha, clamp=not args.no_clamp)
    fileio.write_tensor(args.out, out)
    _maybe_pgm(args.pgm, out)
    record = {"out": args.out}
    if min(out.shape) >= 11:
        record.update(
            psnr_vs_amp=psnr(out, amp), psnr_vs_phase=psnr(out, pha),
            ssim_vs_amp=ssim(out, amp), ssim_vs_phase=ssim(out, pha),
        )
    _emit(record)


def cmd_scan_order(args):
    h, w = args.size
    order = make_order(args.kind, h, w, args.path, args.window, args.mirrored)
    fileio.write_order(args.out, order)
    if args.pgm:
        position = np.empty(h * w)
        position[order.perm] = np.arange(h * w)
        fileio.write_pgm(args.pgm, position.reshape(h, w), 0.0, max(h * w - 1, 1))
    _emit({"out": args.out, "kind": args.kind, "length": order.length, "head": order.perm[:8].tolist()})


def cmd_ssm_demo(args):
    rng = np.random.default_rng(args.seed)
    dev_oracle = dev_parallel = dev_backend = dev_scan = 0.0
    backends = ["python"] + (["cython"] if _backend.BACKEND == "cython" else [])
    for _ in range(args.cases):
        d, n, L = int(rng.integers(1, 5)), int(rng.integers(1, 5)), int(rng.integers(1, 40))
        params = init_ssm_params(d, n, rng)
        seq = rng.standard_normal((int(rng.integers(1, 3)), d, L))
        y = selective_ssm(seq, params)
        dev_oracle = max(dev_oracle, float(np.max(np.abs(y - oracles.ssm_interpreter(seq, params)))))
        dev_parallel = max(dev_parallel, float(np.max(np.abs(y - selective_ssm(seq, params, "parallel")))))
        x = rng.standard_normal((2, L))
        a_bar, b_bar, c = rng.uniform(0, 1, (L, n)), rng.standard_normal((L, n)), rng.standard_normal((L, n))
        dev_scan = max(dev_scan, float(np.max(np.abs(scan_sequential(x, a_bar, b_bar, c) - scan_parallel(x, a_bar, b_bar, c)))))
        if len(backends) == 2:
            lanes = [_backend.kernels(b)[0] for b in backends]
            A = np.ascontiguousarray(np.broadcast_to(a_bar, (2, L, n)))
            BX = np.ascontiguousarray(b_bar * x[..., None])
            Cm = np.ascontiguousarray(np.broadcast_to(c, (2, L, n)))
            dev_backend = max(dev_backend, float(np.max(np.abs(lanes[0](A, BX, Cm) - lanes[1](A, BX, Cm)))))
    _emit({
        "cases": args.cases,
        "backend": _backend.BACKEND,
        "max_dev_kernel_vs_interpreter": dev_oracle,
        "max_dev_kernel_vs_parallel": dev_parallel,
        "max_dev_sequential_vs_parallel": dev_scan,
        "max_dev_python_vs_cython": dev_backend if len(backends) == 2 else None,
    })


def _stats(f):
    return {"mean": f.mean(axis=(0, 2, 3)).round(6).tolist(), "std": f.std(axis=(0, 2, 3)).round(6).tolist()}


def cmd_ddcfm_demo(args):
    rng = np.random.default_rng(args.seed)
    C = args.channels
    gate = GateConfig(fraction=args.fraction, use_abs=args.use_abs, normalized=args.normalized)
    state = init_ddcfm(C, rng)
    f_a = rng.standard_normal((1, C, args.size, args.size))
    f_b = rng.standard_normal((1, C, args.size, args.size))
    enh_a, enh_b = enhanced_branches(f_a, f_b, state, gate)
    fused = ddcfm_fuse(f_a, f_b, state, gate)
    ref = oracles.ddcfm_interpreter(f_a, f_b, state, gate)
    _emit({
        "channels": C,
        "gate_count": gate.count(C),
        "gated_a": list(channel_importance(state.omega_a, gate).gated),
        "gated_b": list(channel_importance(state.omega_b, gate).gated),
        "branch_a": {"before": _stats(f_a), "after": _stats(enh_a)},
        "branch_b": {"before": _stats(f_b), "after": _stats(enh_b)},
        "fused": _stats(fused),
        "max_dev_vs_interpreter": float(np.max(np.abs(fused - ref))),
    })


def cmd_forward_demo(args):
    run = _run_config(args)
    cfg = run.net
    gt = make_phantom(cfg.height, cfg.width, run.phantom_kind, run.phantom_seed)
    mask = make_mask(run.mask_pattern, cfg.height, cfg.width, run.mask_accel, run.mask_seed)
    zf = undersample(gt, mask, run.noise)
    state = init_network(cfg, run.seed)
    if args.weights:
        named, _ = fileio.read_weights(args.weights)
        state = state_from_parameters(cfg, named)
    out = forward(zf[None, None], state)[0, 0]
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    fileio.write_tensor(outdir / "input.pasm", zf)
    fileio.write_tensor(outdir / "output.pasm", out)
    fileio.write_pgm(outdir / "input.pgm", zf)
    fileio.write_pgm(outdir / "output.pgm", out)
    err = np.abs(out - gt)
    fileio.write_pgm(outdir / "error.pgm", err, 0.0, max(float(err.max()), 1e-12))
    if args.save_weights:
        fileio.write_weights(args.save_weights, state.named_parameters(), asdict(cfg))
    can_ssim = min(gt.shape) >= 11
    metrics = {
        "psnr_zf": psnr(zf, gt),
        "psnr_out": psnr(out, gt),
        "ssim_zf": ssim(zf, gt) if can_ssim else None,
        "ssim_out": ssim(out, gt) if can_ssim else None,
    }
    (outdir / "metrics.json").write_text(json.dumps(_json_value(metrics), indent=2, sort_keys=True) + "\n")
    _emit(metrics)


def cmd_evaluate(args):
    x = fileio.read_image(args.image)
    gt = fileio.read_image(args.reference)
    br = hybrid_loss(x, gt)
    _emit({
        "psnr": psnr(x, gt, args.data_range),
        "ssim": ssim(x, gt, args.data_range),
        "hybrid": {"image_l1": br.image_l1, "phase_l1": br.phase_l1, "amp_l1": br.amp_l1, "total": br.total},
    })


def cmd_toy_train(args):
    h, w = args.size
    gt = make_phantom(h, w, "shepp_logan", args.seed)
    measured = undersample(gt, make_mask(args.pattern, h, w, args.accel, args.seed))
    est, trace = toy_optimize(measured, gt, args.steps, args.lr)
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    with open(outdir / "trace.csv", "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["step", "image_l1", "phase_l1", "amp_l1", "total"])
        for i, br in enumerate(trace):
            wr.writerow([i, repr(br.image_l1), repr(br.phase_l1), repr(br.amp_l1), repr(br.total)])
    fileio.write_tensor(outdir / "before.pasm", measured)
    fileio.write_tensor(outdir / "after.pasm", est)
    fileio.write_pgm(outdir / "before.pgm", measured)
    fileio.write_pgm(outdir / "after.pgm", est)
    _emit({
        "steps": args.steps,
        "loss_start": trace[0].total,
        "loss_end": trace[-1].total,
        "psnr_before": psnr(measured, gt),
        "psnr_after": psnr(est, gt),
    })


def cmd_verify(args):
    numbers = None
    if args.only:
        try:
            numbers = {int(t) for t in args.only.split(",")}
        except ValueError:
            raise UsageError(f"--only expects comma-separated criterion numbers, got {args.only!r}") from None
        bad = numbers - set(range(1, len(acceptance.CHECKS) + 1))
        if bad:
            raise UsageError(f"unknown criteria {sorted(bad)}")
    results = acceptance.run_all(numbers)
    for r in results:
        print(r.line())
    failed = [r.number for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed (backend: {_backend.BACKEND})")
    return EXIT_FAIL if failed else EXIT_OK


# -- parser --------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pasm", description="k-space reconstruction toolkit")
    sub = p.add_subparsers(dest="command", metavar="command")
    sub.required = True

    s = sub.add_parser("phantom", help="write a synthetic phantom")
    s.add_argument("--kind", choices=PHANTOM_KINDS, default="shepp_logan")
    s.add_argument("--size", type=_size, default=(64, 64))
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.add_argument("--pgm")
    s.set_defaults(fn=cmd_phantom)

    s = sub.add_parser("gen-mask", help="write a sampling mask")
    s.add_argument("--pattern", choices=("cartesian", "radial"), default="cartesian")
    s.add_argument("--accel", type=int, choices=(2, 4), default=4)
    s.add_argument("--size", type=_size, default=(64, 64))
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.add_argument("--pgm")
    s.set_defaults(fn=cmd_gen_mask)

    s = sub.add_parser("undersample", help="zero-filled reconstruction of an image under a mask")
    s.add_argument("--img", required=True)
    s.add_argument("--mask", required=True)
    s.add_argument("--sigma", type=float, default=0.0)
    s.add_argument("--noise-seed", type=int, default=0)
    s.add_argument("--output", choices=("magnitude", "real"), default="magnitude")
    s.add_argument("--out", required=True)
    s.add_argument("--pgm")
    s.set_defaults(fn=cmd_undersample)

    s = sub.add_parser("swap-spectrum", help="combine the amplitude of one image with the phase of another")
    s.add_argument("--amp", required=True)
    s.add_argument("--phase", required=True)
    s.add_argument("--no-clamp", action="store_true")
    s.add_argument("--out", required=True)
    s.add_argument("--pgm")
    s.set_defaults(fn=cmd_swap_spectrum)

    s = sub.add_parser("scan-order", help="write a serialization order")
    s.add_argument("--kind", choices=KINDS, default="cfds")
    s.add_argument("--size", type=_size, default=(16, 16))
    s.add_argument("--path", type=int, default=0)
    s.add_argument("--window", type=int, default=4)
    s.add_argument("--mirrored", action="store_true")
    s.add_argument("--out", required=True)
    s.add_argument("--pgm")
    s.set_defaults(fn=cmd_scan_order)

    s = sub.add_parser("ssm-demo", help="compare scan implementations against the interpreter")
    s.add_argument("--cases", type=int, default=50)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(fn=cmd_ssm_demo)

    s = sub.add_parser("ddcfm-demo", help="show gated channels and channel statistics")
    s.add_argument("--channels", type=int, default=16)
    s.add_argument("--fraction", type=float, default=0.1)
    s.add_argument("--use-abs", action="store_true")
    s.add_argument("--normalized", action="store_true")
    s.add_argument("--size", type=int, default=8)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(fn=cmd_ddcfm_demo)

    s = sub.add_parser("forward-demo", help="run a seeded random network on an undersampled phantom")
    s.add_argument("--config")
    s.add_argument("--weights", help="PASM-W file to load instead of random init")
    s.add_argument("--save-weights")
    s.add_argument("--outdir", required=True)
    s.set_defaults(fn=cmd_forward_demo)

    s = sub.add_parser("evaluate", help="PSNR, SSIM and hybrid loss of an image against a reference")
    s.add_argument("image")
    s.add_argument("reference")
    s.add_argument("--data-range", type=float, default=1.0)
    s.set_defaults(fn=cmd_evaluate)

    s = sub.add_parser("toy-train", help="pixel-wise gradient descent on the hybrid loss")
    s.add_argument("--size", type=_size, default=(32, 32))
    s.add_argument("--pattern", choices=("cartesian", "radial"), default="cartesian")
    s.add_argument("--accel", type=int, choices=(2, 4), default=2)
    s.add_argument("--steps", type=int, default=200)
    s.add_argument("--lr", type=float, default=0.5)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--outdir", required=True)
    s.set_defaults(fn=cmd_toy_train)

    s = sub.add_parser("verify", help="run the acceptance suite")
    s.add_argument("--only", help="comma-separated criterion numbers")
    s.set_defaults(fn=cmd_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    try:
        rc = args.fn(args)
    except (UsageError, ConfigError, fileio.FormatError, FileNotFoundError) as exc:
        print(f"pasm {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"pasm {args.command}: invalid argument: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK if rc is None else rc


if __name__ == "__main__":
    sys.exit(main())
