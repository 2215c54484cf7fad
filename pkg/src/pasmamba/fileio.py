"""Binary containers used by the command line tools.

All integers are little-endian.

========  =================================================================
PASM-T    ``PASM`` u8 version u8 rank, rank x u32 dims, f64 payload (C order)
PASM-C    ``PASC`` u8 version, u32 H, u32 W, interleaved (re, im) f64 pairs
PASM-M    ``PASM`` ``M``, u32 H, u32 W, u8 pattern, u8 accel, u64 seed, H*W bytes
PASM-O    ``PASM`` ``O``, u32 H, u32 W, u8 kind, u8 mirrored, u32 path, H*W u32
PASM-W    ``PASM`` ``W`` u8 version, u32 config-json length, config json,
          u32 count, then per entry: u16 name length, utf-8 name,
          u64 blob length, PASM-T blob
========  =================================================================
"""
from __future__ import annotations

import io
import json
import struct
from pathlib import Path

import numpy as np

VERSION = 1
MAGIC = b"PASM"
MAGIC_C = b"PASC"
PATTERN_CODES = {"cartesian": 0, "radial": 1, "full": 2}
KIND_CODES = {"cfds": 0, "local": 1, "raster": 2}


class FormatError(ValueError):
    pass


def _inv(d):
    return {v: k for k, v in d.items()}


def _read(path) -> bytes:
    return Path(path).read_bytes()


def _write(path, data: bytes):
    Path(path).write_bytes(data)


# -- tensors -----------------------------------------------------------------

def tensor_bytes(arr) -> bytes:
    arr = np.require(arr, dtype="<f8", requirements="C")
    if arr.ndim > 255:
        raise FormatError("rank too large")
    head = MAGIC + struct.pack("<BB", VERSION, arr.ndim) + struct.pack(f"<{arr.ndim}I", *arr.shape)
    return head + arr.tobytes()


def tensor_from_bytes(buf: bytes) -> np.ndarray:
    if buf[:4] != MAGIC or len(buf) < 6 or buf[4] != VERSION:
        raise FormatError("not a PASM-T tensor")
    rank = buf[5]
    dims = struct.unpack_from(f"<{rank}I", buf, 6)
    off = 6 + 4 * rank
    n = int(np.prod(dims, dtype=np.int64))
    if len(buf) - off != 8 * n:
        raise FormatError(f"payload holds {(len(buf) - off) // 8} values, header says {n}")
    return np.frombuffer(buf, dtype="<f8", count=n, offset=off).astype(np.float64).reshape(dims)


def write_tensor(path, arr):
    _write(path, tensor_bytes(arr))


def read_tensor(path) -> np.ndarray:
    return tensor_from_bytes(_read(path))


def read_image(path) -> np.ndarray:
    """Read a PASM-T tensor and squeeze it to a 2-D image."""
    arr = read_tensor(path)
    squeezed = arr.reshape([d for d in arr.shape if d != 1] or [1, 1])
    if squeezed.ndim != 2:
        raise FormatError(f"{path}: expected a single 2-D image, got shape {arr.shape}")
    return squeezed


# -- complex grids -------------------------------------------------------------

def write_complex(path, grid):
    grid = np.asarray(grid, dtype=np.complex128)
    if grid.ndim != 2:
        raise FormatError("complex grids are 2-D")
    inter = np.empty(grid.shape + (2,), dtype="<f8")
    inter[..., 0], inter[..., 1] = grid.real, grid.imag
    _write(path, MAGIC_C + struct.pack("<BII", VERSION, *grid.shape) + inter.tobytes())


def read_complex(path) -> np.ndarray:
    buf = _read(path)
    if buf[:4] != MAGIC_C or buf[4] != VERSION:
        raise FormatError("not a PASM-C grid")
    h, w = struct.unpack_from("<II", buf, 5)
    vals = np.frombuffer(buf, dtype="<f8", offset=13)
    if vals.size != 2 * h * w:
        raise FormatError("PASM-C payload size mismatch")
    vals = vals.reshape(h, w, 2)
    return vals[..., 0] + 1j * vals[..., 1]


# -- masks -------------------------------------------------------------------

def write_mask(path, mask):
    h, w = mask.grid.shape
    head = MAGIC + b"M" + struct.pack(
        "<IIBBQ", h, w, PATTERN_CODES[mask.pattern], mask.acceleration, mask.seed
    )
    _write(path, head + np.ascontiguousarray(mask.grid, dtype=np.uint8).tobytes())


def read_mask(path):
    from .kspace import CENTER_FRACTIONS, SamplingMask

    buf = _read(path)
    if buf[:5] != MAGIC + b"M":
        raise FormatError("not a PASM-M mask")
    h, w, pat, accel, seed = struct.unpack_from("<IIBBQ", buf, 5)
    grid = np.frombuffer(buf, dtype=np.uint8, offset=23)
    if grid.size != h * w:
        raise FormatError("PASM-M payload size mismatch")
    pattern = _inv(PATTERN_CODES)[pat]
    cf = CENTER_FRACTIONS.get(accel, 1.0) if pattern == "cartesian" else (1.0 if pattern == "full" else 0.0)
    return SamplingMask(grid.reshape(h, w).copy(), pattern, accel, cf, seed)


# -- scan orders ---------------------------------------------------------------

def write_order(path, order):
    head = MAGIC + b"O" + struct.pack(
        "<IIBBI", order.h, order.w, KIND_CODES[order.kind], int(order.mirrored), order.path_id
    )
    _write(path, head + np.ascontiguousarray(order.perm, dtype="<u4").tobytes())


def read_order(path):
    from .scan_orders import ScanOrder

    buf = _read(path)
    if buf[:5] != MAGIC + b"O":
        raise FormatError("not a PASM-O order")
    h, w, kind, mirrored, path_id = struct.unpack_from("<IIBBI", buf, 5)
    perm = np.frombuffer(buf, dtype="<u4", offset=19).astype(np.int64)
    if perm.size != h * w:
        raise FormatError("PASM-O payload size mismatch")
    return ScanOrder(h, w, perm, _inv(KIND_CODES)[kind], path_id, bool(mirrored))


# -- network weights -------------------------------------------------------------

def weights_bytes(named: dict, config: dict | None = None) -> bytes:
    out = io.BytesIO()
    cfg = json.dumps(config or {}, sort_keys=True).encode()
    out.write(MAGIC + b"W" + struct.pack("<BI", VERSION, len(cfg)) + cfg)
    out.write(struct.pack("<I", len(named)))
    for name, arr in named.items():
        key = name.encode()
        blob = tensor_bytes(arr)
        out.write(struct.pack("<H", len(key)) + key + struct.pack("<Q", len(blob)) + blob)
    return out.getvalue()


def weights_from_bytes(buf: bytes):
    if buf[:5] != MAGIC + b"W" or buf[5] != VERSION:
        raise FormatError("not a PASM-W container")
    (clen,) = struct.unpack_from("<I", buf, 6)
    off = 10
    config = json.loads(buf[off : off + clen])
    off += clen
    (count,) = struct.unpack_from("<I", buf, off)
    off += 4
    named = {}
    for _ in range(count):
        (klen,) = struct.unpack_from("<H", buf, off)
        off += 2
        key = buf[off : off + klen].decode()
        off += klen
        (blen,) = struct.unpack_from("<Q", buf, off)
        off += 8
        named[key] = tensor_from_bytes(buf[off : off + blen])
        off += blen
    if off != len(buf):
        raise FormatError("trailing bytes in PASM-W container")
    return named, config


def write_weights(path, named, config=None):
    _write(path, weights_bytes(named, config))


def read_weights(path):
    return weights_from_bytes(_read(path))


# -- PGM -------------------------------------------------------------------------

def to_gray8(img, lo=None, hi=None) -> np.ndarray:
    img = np.asarray(img, dtype=np.float64)
    lo = float(img.min()) if lo is None else lo
    hi = float(img.max()) if hi is None else hi
    scale = (img - lo) / (hi - lo) if hi > lo else np.zeros_like(img)
    return np.round(np.clip(scale, 0.0, 1.0) * 255).astype(np.uint8)


def write_pgm(path, img, lo=0.0, hi=1.0):
    """Binary (P5) 8-bit PGM of a 2-D image mapped from [lo, hi] to [0, 255]."""
    g = img if np.asarray(img).dtype == np.uint8 else to_gray8(img, lo, hi)
    h, w = g.shape
    _write(path, f"P5\n{w} {h}\n255\n".encode() + g.tobytes())


def read_pgm(path) -> np.ndarray:
    buf = _read(path)
    tokens, pos = [], 0
    while len(tokens) < 4:
        while buf[pos : pos + 1].isspace():
            pos += 1
        end = pos
        while not buf[end : end + 1].isspace():
            end += 1
        tokens.append(buf[pos:end])
        pos = end
    pos += 1  # single whitespace byte before the raster
    if tokens[0] != b"P5" or int(tokens[3]) != 255:
        raise FormatError("only 8-bit binary PGM is supported")
    w, h = int(tokens[1]), int(tokens[2])
    return np.frombuffer(buf, dtype=np.uint8, count=w * h, offset=pos).reshape(h, w).copy()
