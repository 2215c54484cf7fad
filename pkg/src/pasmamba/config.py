"""Flat ``key = value`` run configuration.

Lines are ``key = value``; ``#`` starts a comment. Keys are NetConfig
field names, ``gate.*`` for the fusion gate, and the run-level keys in
:data:`RUN_KEYS`. Every problem is reported as ``file:line: key: message``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from typing import get_type_hints

from .ddcfm import GateConfig
from .kspace import PHANTOM_KINDS, NoiseSpec
from .network import ConfigError, NetConfig

RUN_KEYS = {
    "seed": int,
    "mask.pattern": str,
    "mask.accel": int,
    "mask.seed": int,
    "noise.sigma": float,
    "noise.seed": int,
    "phantom.kind": str,
    "phantom.seed": int,
}


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _parser(tp):
    return {int: int, float: float, bool: _bool, str: str}[tp]


def _field_types(cls):
    hints = get_type_hints(cls)
    return {f.name: hints[f.name] for f in fields(cls)}


@dataclass(frozen=True)
class RunConfig:
    net: NetConfig = field(default_factory=NetConfig)
    seed: int = 0
    mask_pattern: str = "cartesian"
    mask_accel: int = 4
    mask_seed: int = 0
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    phantom_kind: str = "shepp_logan"
    phantom_seed: int = 0

    def validate(self, where: str = "config"):
        errors = []
        if self.mask_pattern not in ("cartesian", "radial"):
            errors.append(f"{where}: mask.pattern: must be 'cartesian' or 'radial', got {self.mask_pattern!r}")
        if self.mask_accel not in (2, 4):
            errors.append(f"{where}: mask.accel: must be 2 or 4, got {self.mask_accel}")
        if self.phantom_kind not in PHANTOM_KINDS:
            errors.append(f"{where}: phantom.kind: must be one of {PHANTOM_KINDS}, got {self.phantom_kind!r}")
        try:
            self.net.validate()
        except ConfigError as exc:
            errors.append(f"{where}: {exc}")
        if errors:
            raise ConfigError("; ".join(errors))
        return self


_NET_TYPES = {k: v for k, v in _field_types(NetConfig).items() if k != "gate"}
_GATE_TYPES = _field_types(GateConfig)


def parse_config(text: str, where: str = "config") -> RunConfig:
    net, gate, run = {}, {}, {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        loc = f"{where}:{lineno}"
        if "=" not in line:
            raise ConfigError(f"{loc}: expected 'key = value', got {raw.strip()!r}")
        key, value = (p.strip() for p in line.split("=", 1))
        if key.startswith("gate."):
            name, table, dest = key[5:], _GATE_TYPES, gate
        elif key in RUN_KEYS:
            name, table, dest = key, RUN_KEYS, run
        else:
            name, table, dest = key, _NET_TYPES, net
        if name not in table:
            raise ConfigError(f"{loc}: {key}: unknown key")
        if key in dest or name in dest:
            raise ConfigError(f"{loc}: {key}: duplicate key")
        try:
            dest[name] = _parser(table[name])(value)
        except ValueError as exc:
            raise ConfigError(f"{loc}: {key}: {exc}") from None
    try:
        gate_cfg = GateConfig(**gate)
    except ValueError as exc:
        raise ConfigError(f"{where}: gate: {exc}") from None
    if run.get("noise.sigma", 0.0) < 0:
        raise ConfigError(f"{where}: noise.sigma: must be >= 0, got {run['noise.sigma']}")
    cfg = RunConfig(
        net=replace(NetConfig(), gate=gate_cfg, **net),
        seed=run.get("seed", 0),
        mask_pattern=run.get("mask.pattern", "cartesian"),
        mask_accel=run.get("mask.accel", 4),
        mask_seed=run.get("mask.seed", run.get("seed", 0)),
        noise=NoiseSpec(run.get("noise.sigma", 0.0), run.get("noise.seed", 0)),
        phantom_kind=run.get("phantom.kind", "shepp_logan"),
        phantom_seed=run.get("phantom.seed", 0),
    )
    return cfg.validate(where)


def load_config(path) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config: {exc.strerror}") from None
    return parse_config(text, str(path))
