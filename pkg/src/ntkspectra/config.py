"""Experiment configuration records with plain-text (key = value) round-tripping.

Every command owns a small dataclass of typed fields with documented
defaults. Configs load from a key = value file, get overridden by CLI flags,
and are echoed (fully resolved) into the output directory so a run can be
reproduced from its artifacts alone.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, fields
from typing import Optional, get_args, get_origin


def _format_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (tuple, list)):
        return ",".join(_format_value(x) for x in v)
    return str(v)


def _parse_scalar(text: str, typ):
    if typ is bool:
        lowered = text.strip().lower()
        if lowered in ("true", "1", "yes"):
            return True
        if lowered in ("false", "0", "no"):
            return False
        raise ValueError(f"cannot parse boolean from {text!r}")
    return typ(text.strip())


def _parse_value(text: str, typ):
    origin = get_origin(typ)
    if origin in (tuple, list):
        args = get_args(typ)
        elem = args[0] if args else str
        items = [t for t in text.split(",") if t.strip() != ""]
        seq = [_parse_scalar(t, elem) for t in items]
        return tuple(seq) if origin is tuple else seq
    if origin is not None and type(None) in get_args(typ):  # Optional[...]
        if text.strip().lower() in ("", "none"):
            return None
        inner = [a for a in get_args(typ) if a is not type(None)][0]
        return _parse_value(text, inner)
    return _parse_scalar(text, typ)


def config_to_text(cfg) -> str:
    lines = []
    for f in sorted(fields(cfg), key=lambda f: f.name):
        v = getattr(cfg, f.name)
        lines.append(f"{f.name} = {'' if v is None else _format_value(v)}")
    return "\n".join(lines) + "\n"


def parse_config_text(text: str) -> dict:
    """key = value lines; '#' starts a comment, blank lines ignored."""
    out = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"malformed config line: {raw!r}")
        key, _, val = line.partition("=")
        out[key.strip()] = val.strip()
    return out


def config_from_mapping(cls, mapping: dict, strict: bool = True):
    """Build a config dataclass from string values, casting by field type."""
    known = {f.name: f for f in fields(cls)}
    unknown = set(mapping) - set(known)
    if unknown and strict:
        raise ValueError(f"unknown config keys for {cls.__name__}: {sorted(unknown)}")
    kwargs = {}
    for name, f in known.items():
        if name in mapping:
            kwargs[name] = _parse_value(mapping[name], f.type if not isinstance(f.type, str) else _resolve(f.type))
    return cls(**kwargs)


_TYPE_NAMES = {
    "int": int, "float": float, "str": str, "bool": bool,
    "tuple[int, ...]": tuple[int, ...], "tuple[str, ...]": tuple[str, ...],
    "tuple[float, ...]": tuple[float, ...],
    "Optional[int]": Optional[int], "Optional[float]": Optional[float],
    "Optional[str]": Optional[str],
}


def _resolve(name: str):
    if name not in _TYPE_NAMES:
        raise ValueError(f"unsupported config field type {name!r}")
    return _TYPE_NAMES[name]


def config_from_text(cls, text: str):
    return config_from_mapping(cls, parse_config_text(text))


def merge_overrides(cfg, overrides: dict):
    """Replace fields with non-None override values (CLI flags beat file values)."""
    updates = {k: v for k, v in overrides.items() if v is not None}
    return dataclasses.replace(cfg, **updates)


@dataclass(frozen=True)
class EdrConfig:
    """Decay-rate grid experiment (the tabulated-reference pipeline)."""

    distributions: tuple[str, ...] = ("ucube", "u01", "triangular", "clipped_normal")
    d_values: tuple[int, ...] = (3, 4, 5)
    L_values: tuple[int, ...] = (2, 3, 4)
    n: int = 1000
    window_lo: int = 50
    window_hi: int = 200
    seeds: int = 3
    seed: int = 0
    workers: int = 1


@dataclass(frozen=True)
class SphereModesConfig:
    """Per-degree mode extraction of a dot-product profile on S^d."""

    profile: str = "ntk"        # ntk | constant | linear
    d: int = 3
    L: int = 2
    n_max: int = 60
    quad_order: int = 256
    fit_lo: int = 10
    fit_hi: int = 60
    seed: int = 0


@dataclass(frozen=True)
class FlowConfig:
    """Kernel gradient-flow risk curve on a synthetic task."""

    d: int = 1
    L: int = 2
    n: int = 128
    n_holdout: int = 128
    sigma: float = 0.3
    s: float = 1.0
    c: float = 1.0
    Q: float = 2.0
    M: float = 2.0
    t_min: float = 0.25
    t_max: float = 4096.0
    t_count: int = 28
    n_mc: int = 1500
    seed: int = 0


@dataclass(frozen=True)
class TrainConfig:
    """Mirrored-network gradient descent with trace logging."""

    d: int = 2
    L: int = 2
    m: int = 256
    n: int = 5
    eta: float = 0.1
    steps: int = 200
    log_every: int = 20
    kernel_gaps: bool = False
    seed: int = 0


@dataclass(frozen=True)
class CompareConfig:
    """Width sweep of lazy-regime gaps (network against kernel flow)."""

    widths: tuple[int, ...] = (256, 1024, 4096)
    seeds: int = 3
    d: int = 2
    L: int = 2
    n_train: int = 5
    eta: float = 0.1
    steps: int = 100
    log_every: int = 20
    seed: int = 0


@dataclass(frozen=True)
class CvConfig:
    """Cross-validated stopping-time selection versus candidate oracle."""

    d: int = 1
    L: int = 2
    n: int = 96
    n_holdout: int = 96
    sigma: float = 0.3
    M: float = 2.0
    Q: float = 2.0
    runs: int = 50
    n_mc: int = 1000
    seed: int = 0
