"""Flat key=value config files.

One `key = value` per line; `#` starts a comment; keys mirror the
dataclass field names they feed (dotted prefixes group, e.g.
`cam_a.gamma`). Values stay strings until a typed accessor pulls
them, so unknown keys can be rejected by the consumer with context.
"""

from __future__ import annotations

import os


def read_config(path: str | os.PathLike) -> dict[str, str]:
    with open(path) as fh:
        return parse_config_text(fh.read())


def parse_config_text(text: str) -> dict[str, str]:
    cfg: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config: line {lineno}: expected key=value, got {raw.strip()!r}")
        key, value = line.split("=", 1)
        key, value = key.strip(), value.strip()
        if not key:
            raise ValueError(f"config: line {lineno}: empty key")
        if key in cfg:
            raise ValueError(f"config: line {lineno}: duplicate key {key!r}")
        cfg[key] = value
    return cfg


def as_int(cfg: dict[str, str], key: str, default: int | None = None) -> int | None:
    if key not in cfg:
        return default
    try:
        return int(cfg[key])
    except ValueError as err:
        raise ValueError(f"config: key {key!r}: {cfg[key]!r} is not an integer") from err


def as_float(cfg: dict[str, str], key: str, default: float | None = None) -> float | None:
    if key not in cfg:
        return default
    try:
        return float(cfg[key])
    except ValueError as err:
        raise ValueError(f"config: key {key!r}: {cfg[key]!r} is not a number") from err


def as_str(cfg: dict[str, str], key: str, default: str | None = None) -> str | None:
    return cfg.get(key, default)


def as_floats(cfg: dict[str, str], key: str,
              default: tuple[float, ...] | None = None) -> tuple[float, ...] | None:
    if key not in cfg:
        return default
    try:
        return tuple(float(v) for v in cfg[key].split(","))
    except ValueError as err:
        raise ValueError(f"config: key {key!r}: {cfg[key]!r} is not a comma list of numbers") from err
