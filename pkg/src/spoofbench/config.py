"""Flat ``key=value`` configuration files with dotted section prefixes.

    # comment
    corpus.seed = 42
    feature.kinds = MFCC,CQCC

Later assignments and ``--set`` overrides win. Files are read and written in
sorted key order so a frozen snapshot diffs cleanly.
"""

from __future__ import annotations

from pathlib import Path


class ConfigError(ValueError):
    pass


def parse_config_text(text: str, source: str = "<config>") -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected key=value, got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"{source}:{lineno}: empty key")
        out[key] = value
    return out


def load_config(path) -> dict:
    path = Path(path)
    try:
        return parse_config_text(path.read_text(), str(path))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None


def apply_overrides(cfg: dict, overrides) -> dict:
    out = dict(cfg)
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(f"override must be key=value, got {item!r}")
        k, v = (s.strip() for s in item.split("=", 1))
        out[k] = v
    return out


def dump_config(cfg: dict) -> str:
    return "".join(f"{k} = {cfg[k]}\n" for k in sorted(cfg))


def write_config(path, cfg: dict) -> None:
    Path(path).write_text(dump_config(cfg))


def section(cfg: dict, prefix: str) -> dict:
    p = prefix.rstrip(".") + "."
    return {k[len(p):]: v for k, v in cfg.items() if k.startswith(p)}


def as_list(value, sep=",") -> list:
    if isinstance(value, (list, tuple)):
        return list(value)
    return [s.strip() for s in str(value).split(sep) if s.strip()]


def as_bool(value) -> bool:
    s = str(value).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {value!r}")
