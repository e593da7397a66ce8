"""Flat ``key = value`` run configuration files.

Keys: loss, t, M, lr, weight_decay, epochs, batch_size, seed, hidden,
bins_k, standardize, shuffle. ``#`` starts a comment. Built-in files
``tabular`` and ``spiral`` ship with the package.
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path

KEYS = (
    "loss", "t", "M", "lr", "weight_decay", "epochs", "batch_size",
    "seed", "hidden", "bins_k", "standardize", "shuffle",
)

DEFAULTS = {
    "loss": "squentropy",
    "t": None,  # None: take it from the loss text, else 1
    "M": None,
    "lr": 0.01,
    "weight_decay": 5e-4,
    "epochs": 400,
    "batch_size": None,
    "seed": 0,
    "hidden": (64, 128, 64),
    "bins_k": 15,
    "standardize": True,
    "shuffle": True,
}

BUILTIN = ("tabular", "spiral")


class ConfigError(ValueError):
    pass


def _bool(text):
    v = text.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _batch(text):
    v = text.strip().lower()
    if v in ("auto", ""):
        return None
    if v == "full":
        return "full"
    return int(v)


def _hidden(text):
    parts = [p for p in text.replace(" ", "").split(",") if p]
    return tuple(int(p) for p in parts)


_PARSERS = {
    "loss": str.strip,
    "t": float,
    "M": float,
    "lr": float,
    "weight_decay": float,
    "epochs": int,
    "batch_size": _batch,
    "seed": int,
    "hidden": _hidden,
    "bins_k": int,
    "standardize": _bool,
    "shuffle": _bool,
}


def parse_value(key, text):
    try:
        return _PARSERS[key](text)
    except (ValueError, TypeError):
        raise ConfigError(f"bad value for {key}: {text!r}") from None


def parse_config(text, source="<config>"):
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep:
            raise ConfigError(f"{source}:{lineno}: expected key = value")
        if key not in KEYS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        try:
            out[key] = parse_value(key, value)
        except ConfigError as exc:
            raise ConfigError(f"{source}:{lineno}: {exc}") from None
    return out


def load_config(name_or_path):
    """Read a config file, or a built-in one by name (``tabular``, ``spiral``)."""
    if name_or_path in BUILTIN:
        text = resources.files("squentropy_lab.configs").joinpath(f"{name_or_path}.cfg").read_text()
        return parse_config(text, name_or_path)
    path = Path(name_or_path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config ({exc.strerror})") from None
    return parse_config(text, str(path))


def resolve(file_values=None, overrides=None):
    """Defaults, then file values, then explicit overrides (None means unset)."""
    merged = dict(DEFAULTS)
    merged.update(file_values or {})
    merged.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return merged


def dump_config(values):
    lines = []
    for key in KEYS:
        v = values[key]
        if key == "hidden":
            v = ",".join(str(h) for h in v)
        elif key == "batch_size" and v is None:
            v = "auto"
        elif v is None:
            continue
        elif isinstance(v, bool):
            v = "true" if v else "false"
        lines.append(f"{key} = {v}")
    return "\n".join(lines) + "\n"
