"""
Run settings: built-in defaults, an optional key = value file, and CLI flags.

Precedence is flag > file > default. File keys mirror the long flag names with
dashes or underscores, e.g.

    # case-b at the symmetric corner
    protocol = case-b
    delta1 = 0.5
    delta2 = 0.5
    eps1 = 0
    eps2 = 0.5
    m = 20000
"""

import logging
import os
from pathlib import Path
from typing import Any, Callable, Dict, Mapping, Optional, Union

from .errors import ConfigurationError

logger = logging.getLogger(__name__)

OUT_DIR_ENV = "BECSIM_OUT_DIR"

# key -> parser
KEYS: Dict[str, Callable[[str], Any]] = {
    "protocol": str,
    "scenario": str,
    "figure": str,
    "delta1": float,
    "delta2": float,
    "eps1": float,
    "eps2": float,
    "m": int,
    "trials": int,
    "seed": int,
    "slack": float,
    "workers": int,
    "tol": float,
    "failure_ceiling": float,
    "vary": str,
    "random_points": int,
    "out": str,
    "transcript": str,
}

DEFAULTS: Dict[str, Any] = {
    "scenario": "dd-outer",
    "delta1": 0.5,
    "delta2": 0.5,
    "eps1": 0.5,
    "eps2": 0.5,
    "m": 2000,
    "trials": 20,
    "seed": 0,
    "slack": 2.0,
    "workers": 1,
    "tol": 0.03,
    "failure_ceiling": 0.01,
}


def _normalize_key(key: str) -> str:
    return key.strip().lstrip("-").replace("-", "_").lower()


def parse_config_text(text: str, source: str = "<string>") -> Dict[str, Any]:
    values: Dict[str, Any] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        key = _normalize_key(key)
        if key not in KEYS:
            raise ConfigurationError(f"{source}:{lineno}: unknown key {key!r}")
        if not value:
            raise ConfigurationError(f"{source}:{lineno}: empty value for {key!r}")
        try:
            values[key] = KEYS[key](value)
        except ValueError:
            raise ConfigurationError(
                f"{source}:{lineno}: cannot read {value!r} as {KEYS[key].__name__} for {key!r}"
            ) from None
    return values


def load_config_file(path: Union[str, Path]) -> Dict[str, Any]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigurationError(f"cannot read config file {path}: {exc}") from None
    values = parse_config_text(text, str(path))
    logger.debug("config %s: %s", path, sorted(values))
    return values


def resolve_settings(
    flags: Mapping[str, Any],
    config_path: Optional[Union[str, Path]] = None,
    defaults: Optional[Mapping[str, Any]] = None,
) -> Dict[str, Any]:
    """Merge defaults, file and flags; flags that are None count as unset."""
    settings = dict(DEFAULTS if defaults is None else defaults)
    if config_path is not None:
        settings.update(load_config_file(config_path))
    for key, value in flags.items():
        key = _normalize_key(key)
        if value is not None:
            settings[key] = value
    return settings


def default_out_dir() -> Path:
    """BECSIM_OUT_DIR if set, else the working directory."""
    return Path(os.environ.get(OUT_DIR_ENV) or ".")
