"""Run configuration with layered sources.

Precedence, highest first: command-line flags, LMOMENT_* environment
variables, a key=value config file, built-in defaults.
"""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Mapping, Optional

__all__ = ["RunConfig", "ConfigError", "load_config", "read_config_file"]

ENV_PREFIX = "LMOMENT_"


class ConfigError(ValueError):
    pass


def _default_parallelism() -> int:
    return max(1, len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else (os.cpu_count() or 1))


@dataclass(frozen=True)
class RunConfig:
    k: float = 1.0
    v: int = 1
    mode: str = "GRH"
    delta_override: Optional[float] = None
    quad_tol: float = 1e-8
    identity_tol: float = 1e-6
    t_max: float = 5000.0
    cache_dir: Optional[str] = None
    output_format: str = "csv"
    parallelism: int = dataclasses.field(default_factory=_default_parallelism)

    def __post_init__(self):
        if self.mode not in ("GRH", "unconditional"):
            raise ConfigError(f"mode must be GRH or unconditional, got {self.mode!r}")
        if self.mode == "unconditional" and (self.v < 1 or self.k * self.v != 1):
            raise ConfigError("unconditional mode needs k * v == 1 with v a positive integer")
        if not (self.quad_tol > 0 and self.identity_tol > 0):
            raise ConfigError("tolerances must be positive")
        if self.parallelism < 1:
            raise ConfigError("parallelism must be at least 1")
        if self.output_format not in ("csv", "json"):
            raise ConfigError("output_format must be csv or json")
        if self.delta_override is not None and not self.delta_override > 0:
            raise ConfigError("delta must be positive")
        if not self.t_max > 0:
            raise ConfigError("t_max must be positive")


_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}
_CONVERT = {
    "k": float,
    "v": int,
    "mode": str,
    "delta_override": float,
    "quad_tol": float,
    "identity_tol": float,
    "t_max": float,
    "cache_dir": str,
    "output_format": str,
    "parallelism": int,
}


def _coerce(name: str, raw: Any) -> Any:
    if name not in _CONVERT:
        raise ConfigError(f"unknown configuration key {name!r}")
    if raw is None or (isinstance(raw, str) and raw.strip().lower() in ("", "none")):
        if name in ("delta_override", "cache_dir"):
            return None
        raise ConfigError(f"{name} needs a value")
    try:
        return _CONVERT[name](raw.strip() if isinstance(raw, str) else raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for {name}: {raw!r}") from exc


def read_config_file(path) -> Dict[str, Any]:
    """Parse key=value lines; blank lines and '#' comments are skipped."""
    out: Dict[str, Any] = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value")
        key, value = (part.strip() for part in line.split("=", 1))
        out[key] = _coerce(key, value)
    return out


def _from_env(environ: Mapping[str, str]) -> Dict[str, Any]:
    out = {}
    for name in _FIELDS:
        var = ENV_PREFIX + name.upper()
        if var in environ:
            out[name] = _coerce(name, environ[var])
    return out


def load_config(flags: Optional[Mapping[str, Any]] = None, config_file=None,
                environ: Optional[Mapping[str, str]] = None) -> RunConfig:
    """Merge the layers; ``flags`` entries that are None count as unset."""
    values: Dict[str, Any] = {}
    if config_file is not None:
        values.update(read_config_file(config_file))
    values.update(_from_env(os.environ if environ is None else environ))
    for name, raw in (flags or {}).items():
        if raw is not None:
            values[name] = _coerce(name, raw)
    return RunConfig(**values)
