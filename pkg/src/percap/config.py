"""Experiment configuration: flat key=value files with flag overrides.

A config file holds one ``key = value`` pair per line (# comments allowed);
command-line flags win over file values.  Every run is fully determined by
the merged configuration plus the seed, which is what makes reruns
byte-identical.
"""

from __future__ import annotations

import os
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path


class ConfigError(ValueError):
    """Unusable configuration (exit code 2 at the CLI)."""


def _parse_floats(text: str) -> list[float]:
    try:
        values = [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad numeric list {text!r}") from exc
    if not values:
        raise ConfigError(f"empty grid {text!r}")
    if any(b <= a for a, b in zip(values, values[1:])):
        raise ConfigError(f"grid must be strictly increasing: {text!r}")
    return values


def _parse_ints(text: str) -> list[int]:
    values = _parse_floats(text)
    out = [int(v) for v in values]
    if any(float(i) != v for i, v in zip(out, values)):
        raise ConfigError(f"expected integers: {text!r}")
    return out


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"bad boolean {text!r}")


@dataclass
class ExperimentConfig:
    """Merged settings for one CLI run (flags already folded in)."""

    command: str = ""
    seed: int = 0
    out: str = "-"
    # default to machine parallelism; outputs are thread-count invariant
    threads: int = field(default_factory=lambda: os.cpu_count() or 1)
    n: int = 40
    trials: int = 200
    samples: int = 400
    shots: int = 100_000
    draws: int = 50
    probes: int = 12
    dist: str = "gaussian"
    method: str = "sequential"
    kappa: float = 0.0
    epsilon: float = 0.5
    sigma: float = 0.0
    alpha: float = 0.5
    tol: float = 1e-7
    quantum: bool = False
    kappa_grid: list[float] = field(default_factory=lambda: [0.0, 0.5, 1.0, 1.5, 2.0])
    alpha_grid: list[float] = field(default_factory=lambda: [0.2, 0.6, 1.0, 1.4, 1.8])
    epsilon_grid: list[float] = field(default_factory=lambda: [0.1, 0.25, 0.4])
    sigma_grid: list[float] = field(default_factory=lambda: [0.25, 0.5, 1.0])
    n_list: list[int] = field(default_factory=lambda: [12, 24])

    def __post_init__(self) -> None:
        if self.seed < 0 or self.seed > 2**64 - 1:
            raise ConfigError(f"seed must fit in uint64, got {self.seed}")
        if self.threads < 1:
            raise ConfigError(f"threads must be >= 1, got {self.threads}")
        if self.dist not in ("binary", "gaussian"):
            raise ConfigError(f"dist must be binary or gaussian, got {self.dist!r}")
        if self.method not in ("hit_or_miss", "sequential"):
            raise ConfigError(
                f"method must be hit_or_miss or sequential, got {self.method!r}"
            )


_CONVERTERS = {
    "seed": int,
    "out": str,
    "threads": int,
    "n": int,
    "trials": int,
    "samples": int,
    "shots": int,
    "draws": int,
    "probes": int,
    "dist": str,
    "method": str,
    "kappa": float,
    "epsilon": float,
    "sigma": float,
    "alpha": float,
    "tol": float,
    "quantum": _parse_bool,
    "kappa_grid": _parse_floats,
    "alpha_grid": _parse_floats,
    "epsilon_grid": _parse_floats,
    "sigma_grid": _parse_floats,
    "n_list": _parse_ints,
}


def read_config_file(path: str | Path) -> dict[str, str]:
    """Raw key -> value strings from a flat config file."""
    entries: dict[str, str] = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        entries[key.strip()] = value.strip()
    return entries


def build_config(command: str, file_entries: dict[str, str],
                 flag_entries: dict[str, object]) -> ExperimentConfig:
    """Merge file values and flag overrides into a validated config."""
    known = {f.name for f in fields(ExperimentConfig)} - {"command"}
    merged: dict[str, object] = {}
    for key, raw in file_entries.items():
        if key not in known:
            raise ConfigError(f"unknown config key {key!r}")
        try:
            merged[key] = _CONVERTERS[key](raw)
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for {key}: {raw!r}") from exc
    for key, value in flag_entries.items():
        if value is not None:
            merged[key] = value
    try:
        return ExperimentConfig(command=command, **merged)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def format_real(x: float) -> str:
    """17-significant-digit serialization: lossless at 64-bit width."""
    return format(float(x), ".17g")


def echo_metadata(cfg: ExperimentConfig, extra: dict[str, object],
                  stream=None) -> None:
    """Sidecar metadata block (config echo, versions, timings) on stderr."""
    import numpy
    import scipy

    from . import __version__

    out = stream if stream is not None else sys.stderr
    print(f"# percap {__version__} (numpy {numpy.__version__}, "
          f"scipy {scipy.__version__})", file=out)
    for f in fields(cfg):
        print(f"# {f.name}: {getattr(cfg, f.name)}", file=out)
    for key, value in extra.items():
        print(f"# {key}: {value}", file=out)
