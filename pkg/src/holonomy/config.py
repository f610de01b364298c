"""Flat key-value run configuration with a fail-fast schema.

Format: one ``key = value`` pair per line, ``#`` starts a comment, blank
lines ignored.  Unknown keys are errors.  Example:

    system = quadrupole
    coupling = 1.0
    rho = 1.0
    theta = tycko          # or a numeric polar angle in radians
    phi0 = 0.0
    omega = 0.125663706143591730
    phi_final = 6.2831853071795865
    grid = 800
    method = magnus4
    levels = 1,2
    seed = 12345
    gauge_count = 100
    workers = 1

``theta = tycko`` selects arccos(1/sqrt(3)).  Exactly one of ``phi_final``
or ``duration`` must be given for the quadrupole system.  Custom families
replace the field keys with ``generators_file`` and ``curve_file`` (formats
documented in :mod:`holonomy.io`).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .quadrupole import TYCKO_THETA, PrecessionScenario

VALID_METHODS = ("midpoint_exp", "magnus4")
METHOD_ALIASES = {"midpoint": "midpoint_exp", "midpoint_exp": "midpoint_exp", "magnus4": "magnus4"}

_COMMON_KEYS = {"system", "grid", "method", "levels", "seed", "gauge_count", "workers"}
_QUADRUPOLE_KEYS = {"coupling", "rho", "theta", "phi0", "omega", "phi_final", "duration"}
_CUSTOM_KEYS = {"generators_file", "curve_file", "cyclic"}
_ALL_KEYS = _COMMON_KEYS | _QUADRUPOLE_KEYS | _CUSTOM_KEYS

MIN_GRID = 16
MAX_SEED = 2**64 - 1


@dataclass(frozen=True)
class ScenarioConfig:
    system: str
    grid: int = 800
    method: str = "magnus4"
    levels: tuple[int, ...] | None = None  # 1-based labels; None = all
    seed: int = 0
    gauge_count: int = 100
    workers: int = 1
    # quadrupole fields
    coupling: float = 1.0
    rho: float = 1.0
    theta: float | None = None
    phi0: float = 0.0
    omega: float | None = None
    phi_final: float | None = None
    duration: float | None = None
    # custom-family fields
    generators_file: str | None = None
    curve_file: str | None = None
    cyclic: bool = False
    raw: dict = field(default_factory=dict)

    def precession_scenario(self) -> PrecessionScenario:
        if self.system != "quadrupole":
            raise ConfigError("not a quadrupole configuration")
        return PrecessionScenario(
            theta=self.theta,
            phi0=self.phi0,
            omega=self.omega,
            duration=self.duration,
            phi_final=self.phi_final,
            coupling=self.coupling,
            rho=self.rho,
        )


def _parse_pairs(text: str) -> dict[str, str]:
    pairs: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line.strip()!r}")
        key, value = body.split("=", 1)
        key = key.strip().lower()
        if key in pairs:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        pairs[key] = value.strip()
    return pairs


def _as_float(pairs: dict[str, str], key: str, default: float | None = None) -> float | None:
    if key not in pairs:
        return default
    try:
        return float(pairs[key])
    except ValueError:
        raise ConfigError(f"key {key!r}: expected a number, got {pairs[key]!r}") from None


def _as_int(pairs: dict[str, str], key: str, default: int) -> int:
    if key not in pairs:
        return default
    try:
        return int(pairs[key])
    except ValueError:
        raise ConfigError(f"key {key!r}: expected an integer, got {pairs[key]!r}") from None


def parse_config_text(text: str) -> ScenarioConfig:
    pairs = _parse_pairs(text)
    unknown = set(pairs) - _ALL_KEYS
    if unknown:
        raise ConfigError(f"unknown configuration keys: {', '.join(sorted(unknown))}")

    system = pairs.get("system")
    if system not in ("quadrupole", "custom-family"):
        raise ConfigError("key 'system' must be 'quadrupole' or 'custom-family'")

    grid = _as_int(pairs, "grid", 800)
    if grid < MIN_GRID:
        raise ConfigError(f"grid must be >= {MIN_GRID}, got {grid}")

    method = pairs.get("method", "magnus4")
    if method not in METHOD_ALIASES:
        raise ConfigError(f"method must be one of {sorted(set(METHOD_ALIASES))}, got {method!r}")
    method = METHOD_ALIASES[method]

    levels: tuple[int, ...] | None
    levels_raw = pairs.get("levels", "all")
    if levels_raw == "all":
        levels = None
    else:
        try:
            levels = tuple(int(tok) for tok in levels_raw.split(","))
        except ValueError:
            raise ConfigError(f"levels must be 'all' or comma-separated integers, got {levels_raw!r}") from None
        if any(l < 1 for l in levels):
            raise ConfigError("level labels are 1-based")

    seed = _as_int(pairs, "seed", 0)
    if not 0 <= seed <= MAX_SEED:
        raise ConfigError(f"seed must fit in an unsigned 64-bit integer, got {seed}")

    gauge_count = _as_int(pairs, "gauge_count", 100)
    if gauge_count < 1:
        raise ConfigError("gauge_count must be >= 1")
    workers = _as_int(pairs, "workers", 1)
    if workers < 1:
        raise ConfigError("workers must be >= 1")

    common = dict(
        system=system, grid=grid, method=method, levels=levels,
        seed=seed, gauge_count=gauge_count, workers=workers, raw=dict(pairs),
    )

    if system == "quadrupole":
        missing = {"theta", "omega"} - set(pairs)
        if missing:
            raise ConfigError(f"quadrupole configuration is missing keys: {', '.join(sorted(missing))}")
        forbidden = _CUSTOM_KEYS & set(pairs)
        if forbidden:
            raise ConfigError(f"keys {sorted(forbidden)} are not valid for system=quadrupole")
        theta_raw = pairs["theta"].lower()
        theta = TYCKO_THETA if theta_raw == "tycko" else _as_float(pairs, "theta")
        if not 0 < theta < np.pi:
            raise ConfigError("theta must lie strictly between 0 and pi")
        phi_final = _as_float(pairs, "phi_final")
        duration = _as_float(pairs, "duration")
        if (phi_final is None) == (duration is None):
            raise ConfigError("specify exactly one of phi_final or duration")
        omega = _as_float(pairs, "omega")
        if omega == 0:
            raise ConfigError("omega must be nonzero")
        return ScenarioConfig(
            **common,
            coupling=_as_float(pairs, "coupling", 1.0),
            rho=_as_float(pairs, "rho", 1.0),
            theta=theta,
            phi0=_as_float(pairs, "phi0", 0.0),
            omega=omega,
            phi_final=phi_final,
            duration=duration,
        )

    missing = {"generators_file", "curve_file"} - set(pairs)
    if missing:
        raise ConfigError(f"custom-family configuration is missing keys: {', '.join(sorted(missing))}")
    forbidden = _QUADRUPOLE_KEYS & set(pairs)
    if forbidden:
        raise ConfigError(f"keys {sorted(forbidden)} are not valid for system=custom-family")
    cyclic_raw = pairs.get("cyclic", "false").lower()
    if cyclic_raw not in ("true", "false"):
        raise ConfigError("cyclic must be 'true' or 'false'")
    return ScenarioConfig(
        **common,
        generators_file=pairs["generators_file"],
        curve_file=pairs["curve_file"],
        cyclic=cyclic_raw == "true",
    )


def parse_config(path: str | Path) -> ScenarioConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"configuration file not found: {path}")
    return parse_config_text(path.read_text(encoding="utf-8"))
