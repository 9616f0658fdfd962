"""Run configuration: flat ``key = value`` files plus command-line overrides."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Iterable

from .acoustics import DOMAIN_MODES, AcousticEnvironment, Bandwidth, design_bandwidth, sweep_gaps
from .mems import LumpedDevice
from .numerics import Tolerance

LENGTH_KEYS = ("D", "L_min", "L_max", "L_target")
FREQUENCY_KEYS = ("omega1", "omega2")
LENGTH_UNITS = {"um": 1e-6, "nm": 1e-9}
FREQUENCY_UNITS = {"mega": 1e6, "giga": 1e9}

ALIASES = {
    "k": "k_spring",
    "n": "n_harmonic",
    "lambda2": "lambda2_values",
    "voltage": "voltages",
    "points": "n_points",
    "mode": "domain_mode",
}


class ConfigError(ValueError):
    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"config field {field!r}: {message}")


@dataclass
class RunConfig:
    # device
    k_spring: float = 1.0
    D: float = 60e-6
    A: float = 1e-8
    # environment
    c: float = 340.0
    intensity: float = 1e-4
    r1: float = math.sqrt(0.8)
    r2: float = math.sqrt(0.8)
    # band, or a design target that overrides it
    omega1: float = 9e7
    omega2: float = 1e8
    L_target: float | None = None
    n_harmonic: int = 1
    rel_width: float = 0.075
    # sweeps
    L_min: float = 5e-6
    L_max: float = 150e-6
    n_points: int = 200
    spacing: str = "linear"
    L_tilde_min: float = 0.01
    L_tilde_max: float = 1.0
    voltages: tuple[float, ...] = (3.0, 6.0)
    lambda2_values: tuple[float, ...] = (0.2, 0.015, 0.005, 0.0)
    # numerics
    tol_rel: float = 1e-8
    tol_abs: float = 1e-14
    max_evals: int = 1_000_000
    domain_mode: str = "printed"

    def validate(self) -> "RunConfig":
        for name in ("k_spring", "D", "A", "c", "L_min", "L_max", "tol_rel"):
            if not (getattr(self, name) > 0 and math.isfinite(getattr(self, name))):
                raise ConfigError(name, "must be a positive finite number")
        if self.intensity < 0:
            raise ConfigError("intensity", "must be >= 0")
        for name in ("r1", "r2"):
            if not 0 <= getattr(self, name) < 1:
                raise ConfigError(name, "must lie in [0, 1)")
        if self.L_target is None and not 0 < self.omega1 < self.omega2:
            raise ConfigError("omega1", "need 0 < omega1 < omega2")
        if self.L_target is not None and not self.L_target > 0:
            raise ConfigError("L_target", "must be > 0")
        if self.n_harmonic < 1:
            raise ConfigError("n_harmonic", "must be >= 1")
        if not 0 < self.rel_width < 1:
            raise ConfigError("rel_width", "must lie in (0, 1)")
        if self.n_points < 2:
            raise ConfigError("n_points", "must be >= 2")
        if not self.L_min < self.L_max:
            raise ConfigError("L_min", "must be < L_max")
        if not 0 < self.L_tilde_min < self.L_tilde_max <= 1:
            raise ConfigError("L_tilde_min", "need 0 < L_tilde_min < L_tilde_max <= 1")
        if self.spacing not in ("linear", "log"):
            raise ConfigError("spacing", "must be 'linear' or 'log'")
        if self.domain_mode not in DOMAIN_MODES:
            raise ConfigError("domain_mode", f"must be one of {DOMAIN_MODES}")
        if any(v < 0 for v in self.voltages):
            raise ConfigError("voltages", "must be >= 0")
        if any(v < 0 for v in self.lambda2_values):
            raise ConfigError("lambda2_values", "must be >= 0")
        try:
            self.tolerance()
        except ValueError as exc:
            raise ConfigError("tolerance", str(exc)) from exc
        return self

    def device(self) -> LumpedDevice:
        return LumpedDevice(self.k_spring, self.D, self.A)

    def environment(self) -> AcousticEnvironment:
        return AcousticEnvironment(self.c, self.intensity, self.r1, self.r2)

    def band(self) -> Bandwidth:
        if self.L_target is not None:
            return design_bandwidth(self.L_target, self.n_harmonic, self.c, self.rel_width)
        return Bandwidth(self.omega1, self.omega2)

    def tolerance(self) -> Tolerance:
        return Tolerance(self.tol_rel, self.tol_abs, self.max_evals)

    def gaps(self) -> list[float]:
        return sweep_gaps(self.L_min, self.L_max, self.n_points, self.spacing)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["voltages"] = list(self.voltages)
        d["lambda2_values"] = list(self.lambda2_values)
        d["r_product"] = self.r1 * self.r2
        return d


_FIELD_NAMES = {f.name for f in fields(RunConfig)}


def parse_text(text: str, source: str = "<config>") -> list[tuple[str, str]]:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    pairs = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}", f"expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"{source}:{lineno}", "empty key")
        pairs.append((key, value))
    return pairs


def _float_list(key: str, value: str) -> tuple[float, ...]:
    items = [v for v in value.replace(";", ",").split(",") if v.strip()]
    if not items:
        raise ConfigError(key, "empty list")
    return tuple(_float(key, v) for v in items)


def _float(key: str, value: str) -> float:
    try:
        return float(value)
    except ValueError:
        raise ConfigError(key, f"not a number: {value!r}") from None


def _int(key: str, value: str) -> int:
    try:
        return int(value)
    except ValueError:
        raise ConfigError(key, f"not an integer: {value!r}") from None


def apply_pairs(cfg: RunConfig, pairs: Iterable[tuple[str, str]],
                length_scale: float = 1.0, frequency_scale: float = 1.0) -> RunConfig:
    """Apply raw key/value pairs in order; later pairs win."""
    for key, value in pairs:
        key = ALIASES.get(key, key)
        if key in ("r", "r_product"):
            # a single reflectivity value is read as the product r1 * r2
            r = _float(key, value)
            if not 0 <= r < 1:
                raise ConfigError(key, "must lie in [0, 1)")
            cfg.r1 = cfg.r2 = math.sqrt(r)
            continue
        if key not in _FIELD_NAMES:
            raise ConfigError(key, "unknown key")
        if key in ("voltages", "lambda2_values"):
            setattr(cfg, key, _float_list(key, value))
        elif key in ("n_points", "n_harmonic", "max_evals"):
            setattr(cfg, key, _int(key, value))
        elif key in ("spacing", "domain_mode"):
            setattr(cfg, key, value.lower())
        elif key == "L_target" and value.lower() in ("", "none"):
            cfg.L_target = None
        else:
            v = _float(key, value)
            if key in LENGTH_KEYS:
                v *= length_scale
            elif key in FREQUENCY_KEYS:
                v *= frequency_scale
            setattr(cfg, key, v)
    return cfg


def load_config(path: str | Path | None, overrides: Iterable[str] = (),
                length_unit: str | None = None, frequency_unit: str | None = None) -> RunConfig:
    """Build a validated :class:`RunConfig` from a file and ``key=value`` overrides.

    ``length_unit`` (``"um"``/``"nm"``) and ``frequency_unit``
    (``"mega"``/``"giga"``) rescale the length and band-edge keys read from
    both sources.
    """
    ls = LENGTH_UNITS[length_unit] if length_unit else 1.0
    fs = FREQUENCY_UNITS[frequency_unit] if frequency_unit else 1.0
    cfg = RunConfig()
    if path is not None:
        text = Path(path).read_text()
        apply_pairs(cfg, parse_text(text, str(path)), ls, fs)
    override_pairs = []
    for item in overrides:
        if "=" not in item:
            raise ConfigError(item, "override must look like key=value")
        k, v = item.split("=", 1)
        override_pairs.append((k.strip(), v.strip()))
    apply_pairs(cfg, override_pairs, ls, fs)
    return cfg.validate()
