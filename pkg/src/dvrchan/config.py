"""Run configuration: JSON schema, validation, and unit normalization.

Configs carry lengths in km or m (explicit ``length_unit``) and densities as
mantissa/exponent pairs in scatterers per square meter, so published
parameter tables can be transcribed verbatim.  Everything is normalized to
SI at load time.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

from .analytics import SPEED_OF_LIGHT, InteractionModel
from .pointprocess import Scenario, ScattererClass

__all__ = ["ConfigError", "RunConfig", "GTU_PRESET", "load_config", "config_hash"]


class ConfigError(ValueError):
    """Invalid configuration; carries the offending field path."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


# Generalized-typical-urban calibration preset.
GTU_PRESET = {
    "scenario": {
        "length_unit": "km",
        "d_prime": 0.2,
        "gamma": 0.22,
        "short": {"v1": 0.5, "v2": 0.3, "density": 7.07, "density_exponent": -5},
        "tall": {"v1": 4.1, "v2": 4.0, "density": 4.2, "density_exponent": -7},
    },
    "interaction": {
        "modes": ["reflection", "scattering"],
        "transmit_power_w": 10.0,
        "frequency_ghz": 2.0,
        "reflection": {"coeff_mean": -1.17, "coeff_var": 0.4},
        "scattering": {"coeff_mean": 4.0, "coeff_var": 2.0},
    },
    "sweep": {
        "toa_d_prime": [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0],
        "toa_gamma": [0.0, 0.22, 0.5, 1.0],
        "power_d_prime": [0.2, 0.4, 0.6, 0.8, 1.0],
    },
    "realizations": {"pmf": 100000, "toa": 100000, "power": 10000, "angles": 40000},
    "seed": 20260824,
}

_SCHEMA = {
    "scenario": {
        "length_unit": None,
        "d_prime": None,
        "gamma": None,
        "short": {"v1": None, "v2": None, "density": None, "density_exponent": None},
        "tall": {"v1": None, "v2": None, "density": None, "density_exponent": None},
    },
    "interaction": {
        "modes": None,
        "transmit_power_w": None,
        "frequency_ghz": None,
        "reflection": {"coeff_mean": None, "coeff_var": None},
        "scattering": {"coeff_mean": None, "coeff_var": None},
    },
    "sweep": {"toa_d_prime": None, "toa_gamma": None, "power_d_prime": None},
    "realizations": {"pmf": None, "toa": None, "power": None, "angles": None},
    "seed": None,
}


def _check_keys(data: dict, schema: dict, path: str = ""):
    for key, value in data.items():
        here = f"{path}.{key}" if path else key
        if key not in schema:
            raise ConfigError(here, "unknown configuration key")
        sub = schema[key]
        if isinstance(sub, dict):
            if not isinstance(value, dict):
                raise ConfigError(here, "expected an object")
            _check_keys(value, sub, here)


def _number(data: dict, path: str, key: str, minimum=None, maximum=None) -> float:
    if key not in data:
        raise ConfigError(f"{path}.{key}", "missing required field")
    value = data[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}.{key}", f"expected a number, got {value!r}")
    value = float(value)
    if minimum is not None and value < minimum:
        raise ConfigError(f"{path}.{key}", f"must be >= {minimum}, got {value}")
    if maximum is not None and value > maximum:
        raise ConfigError(f"{path}.{key}", f"must be <= {maximum}, got {value}")
    return value


def _merge_defaults(data: dict, defaults: dict) -> dict:
    merged = {}
    for key, default in defaults.items():
        if key in data and isinstance(default, dict) and isinstance(data[key], dict):
            merged[key] = _merge_defaults(data[key], default)
        elif key in data:
            merged[key] = data[key]
        else:
            merged[key] = default
    for key in data:
        if key not in defaults:
            merged[key] = data[key]
    return merged


def config_hash(raw: dict) -> str:
    canonical = json.dumps(raw, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class RunConfig:
    """Fully validated, SI-normalized run configuration."""

    raw: dict
    d_prime: float
    gamma: float
    short: ScattererClass
    tall: ScattererClass
    interactions: dict
    toa_d_prime: tuple
    toa_gamma: tuple
    power_d_prime: tuple
    realizations: dict
    seed: int

    def scenario(self, d_prime=None, gamma=None, seed=None) -> Scenario:
        return Scenario(
            d_prime=self.d_prime if d_prime is None else d_prime,
            short=self.short,
            tall=self.tall,
            gamma=self.gamma if gamma is None else gamma,
            seed=self.seed if seed is None else seed,
        )

    @property
    def hash(self) -> str:
        return config_hash(self.raw)


def _load_class(kind: str, data: dict, path: str, unit: float) -> ScattererClass:
    v1 = _number(data, path, "v1") * unit
    v2 = _number(data, path, "v2") * unit
    mantissa = _number(data, path, "density", minimum=0.0)
    exponent = _number(data, path, "density_exponent")
    if v1 <= 0.0:
        raise ConfigError(f"{path}.v1", "must be > 0")
    if v2 <= 0.0:
        raise ConfigError(f"{path}.v2", "must be > 0")
    return ScattererClass(kind=kind, v1=v1, v2=v2, density=mantissa * 10.0**exponent)


def load_config(path: str | Path | None = None) -> RunConfig:
    """Load and validate a JSON config; ``None`` yields the GTU preset.

    File values override the preset field by field, so partial configs are
    allowed; unknown keys are rejected.
    """
    if path is None:
        raw = json.loads(json.dumps(GTU_PRESET))
    else:
        try:
            raw = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(str(path), f"cannot read config: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError(str(path), "top-level config must be an object")
        _check_keys(raw, _SCHEMA)
        raw = _merge_defaults(raw, GTU_PRESET)

    scen = raw["scenario"]
    unit_name = scen.get("length_unit")
    if unit_name not in ("km", "m"):
        raise ConfigError("scenario.length_unit", f"must be 'km' or 'm', got {unit_name!r}")
    unit = 1000.0 if unit_name == "km" else 1.0
    d_prime = _number(scen, "scenario", "d_prime", minimum=0.0) * unit
    gamma = _number(scen, "scenario", "gamma", minimum=0.0, maximum=1.0)
    short = _load_class("short", scen["short"], "scenario.short", unit)
    tall = _load_class("tall", scen["tall"], "scenario.tall", unit)

    inter = raw["interaction"]
    power_w = _number(inter, "interaction", "transmit_power_w", minimum=1e-12)
    freq = _number(inter, "interaction", "frequency_ghz", minimum=1e-12)
    wavelength = SPEED_OF_LIGHT / (freq * 1e9)
    modes = inter["modes"]
    if not isinstance(modes, list) or not modes:
        raise ConfigError("interaction.modes", "must be a non-empty list")
    interactions = {}
    for mode in modes:
        if mode not in ("reflection", "scattering"):
            raise ConfigError("interaction.modes", f"unknown mode {mode!r}")
        coeff = inter[mode]
        interactions[mode] = InteractionModel(
            mode=mode,
            transmit_power=power_w,
            wavelength=wavelength,
            coeff_mean=_number(coeff, f"interaction.{mode}", "coeff_mean"),
            coeff_var=_number(coeff, f"interaction.{mode}", "coeff_var", minimum=0.0),
        )

    sweep = raw["sweep"]

    def _length_list(key):
        values = sweep[key]
        if not isinstance(values, list) or not values:
            raise ConfigError(f"sweep.{key}", "must be a non-empty list")
        return tuple(
            _number({"v": v}, f"sweep.{key}", "v", minimum=0.0) * unit for v in values
        )

    toa_gamma = sweep["toa_gamma"]
    if not isinstance(toa_gamma, list) or not toa_gamma:
        raise ConfigError("sweep.toa_gamma", "must be a non-empty list")
    toa_gamma = tuple(
        _number({"v": v}, "sweep.toa_gamma", "v", minimum=0.0, maximum=1.0)
        for v in toa_gamma
    )

    reals = raw["realizations"]
    realizations = {
        key: int(_number(reals, "realizations", key, minimum=1)) for key in reals
    }
    seed = raw["seed"]
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        raise ConfigError("seed", f"must be a non-negative integer, got {seed!r}")

    return RunConfig(
        raw=raw,
        d_prime=d_prime,
        gamma=gamma,
        short=short,
        tall=tall,
        interactions=interactions,
        toa_d_prime=_length_list("toa_d_prime"),
        toa_gamma=toa_gamma,
        power_d_prime=_length_list("power_d_prime"),
        realizations=realizations,
        seed=seed,
    )
