"""
Run configuration and its JSON document form.

A run document mirrors :class:`RunConfig` key for key. Unknown keys are
rejected and every required key must be present; the error message always
names the offending key path (``drive.freq_hz``, ``detectors[1].efficiency``).
"""

import dataclasses
import json
import math
from dataclasses import dataclass, field
from typing import Optional

from .model import ModulatorParams


class ConfigError(ValueError):
    """Invalid or incomplete run configuration."""


@dataclass(frozen=True)
class DriveWaveform:
    shape: str = "dc"
    freq_hz: float = 0.0
    vpp: float = 0.0
    vdc: float = 0.0
    # None draws the drive-to-tagger offset from the run seed
    t0_ps: Optional[float] = None
    vpp_scale: float = 1.0

    @property
    def period_ps(self):
        return 1e12 / self.freq_hz

    @property
    def effective_vpp(self):
        return self.vpp * self.vpp_scale


@dataclass(frozen=True)
class DetectorModel:
    efficiency: float = 0.85
    dark_rate_hz: float = 0.0
    jitter_sigma_ps: float = 0.0
    dead_time_ps: float = 0.0


@dataclass(frozen=True)
class Losses:
    spiral1_db: float = 6.5
    spiral2_db: float = 6.5
    routing_db: float = 0.5
    coupling_db: float = 0.0


@dataclass(frozen=True)
class AmziParams:
    delta_l_um: float = 90.0
    fsr_nm: float = 6.4
    extinction_db: float = 30.0
    # leaked pump photons reaching each detector, folded into uncorrelated counts
    leak_rate_hz: float = 0.0


@dataclass(frozen=True)
class Drift:
    rad_per_s: float = 0.0


@dataclass(frozen=True)
class RunConfig:
    pair_rate_hz: float
    ratio_r: float
    modulator: ModulatorParams
    drive: DriveWaveform
    detectors: tuple
    window_ps: float
    duration_s: float
    seed: int
    interference: str = "nli"
    pump_wavelength_nm: float = 1544.61
    tps_offset_rad: float = 0.0
    phi0_rad: float = 0.0
    losses: Losses = field(default_factory=Losses)
    amzi: AmziParams = field(default_factory=AmziParams)
    drift: Optional[Drift] = None

    def __post_init__(self):
        validate(self)

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    @property
    def harmonic(self):
        return 2 if self.interference == "nli" else 1

    def uncorrelated_rate_hz(self, channel):
        return self.detectors[channel].dark_rate_hz + self.amzi.leak_rate_hz


def _check(cond, key, msg):
    if not cond:
        raise ConfigError(f"{key}: {msg}")


def _finite(x):
    return isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x)


def validate(c):
    """Raise :class:`ConfigError` naming the first violated invariant."""
    for key in ("pair_rate_hz", "ratio_r", "window_ps", "duration_s", "tps_offset_rad", "phi0_rad"):
        _check(_finite(getattr(c, key)), key, "must be a finite number")
    _check(c.pair_rate_hz >= 0, "pair_rate_hz", "must be >= 0")
    _check(c.ratio_r >= 0, "ratio_r", "must be >= 0")
    _check(c.window_ps > 0, "window_ps", "must be > 0")
    _check(c.duration_s > 0, "duration_s", "must be > 0")
    _check(isinstance(c.seed, int) and not isinstance(c.seed, bool) and 0 <= c.seed < 2**64,
           "seed", "must be an unsigned 64-bit integer")
    _check(c.interference in ("nli", "classical"), "interference", "must be 'nli' or 'classical'")

    m = c.modulator
    _check(isinstance(m, ModulatorParams), "modulator", "must be a modulator block")

    d = c.drive
    _check(d.shape in ("square", "dc"), "drive.shape", "must be 'square' or 'dc'")
    for key in ("freq_hz", "vpp", "vdc", "vpp_scale"):
        _check(_finite(getattr(d, key)), f"drive.{key}", "must be a finite number")
    if d.shape == "square":
        _check(d.freq_hz > 0, "drive.freq_hz", "must be > 0 for a square drive")
    _check(d.vpp >= 0, "drive.vpp", "must be >= 0")
    _check(d.vpp_scale >= 0, "drive.vpp_scale", "must be >= 0")
    _check(d.t0_ps is None or _finite(d.t0_ps), "drive.t0_ps", "must be null or a finite number")

    _check(isinstance(c.detectors, tuple) and len(c.detectors) == 2, "detectors", "must list exactly two detectors")
    for k, det in enumerate(c.detectors):
        _check(0.0 <= det.efficiency <= 1.0, f"detectors[{k}].efficiency", "must lie in [0, 1]")
        for key in ("dark_rate_hz", "jitter_sigma_ps", "dead_time_ps"):
            val = getattr(det, key)
            _check(_finite(val) and val >= 0, f"detectors[{k}].{key}", "must be a finite number >= 0")
    _check(c.amzi.leak_rate_hz >= 0, "amzi.leak_rate_hz", "must be >= 0")
    if c.drift is not None:
        _check(_finite(c.drift.rad_per_s), "drift.rad_per_s", "must be a finite number")


# --- JSON document ---------------------------------------------------------

_NESTED = {
    "modulator": ModulatorParams,
    "drive": DriveWaveform,
    "losses": Losses,
    "amzi": AmziParams,
    "drift": Drift,
}


def _build(cls, data, path):
    if not isinstance(data, dict):
        raise ConfigError(f"{path or 'document'}: expected an object")
    names = {f.name: f for f in dataclasses.fields(cls)}
    for key in data:
        if key not in names:
            raise ConfigError(f"{path}{key}: unknown key")
    kwargs = {}
    for name, f in names.items():
        required = f.default is dataclasses.MISSING and f.default_factory is dataclasses.MISSING
        if name not in data:
            if required:
                raise ConfigError(f"{path}{name}: required key missing")
            continue
        value = data[name]
        if name == "detectors":
            if not isinstance(value, list) or len(value) != 2:
                raise ConfigError(f"{path}detectors: must list exactly two detectors")
            value = tuple(_build(DetectorModel, v, f"{path}detectors[{k}].") for k, v in enumerate(value))
        elif name in _NESTED and cls is RunConfig:
            value = None if (value is None and name == "drift") else _build(_NESTED[name], value, f"{path}{name}.")
        elif value is not None and not isinstance(value, (int, float, str)) or isinstance(value, bool):
            raise ConfigError(f"{path}{name}: unsupported value type")
        kwargs[name] = value
    try:
        return cls(**kwargs)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path.rstrip('.') or 'document'}: {exc}") from None


def config_from_dict(data):
    return _build(RunConfig, data, "")


def config_to_dict(c):
    out = dataclasses.asdict(c)
    out["detectors"] = [dataclasses.asdict(d) for d in c.detectors]
    return out


def load_config(path):
    """Read a JSON run document. Raises ConfigError or OSError."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"document: invalid JSON ({exc})") from None
    return config_from_dict(data)


def dump_config(c, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(config_to_dict(c), fh, indent=2, sort_keys=True)
        fh.write("\n")
