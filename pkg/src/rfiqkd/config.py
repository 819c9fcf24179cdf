"""Run configuration: defaults, TOML loading and total validation.

Every physics default equals the device values the package is calibrated
for: mu = 0.6, nu = 0.2, pulse ratio 6:2:1, 0.20 dB/km fiber, 4e-5 dark
counts per gate per detector, 11% detector efficiency, 1 MHz clock and
1e-5 failure probabilities.  Malformed or unknown fields are rejected with
the offending key named; physics parameters are never silently defaulted
on a bad value.
"""
from __future__ import annotations

import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib as _toml
else:  # pragma: no cover - depends on interpreter
    import tomli as _toml

from .channel import ChannelModel, DriftProcess
from .core import ProtocolConfig

__all__ = ["ConfigError", "RunConfig", "load_config", "default_toml"]


class ConfigError(ValueError):
    """A configuration file failed validation; the message names the field."""


@dataclass
class RunConfig:
    """Everything one experiment run needs."""

    mode: str = "analytic"                    # "analytic" | "mc"
    sweep_km: tuple[float, ...] = (0.0, 25.0, 50.0, 65.0, 75.0, 80.0, 85.0)
    segment_seconds: tuple[float, ...] = (5.0, 50.0, 200.0)
    pulse_rate_hz: float = 1e6
    seed: int = 20130205
    seeds: int = 1                            # repetitions in mc mode
    output_dir: Path | None = None
    align: bool = True
    histogram_segments: int = 10_000
    histogram_segment_pulses: int = 100_000
    protocol: ProtocolConfig = field(default_factory=ProtocolConfig)
    channel: ChannelModel = field(default_factory=ChannelModel)
    drift: DriftProcess = field(default_factory=DriftProcess)

    def __post_init__(self) -> None:
        if self.mode not in ("analytic", "mc"):
            raise ConfigError(f"run.mode must be 'analytic' or 'mc', "
                              f"got {self.mode!r}")
        if not self.sweep_km:
            raise ConfigError("run.sweep_km must not be empty")
        if any(km < 0 for km in self.sweep_km):
            raise ConfigError("run.sweep_km entries must be >= 0")
        if not self.segment_seconds or any(s <= 0 for s in self.segment_seconds):
            raise ConfigError("run.segment_seconds entries must be > 0")
        if self.pulse_rate_hz <= 0:
            raise ConfigError("run.pulse_rate_hz must be > 0")
        if self.seeds < 1:
            raise ConfigError("run.seeds must be >= 1")
        if self.histogram_segments < 1:
            raise ConfigError("run.histogram_segments must be >= 1")
        if self.histogram_segment_pulses < 1:
            raise ConfigError("run.histogram_segment_pulses must be >= 1")


_SCHEMA: dict[str, dict[str, type | tuple[type, ...]]] = {
    "run": {
        "mode": str,
        "sweep_km": list,
        "segment_seconds": list,
        "pulse_rate_hz": (int, float),
        "seed": int,
        "seeds": int,
        "output_dir": str,
        "align": bool,
        "histogram_segments": int,
        "histogram_segment_pulses": int,
    },
    "source": {
        "mu": (int, float),
        "nu": (int, float),
        "pulse_ratio": list,
        "n_total_pulses": int,
    },
    "bases": {
        "p_z": (int, float),
        "p_xy": (int, float),
    },
    "security": {
        "eps_pe": (int, float),
        "eps_pa": (int, float),
        "eps_ec": (int, float),
        "eps_bar": (int, float),
    },
    "channel": {
        "fiber_loss_db_per_km": (int, float),
        "detector_efficiency": (int, float),
        "dark_count_per_gate": (int, float),
        "num_detectors": int,
        "visibility": (int, float),
        "after_pulse_prob": (int, float),
    },
    "drift": {
        "sigma_rad_per_sec": (int, float),
        "beta_initial": (int, float),
    },
}


def _check_schema(data: dict) -> None:
    for section, entries in data.items():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        if not isinstance(entries, dict):
            raise ConfigError(f"[{section}] must be a table")
        for key, value in entries.items():
            if key not in _SCHEMA[section]:
                raise ConfigError(f"[{section}] {key}: unknown key")
            expected = _SCHEMA[section][key]
            if isinstance(value, bool) and expected is not bool:
                raise ConfigError(f"[{section}] {key}: expected "
                                  f"{expected}, got a boolean")
            if not isinstance(value, expected):
                raise ConfigError(
                    f"[{section}] {key}: expected {expected}, "
                    f"got {type(value).__name__} ({value!r})")


def load_config(path: str | Path | None = None,
                overrides: dict | None = None) -> RunConfig:
    """Load a RunConfig from a TOML file, applying the documented defaults.

    ``overrides`` maps the same nested keys (already parsed) and wins over
    the file; used by the CLI for flags like --seed.
    """
    data: dict = {}
    if path is not None:
        raw = Path(path).read_bytes()
        try:
            data = _toml.loads(raw.decode("utf-8"))
        except _toml.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: not valid TOML: {exc}") from exc
    if overrides:
        for section, entries in overrides.items():
            data.setdefault(section, {}).update(entries)
    _check_schema(data)

    run = data.get("run", {})
    source = data.get("source", {})
    bases = data.get("bases", {})
    security = data.get("security", {})
    channel = data.get("channel", {})
    drift = data.get("drift", {})

    def build(factory, section_name, kwargs):
        try:
            return factory(**kwargs)
        except ValueError as exc:
            raise ConfigError(f"[{section_name}] {exc}") from exc

    protocol_kwargs = {}
    for key in ("mu", "nu", "n_total_pulses"):
        if key in source:
            protocol_kwargs[key] = source[key]
    if "pulse_ratio" in source:
        ratio = source["pulse_ratio"]
        if len(ratio) != 3 or not all(
                isinstance(w, (int, float)) and not isinstance(w, bool)
                for w in ratio):
            raise ConfigError("[source] pulse_ratio: need three numbers")
        protocol_kwargs["pulse_ratio"] = tuple(float(w) for w in ratio)
    protocol_kwargs.update({k: v for k, v in bases.items()})
    protocol_kwargs.update({k: v for k, v in security.items()})
    protocol = build(ProtocolConfig, "source/bases/security", protocol_kwargs)

    channel_model = build(ChannelModel, "channel", dict(channel))

    pulse_rate = float(run.get("pulse_rate_hz", 1e6))
    drift_kwargs = dict(drift)
    drift_kwargs["pulse_rate_hz"] = pulse_rate
    drift_process = build(DriftProcess, "drift", drift_kwargs)

    run_kwargs: dict = {"protocol": protocol, "channel": channel_model,
                        "drift": drift_process, "pulse_rate_hz": pulse_rate}
    for key in ("mode", "seed", "seeds", "align", "histogram_segments",
                "histogram_segment_pulses"):
        if key in run:
            run_kwargs[key] = run[key]
    if "sweep_km" in run:
        sweep = run["sweep_km"]
        if not all(isinstance(km, (int, float)) and not isinstance(km, bool)
                   for km in sweep):
            raise ConfigError("[run] sweep_km: need numbers")
        run_kwargs["sweep_km"] = tuple(float(km) for km in sweep)
    if "segment_seconds" in run:
        segs = run["segment_seconds"]
        if not all(isinstance(s, (int, float)) and not isinstance(s, bool)
                   for s in segs):
            raise ConfigError("[run] segment_seconds: need numbers")
        run_kwargs["segment_seconds"] = tuple(float(s) for s in segs)
    if "output_dir" in run:
        run_kwargs["output_dir"] = Path(run["output_dir"])
    return RunConfig(**run_kwargs)


def default_toml() -> str:
    """The documented defaults, as a ready-to-edit TOML document."""
    cfg = RunConfig()
    ch = cfg.channel
    pr = cfg.protocol
    dr = cfg.drift
    return f"""\
[run]
mode = "{cfg.mode}"
sweep_km = {list(cfg.sweep_km)}
segment_seconds = {list(cfg.segment_seconds)}
pulse_rate_hz = {cfg.pulse_rate_hz:.0f}
seed = {cfg.seed}
seeds = {cfg.seeds}
align = true
histogram_segments = {cfg.histogram_segments}
histogram_segment_pulses = {cfg.histogram_segment_pulses}

[source]
mu = {pr.mu}
nu = {pr.nu}
pulse_ratio = [6, 2, 1]
n_total_pulses = {pr.n_total_pulses}

[bases]
p_z = {pr.p_z!r}
p_xy = {pr.p_xy!r}

[security]
eps_pe = {pr.eps_pe}
eps_pa = {pr.eps_pa}
eps_ec = {pr.eps_ec}
eps_bar = {pr.eps_bar}

[channel]
fiber_loss_db_per_km = {ch.fiber_loss_db_per_km}
detector_efficiency = {ch.detector_efficiency}
dark_count_per_gate = {ch.dark_count_per_gate}
num_detectors = {ch.num_detectors}
visibility = {ch.visibility!r}
after_pulse_prob = {ch.after_pulse_prob}

[drift]
sigma_rad_per_sec = {dr.sigma_rad_per_sec}
beta_initial = {dr.beta_initial}
"""
