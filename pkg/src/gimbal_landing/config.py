"""Run configuration: YAML file plus command-line overrides.

Every key is optional.  Example::

    seed: 1
    workers: 2
    profiles:
      whycode-ellipse: {position_noise_sigma: 0.02}
    controller: {deadzone_radius: 0.15}
    vehicle: {commit_drift_sigma: 0.05}
    latency: {min_delay: 0.5, max_delay: 2.0}
    flags: {ambiguity: true}
    trial: {start_distance: 2.5, time_limit: 180}

``controller`` values apply on top of each profile's own defaults (the
per-family commit altitude); a ``controller_by_profile`` section can
override them for one profile.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Optional

import yaml

from .controller import ControllerConfig
from .geometry import CameraModel
from .harness import LatencyConfig, TrialConfig
from .marker_model import PROFILE_NAMES, FiducialProfile, SynthesisFlags, get_profile
from .vehicle_sim import VehicleParams

SECTIONS = (
    "seed",
    "workers",
    "profiles",
    "controller",
    "controller_by_profile",
    "vehicle",
    "latency",
    "camera",
    "flags",
    "trial",
)
_TRIAL_KEYS = {
    f.name
    for f in fields(TrialConfig)
    if f.name not in ("profile", "pad_yaw", "seed", "controller", "vehicle", "latency", "camera", "flags")
}


class ConfigError(ValueError):
    pass


def _check_keys(section: str, given: dict, allowed) -> None:
    bad = sorted(set(given) - set(allowed))
    if bad:
        raise ConfigError(f"unknown key(s) in {section}: {', '.join(bad)}")


def _names(cls) -> set[str]:
    return {f.name for f in fields(cls)}


@dataclass
class RunConfig:
    seed: int = 1
    workers: int = 1
    profiles: dict[str, dict] = field(default_factory=dict)
    controller: dict[str, Any] = field(default_factory=dict)
    controller_by_profile: dict[str, dict] = field(default_factory=dict)
    vehicle: dict[str, Any] = field(default_factory=dict)
    latency: dict[str, Any] = field(default_factory=dict)
    camera: dict[str, Any] = field(default_factory=dict)
    flags: dict[str, bool] = field(default_factory=dict)
    trial: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        for name in list(self.profiles) + list(self.controller_by_profile):
            if name not in PROFILE_NAMES:
                raise ConfigError(f"unknown profile {name!r}; valid names: {', '.join(PROFILE_NAMES)}")
        prof_keys = _names(FiducialProfile) - {"name"}
        for name, over in self.profiles.items():
            _check_keys(f"profiles.{name}", over, prof_keys)
        ctl_keys = _names(ControllerConfig)
        _check_keys("controller", self.controller, ctl_keys)
        for name, over in self.controller_by_profile.items():
            _check_keys(f"controller_by_profile.{name}", over, ctl_keys)
        _check_keys("vehicle", self.vehicle, _names(VehicleParams))
        _check_keys("latency", self.latency, _names(LatencyConfig))
        _check_keys("camera", self.camera, _names(CameraModel))
        _check_keys("flags", self.flags, _names(SynthesisFlags))
        _check_keys("trial", self.trial, _TRIAL_KEYS)
        if not isinstance(self.workers, int) or self.workers < 1:
            raise ConfigError("workers must be a positive integer")
        # Build one config eagerly so bad values fail before any simulation.
        for name in PROFILE_NAMES:
            self.trial_config(name, 0)

    @classmethod
    def from_dict(cls, d: Optional[dict]) -> "RunConfig":
        d = dict(d or {})
        _check_keys("config file", d, SECTIONS)
        return cls(**copy.deepcopy(d))

    @classmethod
    def load(cls, path) -> "RunConfig":
        p = Path(path)
        try:
            text = p.read_text(encoding="utf-8")
        except OSError as e:
            raise ConfigError(f"cannot read config {p}: {e.strerror or e}") from e
        try:
            data = yaml.safe_load(text)
        except yaml.YAMLError as e:
            raise ConfigError(f"invalid YAML in {p}: {e}") from e
        if data is not None and not isinstance(data, dict):
            raise ConfigError(f"{p}: top level must be a mapping")
        return cls.from_dict(data)

    def with_overrides(self, **kw) -> "RunConfig":
        """Copy with command-line values applied; None means "not given"."""
        d = self.to_dict()
        for key, val in kw.items():
            if val is None:
                continue
            section, _, sub = key.partition(".")
            if sub:
                d.setdefault(section, {})[sub] = val
            else:
                d[section] = val
        return RunConfig.from_dict(d)

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "workers": self.workers,
            "profiles": copy.deepcopy(self.profiles),
            "controller": copy.deepcopy(self.controller),
            "controller_by_profile": copy.deepcopy(self.controller_by_profile),
            "vehicle": copy.deepcopy(self.vehicle),
            "latency": copy.deepcopy(self.latency),
            "camera": copy.deepcopy(self.camera),
            "flags": copy.deepcopy(self.flags),
            "trial": copy.deepcopy(self.trial),
        }

    def echo(self) -> dict:
        """Config copied into outputs; the worker count is left out so
        serial and parallel runs export identical bytes."""
        d = self.to_dict()
        del d["workers"]
        return d

    def profile(self, name: str) -> FiducialProfile:
        base = get_profile(name)
        return replace(base, **self.profiles.get(base.name.value, {}))

    def controller_config(self, name: str) -> ControllerConfig:
        over = dict(self.controller)
        over.update(self.controller_by_profile.get(get_profile(name).name.value, {}))
        return ControllerConfig.for_profile(name, **over)

    def trial_overrides(self, name: str) -> dict:
        """Keyword overrides for :class:`TrialConfig` (everything but pad yaw and seed)."""
        return {
            "controller": self.controller_config(name),
            "vehicle": VehicleParams(**self.vehicle),
            "latency": LatencyConfig(**self.latency),
            "camera": CameraModel(**self.camera),
            "flags": SynthesisFlags(**self.flags),
            **self.trial,
        }

    def trial_config(self, name: str, seed: int, pad_yaw: float = 0.0) -> TrialConfig:
        try:
            return TrialConfig(profile=self.profile(name), pad_yaw=pad_yaw, seed=seed, **self.trial_overrides(name))
        except ConfigError:
            raise
        except (TypeError, ValueError) as e:
            raise ConfigError(str(e)) from e
