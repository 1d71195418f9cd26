"""Closed-loop trials and the 20-landing rotation campaign."""

from __future__ import annotations

import enum
import hashlib
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .controller import NEUTRAL, ControlCommand, ControllerConfig, LandingController, Phase
from .geometry import CameraModel, wrap_angle
from .marker_model import (
    FiducialProfile,
    SynthesisFlags,
    detection_schedule,
    get_profile,
    pad_pose,
    synthesize_detection,
)
from .vehicle_sim import LatencyPipeline, VehicleParams, VehicleState, step_dynamics, touchdown_check

CAMPAIGN_TRIALS = 20
CAMPAIGN_STEP = math.radians(18.0)

TIMESERIES_COLUMNS = (
    "t",
    "phase",
    "north",
    "east",
    "up",
    "yaw",
    "gimbal_tilt",
    "det_u",
    "det_v",
    "target_north",
    "target_east",
    "target_up",
    "det_pad_yaw",
    "det_capture_t",
    "pitch",
    "roll",
    "yaw_cmd",
    "throttle",
    "gimbal_cmd",
    "cmd_source_t",
    "flip",
)


class Termination(str, enum.Enum):
    LANDED_ON_PAD = "landed-on-pad"
    GROUND_TOUCH = "ground-touch"
    TIMEOUT = "timeout"
    LEFT_ARENA = "left-arena"


@dataclass(frozen=True)
class LatencyConfig:
    min_delay: float = 0.5
    max_delay: float = 2.0
    link_rate: float = 7.0
    enabled: bool = True

    def __post_init__(self):
        if not 0 <= self.min_delay <= self.max_delay:
            raise ValueError("need 0 <= min_delay <= max_delay")
        if not self.link_rate > 0:
            raise ValueError("link_rate must be positive")


@dataclass(frozen=True)
class TrialConfig:
    profile: FiducialProfile
    pad_yaw: float = 0.0
    start_distance: float = 2.5
    start_facing: float = math.pi
    seed: int = 0
    controller: Optional[ControllerConfig] = None
    vehicle: VehicleParams = field(default_factory=VehicleParams)
    latency: LatencyConfig = field(default_factory=LatencyConfig)
    camera: CameraModel = field(default_factory=CameraModel)
    flags: SynthesisFlags = field(default_factory=SynthesisFlags)
    pad_extent: float = 0.28
    dt: float = 0.02
    heartbeat_period: float = 0.2
    time_limit: float = 180.0
    arena_radius: float = 15.0

    def __post_init__(self):
        if isinstance(self.profile, str):
            object.__setattr__(self, "profile", get_profile(self.profile))
        if self.controller is None:
            object.__setattr__(self, "controller", ControllerConfig.for_profile(self.profile.name))
        if not self.start_distance > 0:
            raise ValueError("start_distance must be positive")
        if not (self.dt > 0 and self.heartbeat_period > 0 and self.time_limit > 0):
            raise ValueError("dt, heartbeat_period and time_limit must be positive")
        if not self.pad_extent > 0 or not self.arena_radius > self.start_distance:
            raise ValueError("pad_extent must be positive and the arena must contain the start")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    def replace(self, **kw) -> "TrialConfig":
        return replace(self, **kw)

    def to_dict(self) -> dict:
        return {
            "profile": self.profile.to_dict(),
            "pad_yaw": self.pad_yaw,
            "start_distance": self.start_distance,
            "start_facing": self.start_facing,
            "seed": self.seed,
            "controller": self.controller.to_dict(),
            "vehicle": self.vehicle.to_dict(),
            "latency": asdict(self.latency),
            "camera": asdict(self.camera),
            "flags": asdict(self.flags),
            "pad_extent": self.pad_extent,
            "dt": self.dt,
            "heartbeat_period": self.heartbeat_period,
            "time_limit": self.time_limit,
            "arena_radius": self.arena_radius,
        }


@dataclass
class TrialResult:
    config: TrialConfig
    termination: Termination
    landing_radius: Optional[float]
    duration: float
    phase_timeline: list[tuple[float, Phase]]
    rows: list[tuple]
    flip_times: list[float]

    @property
    def success(self) -> bool:
        return self.termination is Termination.LANDED_ON_PAD

    @property
    def ticks(self) -> int:
        return len(self.rows)

    def column(self, name: str) -> np.ndarray:
        i = TIMESERIES_COLUMNS.index(name)
        if name == "phase":
            return np.array([r[i] for r in self.rows], dtype=object)
        return np.array([np.nan if r[i] is None else r[i] for r in self.rows], dtype=float)

    def summary(self) -> dict:
        return {
            "profile": self.config.profile.name.value,
            "seed": self.config.seed,
            "pad_yaw": self.config.pad_yaw,
            "success": self.success,
            "termination": self.termination.value,
            "landing_radius": self.landing_radius,
            "duration": self.duration,
            "ticks": self.ticks,
            "flip_count": len(self.flip_times),
            "phase_timeline": [[t, p.value] for t, p in self.phase_timeline],
            "config": self.config.to_dict(),
        }


def start_state(cfg: TrialConfig) -> VehicleState:
    """Drone on the ground south of the pad, facing ``start_facing`` off the pad bearing."""
    # Pad at the origin; bearing from drone to pad is north.
    return VehicleState(north=-cfg.start_distance, yaw=wrap_angle(cfg.start_facing))


def trial_streams(seed: int) -> tuple[np.random.Generator, np.random.Generator, np.random.Generator]:
    """Independent generators for detections, latency and vehicle noise."""
    ss = np.random.SeedSequence(seed)
    return tuple(np.random.Generator(np.random.PCG64(s)) for s in ss.spawn(3))


def run_trial(cfg: TrialConfig) -> TrialResult:
    """Simulate one takeoff-to-touchdown attempt."""
    profile = cfg.profile
    if not cfg.flags.bias:
        profile = replace(profile, view_bias_gain=0.0)
    ccfg = cfg.controller
    vp = cfg.vehicle
    pad = pad_pose(cfg.pad_yaw)
    det_rng, lat_rng, veh_rng = trial_streams(cfg.seed)
    lat = cfg.latency
    frame_interval = detection_schedule(profile, lat.link_rate)
    pipeline = LatencyPipeline(
        lat.min_delay if lat.enabled else 0.0,
        lat.max_delay if lat.enabled else 0.0,
        frame_interval,
    )

    ctl = LandingController(ccfg)
    state = start_state(cfg)
    cmd: ControlCommand = NEUTRAL
    cmd_source: Optional[float] = None
    phase = ctl.phase
    timeline = [(0.0, phase)]
    rows: list[tuple] = []
    flip_times: list[float] = []
    drift: Optional[tuple[float, float]] = None
    termination = Termination.TIMEOUT
    radius: Optional[float] = None

    n_ticks = int(round(cfg.time_limit / cfg.dt))
    next_capture = 0.0
    last_run = -math.inf
    t = 0.0
    for i in range(n_ticks + 1):
        t = i * cfg.dt

        if t + 1e-9 >= next_capture:
            next_capture += frame_interval
            if state.airborne:
                det = synthesize_detection(
                    state.pose(),
                    state.gimbal_tilt,
                    pad,
                    profile,
                    det_rng,
                    t,
                    cfg.camera,
                    sweeping=phase is Phase.SEARCH,
                    flags=cfg.flags,
                )
                pipeline.push(det, t, lat_rng)

        delivered = pipeline.pop_all(t)
        latest = None
        flipped = False
        if delivered:
            for capture, det in delivered:
                cmd, phase = ctl.step(det, state.altitude, t)
                cmd_source = capture
                if phase is not timeline[-1][1]:
                    timeline.append((t, phase))
                if det is not None:
                    latest = det
                    if det.ambiguity_flip:
                        flip_times.append(t)
                        flipped = True
            last_run = t
        elif t - last_run >= cfg.heartbeat_period - 1e-9:
            new_cmd, phase = ctl.heartbeat(state.altitude, t)
            if new_cmd is not cmd:
                # A held command keeps the frame it came from as its source.
                cmd, cmd_source = new_cmd, None
            if phase is not timeline[-1][1]:
                timeline.append((t, phase))
            last_run = t

        rows.append(_row(t, phase, state, latest, cmd, cmd_source, flipped))

        vertical = None
        planar = None
        if phase is Phase.TAKEOFF:
            vertical = vp.takeoff_climb_speed if state.altitude < ccfg.takeoff_altitude else 0.0
        elif phase is Phase.LANDING_COMMIT:
            if drift is None:
                drift = tuple(float(x) for x in veh_rng.normal(0.0, vp.commit_drift_sigma, 2))
            vertical = -vp.commit_descent_speed
            planar = drift
        state = step_dynamics(state, cmd, cfg.dt, vp, vertical, planar)

        if state.airborne and phase is not Phase.TAKEOFF:
            td = touchdown_check(state, pad, cfg.pad_extent, vp.touchdown_altitude)
            if td is not None:
                ctl.touchdown()
                timeline.append((state.t, Phase.LANDED))
                radius = td.landing_radius
                termination = Termination.LANDED_ON_PAD if td.on_pad else Termination.GROUND_TOUCH
                t = state.t
                break
        if math.hypot(state.north, state.east) > cfg.arena_radius:
            termination = Termination.LEFT_ARENA
            t = state.t
            break

    return TrialResult(cfg, termination, radius, t, timeline, rows, flip_times)


def _row(t, phase, s: VehicleState, det, cmd: ControlCommand, src, flip) -> tuple:
    if det is None:
        d = (None,) * 7
    else:
        d = (det.pixel[0], det.pixel[1], *det.position_target, det.pad_yaw, det.timestamp)
    return (
        t,
        phase.value,
        s.north,
        s.east,
        0.0 - s.down,
        s.yaw,
        s.gimbal_tilt,
        *d,
        cmd.pitch,
        cmd.roll,
        cmd.yaw,
        cmd.throttle,
        cmd.gimbal_tilt,
        src,
        int(flip),
    )


def trial_seed(base_seed: int, profile_name: str, index: int) -> int:
    """Stable 64-bit seed for one trial of a campaign."""
    h = hashlib.sha256(f"{base_seed}:{profile_name}:{index}".encode()).digest()
    return int.from_bytes(h[:8], "little")


def campaign_configs(profile, base_seed: int, **overrides) -> list[TrialConfig]:
    """The 20 trial configs; the pad yaw steps by -18 degrees per landing.

    Pad yaw angles are left unwrapped (0, -18, ..., -342 degrees) so the
    schedule reads directly off the config echo.
    """
    if isinstance(profile, str):
        profile = get_profile(profile)
    return [
        TrialConfig(
            profile=profile,
            pad_yaw=-k * CAMPAIGN_STEP,
            seed=trial_seed(base_seed, profile.name.value, k),
            **overrides,
        )
        for k in range(CAMPAIGN_TRIALS)
    ]


@dataclass
class CampaignResult:
    profile: str
    base_seed: int
    trials: list[TrialResult]

    @property
    def successes(self) -> int:
        return sum(r.success for r in self.trials)

    def radii(self) -> np.ndarray:
        return np.array([r.landing_radius for r in self.trials if r.success], dtype=float)

    def radius_summary(self) -> dict:
        return radius_summary(self.radii())

    def summary(self) -> dict:
        return {
            "profile": self.profile,
            "base_seed": self.base_seed,
            "trials": len(self.trials),
            "successes": self.successes,
            "radius": self.radius_summary(),
            "terminations": [r.termination.value for r in self.trials],
        }


def radius_summary(radii: Sequence[float]) -> dict:
    r = np.asarray(radii, dtype=float)
    if r.size == 0:
        return {"n": 0, "min": None, "q1": None, "median": None, "q3": None, "max": None}
    q = np.quantile(r, [0.0, 0.25, 0.5, 0.75, 1.0])
    return {"n": int(r.size), "min": float(q[0]), "q1": float(q[1]), "median": float(q[2]), "q3": float(q[3]), "max": float(q[4])}


def run_campaign(profile, base_seed: int = 1, workers: int = 1, **overrides) -> CampaignResult:
    """Run the 20-landing campaign; results are identical for any ``workers``."""
    configs = campaign_configs(profile, base_seed, **overrides)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            trials = list(ex.map(run_trial, configs))
    else:
        trials = [run_trial(c) for c in configs]
    return CampaignResult(configs[0].profile.name.value, base_seed, trials)
