"""Phase state machine and proportional control laws.

Commands are unitless VirtualStick-style rates.  Channel semantics:
pitch = forward, roll = right, throttle = up, yaw = clockwise,
gimbal_tilt = tilt rate (positive raises the camera).
"""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, fields, replace
from typing import Optional

from .geometry import wrap_angle
from .marker_model import Detection, ProfileName

LIMIT = 0.2


class Phase(str, enum.Enum):
    TAKEOFF = "takeoff"
    SEARCH = "search"
    APPROACH = "approach"
    YAW_ALIGN = "yaw-align"
    DESCENT = "descent"
    LANDING_COMMIT = "landing-commit"
    LANDED = "landed"

    @property
    def order(self) -> int:
        return _PHASE_ORDER[self]


_PHASE_ORDER = {p: i for i, p in enumerate(Phase)}
DETECTION_PHASES = (Phase.APPROACH, Phase.YAW_ALIGN, Phase.DESCENT)


class CommandError(ValueError):
    pass


@dataclass(frozen=True)
class ControlCommand:
    pitch: float = 0.0
    roll: float = 0.0
    yaw: float = 0.0
    throttle: float = 0.0
    gimbal_tilt: float = 0.0

    def as_tuple(self) -> tuple[float, float, float, float, float]:
        return (self.pitch, self.roll, self.yaw, self.throttle, self.gimbal_tilt)

    def is_valid(self) -> bool:
        vals = self.as_tuple()
        return (
            all(math.isfinite(v) for v in vals)
            and all(-LIMIT <= v <= LIMIT for v in vals)
            and self.throttle <= 0.0
        )


NEUTRAL = ControlCommand()
CHANNELS = ("pitch", "roll", "yaw", "throttle", "gimbal_tilt")

# Per-family landing-commit heights: WhyCode eclipses the frame up close.
COMMIT_ALTITUDE = {"apriltag": 0.35, "whycode": 0.6}


@dataclass(frozen=True)
class ControllerConfig:
    takeoff_altitude: float = 1.2
    search_yaw_rate: float = 0.15
    gimbal_sweep_period: float = 6.0
    gimbal_sweep_range: tuple[float, float] = (math.radians(-85.0), 0.0)
    # rad/s of gimbal motion per unit command; converts the sweep to a rate.
    gimbal_rate_scale: float = 1.0
    deadzone_radius: float = 0.2
    approach_gain: float = 0.3
    tracking_gain_u: float = 0.8
    tracking_gain_v: float = 0.8
    yaw_align_gain: float = 1.0
    descent_rate: float = 0.15
    lock_count: int = 3
    loss_timeout: float = 2.0
    commit_altitude: float = 0.35
    approach_handoff_radius: float = 0.5
    yaw_align_tolerance: float = math.radians(10.0)

    def __post_init__(self):
        object.__setattr__(self, "gimbal_sweep_range", tuple(self.gimbal_sweep_range))
        for f in fields(self):
            v = getattr(self, f.name)
            vals = v if isinstance(v, tuple) else (v,)
            if not all(math.isfinite(x) for x in vals):
                raise ValueError(f"{f.name} must be finite")
        if self.deadzone_radius <= 0:
            raise ValueError("deadzone_radius must be positive")
        if self.commit_altitude <= 0:
            raise ValueError("commit_altitude must be positive")
        if not 0 <= self.descent_rate <= LIMIT:
            raise ValueError("descent_rate must be in [0, 0.2]")
        if self.lock_count < 1 or self.gimbal_sweep_period <= 0:
            raise ValueError("lock_count and gimbal_sweep_period must be positive")

    @classmethod
    def for_profile(cls, profile_name, **overrides) -> "ControllerConfig":
        name = ProfileName(profile_name)
        family = "apriltag" if name.is_apriltag else "whycode"
        kw = {"commit_altitude": COMMIT_ALTITUDE[family]}
        kw.update(overrides)
        return cls(**kw)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["gimbal_sweep_range"] = list(self.gimbal_sweep_range)
        return d

    def replace(self, **kw) -> "ControllerConfig":
        return replace(self, **kw)


def _sat(x: float, lo: float = -LIMIT, hi: float = LIMIT) -> float:
    return lo if x < lo else hi if x > hi else x


def clamp(raw: ControlCommand) -> ControlCommand:
    vals = raw.as_tuple()
    if not all(math.isfinite(v) for v in vals):
        raise CommandError(f"non-finite command {raw}")
    return ControlCommand(
        _sat(raw.pitch),
        _sat(raw.roll),
        _sat(raw.yaw),
        _sat(raw.throttle, -LIMIT, 0.0),
        _sat(raw.gimbal_tilt),
    )


def search_command(t: float, cfg: ControllerConfig) -> ControlCommand:
    """Spin counterclockwise while sweeping the camera.

    The gimbal rate is a square wave so that the tilt angle traces a
    triangle wave over ``gimbal_sweep_range``: down during the first half
    of each period, up during the second.  The rate is clamped, so a sweep
    that is too fast for the channel limit covers a narrower band.
    """
    lo, hi = cfg.gimbal_sweep_range
    half = cfg.gimbal_sweep_period / 2.0
    rate = abs(hi - lo) / half / cfg.gimbal_rate_scale
    phase = (t % cfg.gimbal_sweep_period) / cfg.gimbal_sweep_period
    if phase in (0.0, 0.5):
        tilt = 0.0
    elif phase < 0.5:
        tilt = -rate
    else:
        tilt = rate
    return clamp(ControlCommand(yaw=-abs(cfg.search_yaw_rate), gimbal_tilt=tilt))


def track_command(det: Detection, cfg: ControllerConfig) -> tuple[float, float]:
    """Yaw and gimbal rates that drive the pad toward the image centre."""
    u, v = det.pixel
    return _sat(cfg.tracking_gain_u * u), _sat(-cfg.tracking_gain_v * v)


def _planar(det: Detection, cfg: ControllerConfig) -> tuple[float, float]:
    # position_target is drone minus pad, so the pad lies at its negation.
    fwd, right = -det.position_target[0], -det.position_target[1]
    if math.hypot(fwd, right) < cfg.deadzone_radius:
        return 0.0, 0.0
    return cfg.approach_gain * fwd, cfg.approach_gain * right


def approach_command(det: Detection, cfg: ControllerConfig) -> ControlCommand:
    pitch, roll = _planar(det, cfg)
    yaw, gimbal = track_command(det, cfg)
    return clamp(ControlCommand(pitch, roll, yaw, 0.0, gimbal))


def yaw_align_command(det: Detection, cfg: ControllerConfig) -> ControlCommand:
    pitch, roll = _planar(det, cfg)
    _, gimbal = track_command(det, cfg)
    yaw = cfg.yaw_align_gain * wrap_angle(det.pad_yaw)
    return clamp(ControlCommand(pitch, roll, yaw, 0.0, gimbal))


def descent_command(det: Detection, cfg: ControllerConfig) -> ControlCommand:
    pitch, roll = _planar(det, cfg)
    yaw, gimbal = track_command(det, cfg)
    return clamp(ControlCommand(pitch, roll, yaw, -abs(cfg.descent_rate), gimbal))


class LandingController:
    """Stateful phase machine; advance with :meth:`step` and :meth:`heartbeat`.

    ``step`` consumes one processed frame.  ``step(None, ...)`` is a frame
    in which the pad was not found: detection-driven phases answer with a
    hold-position command.  ``heartbeat`` runs when no frame has arrived
    recently; it enforces the loss timeout and otherwise keeps the
    current command, since a frame still in flight is not a miss.
    """

    def __init__(self, cfg: ControllerConfig, phase: Phase = Phase.TAKEOFF):
        self.cfg = cfg
        self.phase = phase
        self._streak = 0
        self._last_detection_t: Optional[float] = None
        self._last_cmd = NEUTRAL

    def _enter(self, phase: Phase) -> None:
        self.phase = phase
        self._streak = 0

    def step(
        self, det: Optional[Detection], altitude_estimate: float, t: float
    ) -> tuple[ControlCommand, Phase]:
        cmd, phase = self._step(det, altitude_estimate, t)
        self._last_cmd = cmd
        return cmd, phase

    def _step(self, det, altitude_estimate, t):
        cfg = self.cfg
        if det is not None:
            self._last_detection_t = t

        if self.phase is Phase.TAKEOFF:
            if altitude_estimate >= cfg.takeoff_altitude:
                self._enter(Phase.SEARCH)
                return search_command(t, cfg), self.phase
            return NEUTRAL, self.phase

        if self.phase is Phase.SEARCH:
            if det is None:
                self._streak = 0
                return search_command(t, cfg), self.phase
            self._streak += 1
            if self._streak >= cfg.lock_count:
                self._enter(Phase.APPROACH)
                return approach_command(det, cfg), self.phase
            return search_command(t, cfg), self.phase

        if self.phase in DETECTION_PHASES:
            if det is None:
                if (
                    self._last_detection_t is None
                    or t - self._last_detection_t >= cfg.loss_timeout
                ):
                    self._enter(Phase.SEARCH)
                    return search_command(t, cfg), self.phase
                return NEUTRAL, self.phase
            if self.phase is Phase.APPROACH:
                if det.planar_distance < cfg.approach_handoff_radius:
                    self._enter(Phase.YAW_ALIGN)
                    return yaw_align_command(det, cfg), self.phase
                return approach_command(det, cfg), self.phase
            if self.phase is Phase.YAW_ALIGN:
                if abs(wrap_angle(det.pad_yaw)) < cfg.yaw_align_tolerance:
                    self._enter(Phase.DESCENT)
                    return descent_command(det, cfg), self.phase
                return yaw_align_command(det, cfg), self.phase
            if det.position_target[2] <= cfg.commit_altitude:
                self._enter(Phase.LANDING_COMMIT)
                return NEUTRAL, self.phase
            return descent_command(det, cfg), self.phase

        # LandingCommit and Landed ignore detections; the vehicle is blind.
        return NEUTRAL, self.phase

    def heartbeat(self, altitude_estimate: float, t: float) -> tuple[ControlCommand, Phase]:
        cfg = self.cfg
        if self.phase is Phase.TAKEOFF:
            return self.step(None, altitude_estimate, t)
        if self.phase is Phase.SEARCH:
            cmd = search_command(t, cfg)
        elif self.phase in DETECTION_PHASES:
            if self._last_detection_t is None or t - self._last_detection_t >= cfg.loss_timeout:
                self._enter(Phase.SEARCH)
                cmd = search_command(t, cfg)
            else:
                cmd = self._last_cmd
        else:
            cmd = NEUTRAL
        self._last_cmd = cmd
        return cmd, self.phase

    def touchdown(self) -> None:
        self.phase = Phase.LANDED


def step(
    phase: Phase,
    det: Optional[Detection],
    altitude_estimate: float,
    t: float,
    cfg: ControllerConfig,
    streak: int = 0,
    last_detection_t: Optional[float] = None,
) -> tuple[ControlCommand, Phase]:
    """One-shot functional form of :meth:`LandingController.step`."""
    c = LandingController(cfg, phase)
    c._streak = streak
    c._last_detection_t = last_detection_t if last_detection_t is not None else t
    return c.step(det, altitude_estimate, t)
