"""Drone and gimbal kinematics plus the video-link latency pipeline."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import asdict, dataclass, replace
from typing import Optional

import numpy as np

from .controller import ControlCommand
from .geometry import GIMBAL_MAX_TILT, GIMBAL_MIN_TILT, Frame, Pose, euler_to_rotation
from .marker_model import Detection


@dataclass(frozen=True)
class VehicleParams:
    velocity_time_constant: float = 0.4
    max_speed: float = 1.0  # m/s per unit pitch/roll/throttle
    yaw_rate_scale: float = 1.0  # rad/s per unit yaw
    gimbal_rate_scale: float = 1.0  # rad/s per unit gimbal
    touchdown_altitude: float = 0.05
    commit_descent_speed: float = 0.4
    takeoff_climb_speed: float = 0.5
    # Std dev of the horizontal drift velocity during the blind descent.
    commit_drift_sigma: float = 0.1
    # Constant wind-like disturbance, NED m/s.
    disturbance: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        object.__setattr__(self, "disturbance", tuple(float(x) for x in self.disturbance))
        for name in (
            "velocity_time_constant",
            "max_speed",
            "yaw_rate_scale",
            "gimbal_rate_scale",
            "touchdown_altitude",
            "commit_descent_speed",
            "takeoff_climb_speed",
        ):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.commit_drift_sigma < 0:
            raise ValueError("commit_drift_sigma must be non-negative")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["disturbance"] = list(self.disturbance)
        return d

    def replace(self, **kw) -> "VehicleParams":
        return replace(self, **kw)


@dataclass(frozen=True, slots=True)
class VehicleState:
    """Kinematic state; position and velocity are NED, yaw clockwise."""

    north: float = 0.0
    east: float = 0.0
    down: float = 0.0
    vn: float = 0.0
    ve: float = 0.0
    vd: float = 0.0
    yaw: float = 0.0
    yaw_rate: float = 0.0
    gimbal_tilt: float = 0.0
    airborne: bool = False
    t: float = 0.0

    @property
    def altitude(self) -> float:
        return -self.down

    def pose(self) -> Pose:
        return Pose(
            np.array([self.north, self.east, self.down]),
            euler_to_rotation(0.0, 0.0, self.yaw),
            Frame.WORLD,
            Frame.BODY,
        )


def step_dynamics(
    s: VehicleState,
    cmd: ControlCommand,
    dt: float,
    p: VehicleParams,
    vertical_speed: Optional[float] = None,
    planar_velocity: Optional[tuple[float, float]] = None,
) -> VehicleState:
    """Advance the vehicle by ``dt`` under velocity-setpoint semantics.

    ``vertical_speed`` (m/s, up positive) and ``planar_velocity`` (NED m/s)
    replace the stick-derived setpoints; they model the flight controller's
    own takeoff and landing routines.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    c, sn = math.cos(s.yaw), math.sin(s.yaw)
    if planar_velocity is None:
        fwd = cmd.pitch * p.max_speed
        right = cmd.roll * p.max_speed
        sp_n = fwd * c - right * sn
        sp_e = fwd * sn + right * c
    else:
        sp_n, sp_e = planar_velocity
    up = cmd.throttle * p.max_speed if vertical_speed is None else vertical_speed
    sp_d = -up

    a = 1.0 - math.exp(-dt / p.velocity_time_constant)
    vn = s.vn + (sp_n - s.vn) * a
    ve = s.ve + (sp_e - s.ve) * a
    vd = s.vd + (sp_d - s.vd) * a

    yaw_rate = cmd.yaw * p.yaw_rate_scale
    yaw = s.yaw + yaw_rate * dt
    if not -math.pi <= yaw < math.pi:
        yaw = (yaw + math.pi) % (2.0 * math.pi) - math.pi
    tilt = s.gimbal_tilt + cmd.gimbal_tilt * p.gimbal_rate_scale * dt
    tilt = min(GIMBAL_MAX_TILT, max(GIMBAL_MIN_TILT, tilt))

    wn, we, wd = p.disturbance
    north = s.north + (vn + wn) * dt
    east = s.east + (ve + we) * dt
    down = s.down + (vd + wd) * dt
    if down > 0.0:
        down = 0.0
        vd = min(vd, 0.0)
    airborne = s.airborne or down < 0.0
    return VehicleState(north, east, down, vn, ve, vd, yaw, yaw_rate, tilt, airborne, s.t + dt)


class LatencyPipeline:
    """FIFO of processed frames, each released after its own random delay.

    Each entry is ``(capture_time, detection)``; the detection is None for
    a frame in which the pad was not found.  A frame's release time is its
    capture time plus a sampled delay, but frames leave strictly in
    capture order: one whose delay has elapsed still waits behind an
    earlier capture that is slower.
    """

    def __init__(self, min_delay: float = 0.5, max_delay: float = 2.0, frame_interval: float = 1 / 7):
        if not 0 <= min_delay <= max_delay:
            raise ValueError("need 0 <= min_delay <= max_delay")
        if not frame_interval > 0:
            raise ValueError("frame_interval must be positive")
        self.min_delay = min_delay
        self.max_delay = max_delay
        self.frame_interval = frame_interval
        self._queue: deque[tuple[float, Optional[Detection], float]] = deque()
        self._last_push: Optional[float] = None

    def __len__(self) -> int:
        return len(self._queue)

    def sample_delay(self, rng: np.random.Generator) -> float:
        return float(rng.uniform(self.min_delay, self.max_delay))

    def push(self, det: Optional[Detection], t: float, rng: np.random.Generator) -> float:
        """Queue the frame captured at ``t``; returns its release time."""
        if self._last_push is not None and t < self._last_push:
            raise ValueError("captures must be pushed in time order")
        self._last_push = t
        release = t + self.sample_delay(rng)
        self._queue.append((t, det, release))
        return release

    def pop(self, t: float) -> Optional[tuple[float, Optional[Detection]]]:
        """Oldest frame, as ``(capture_time, detection)``, if released by ``t``."""
        if self._queue and self._queue[0][2] <= t:
            capture, det, _ = self._queue.popleft()
            return capture, det
        return None

    def pop_all(self, t: float) -> list[tuple[float, Optional[Detection]]]:
        out = []
        while (item := self.pop(t)) is not None:
            out.append(item)
        return out


def pipeline_push(p: LatencyPipeline, det: Optional[Detection], t: float, rng: np.random.Generator) -> float:
    return p.push(det, t, rng)


def pipeline_pop(p: LatencyPipeline, t: float) -> Optional[tuple[float, Optional[Detection]]]:
    return p.pop(t)


@dataclass(frozen=True)
class Touchdown:
    on_pad: bool
    landing_radius: float


def touchdown_check(
    s: VehicleState, pad: Pose, pad_extent: float, touchdown_altitude: float = 0.05
) -> Optional[Touchdown]:
    """Landing outcome once the vehicle is at touchdown height, else None.

    The pad boundary is inclusive: a radius equal to ``pad_extent`` is on
    the pad.
    """
    if s.altitude > touchdown_altitude:
        return None
    r = math.hypot(s.north - pad.position[0], s.east - pad.position[1])
    return Touchdown(r <= pad_extent, r)
