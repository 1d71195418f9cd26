"""Synthetic fiducial detections with per-system failure modes.

No image is ever rendered.  A detection is derived from ground truth and
then degraded the way each fiducial system was observed to fail: range
gates, missed frames, position noise, roll/pitch sign flips near normal
incidence, and (for the multi-marker WhyCode bundle) a view-dependent
position bias.
"""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, replace
from typing import Optional

import numpy as np

from .geometry import (
    CameraModel,
    Frame,
    Pose,
    Rotation,
    compose,
    flip_roll_pitch,
    gimbal_camera_pose,
    invert,
    level_pad_target,
    project,
)

# Glare/shadow misses, applied to every profile at every frame.
BASELINE_LOSS = 0.02
# Ambiguity floor at grazing incidence, as a fraction of the base rate.
AMBIGUITY_FLOOR_FRACTION = 0.02


class ProfileName(str, enum.Enum):
    APRILTAG_48H12 = "apriltag48h12"
    APRILTAG_24H10 = "apriltag24h10"
    WHYCODE_ORIG = "whycode-orig"
    WHYCODE_ELLIPSE = "whycode-ellipse"
    WHYCODE_MULTI = "whycode-multi"

    @property
    def is_apriltag(self) -> bool:
        return self.value.startswith("apriltag")


@dataclass(frozen=True)
class FiducialProfile:
    name: ProfileName
    ambiguity_base: float
    detection_rate: float
    min_range: float
    max_range: float
    acquisition_loss: float
    position_noise_sigma: float
    view_bias_gain: float = 0.0
    baseline_loss: float = BASELINE_LOSS

    def __post_init__(self):
        object.__setattr__(self, "name", ProfileName(self.name))
        for p in ("ambiguity_base", "acquisition_loss", "baseline_loss"):
            if not 0.0 <= getattr(self, p) <= 1.0:
                raise ValueError(f"{p} must be a probability")
        if not 0.0 < self.min_range < self.max_range:
            raise ValueError("need 0 < min_range < max_range")
        if not self.detection_rate > 0:
            raise ValueError("detection_rate must be positive")
        if self.position_noise_sigma < 0 or self.view_bias_gain < 0:
            raise ValueError("noise sigma and bias gain must be non-negative")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["name"] = self.name.value
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "FiducialProfile":
        return cls(**d)

    def ideal(self) -> "FiducialProfile":
        """Copy with every stochastic degradation switched off."""
        return replace(
            self,
            ambiguity_base=0.0,
            acquisition_loss=0.0,
            baseline_loss=0.0,
            position_noise_sigma=0.0,
            view_bias_gain=0.0,
        )


def _builtin_profiles() -> dict[ProfileName, FiducialProfile]:
    P = ProfileName
    return {
        P.APRILTAG_48H12: FiducialProfile(P.APRILTAG_48H12, 0.08, 10.0, 0.1, 8.0, 0.3, 0.01),
        P.APRILTAG_24H10: FiducialProfile(P.APRILTAG_24H10, 0.35, 8.0, 0.1, 8.0, 0.3, 0.015),
        P.WHYCODE_ORIG: FiducialProfile(P.WHYCODE_ORIG, 0.15, 30.0, 0.5, 8.0, 0.05, 0.015),
        P.WHYCODE_ELLIPSE: FiducialProfile(P.WHYCODE_ELLIPSE, 0.05, 25.0, 0.5, 8.0, 0.05, 0.015),
        P.WHYCODE_MULTI: FiducialProfile(P.WHYCODE_MULTI, 0.25, 20.0, 0.5, 8.0, 0.05, 0.015, 10.0),
    }


BUILTIN_PROFILES = _builtin_profiles()
PROFILE_NAMES = tuple(p.value for p in ProfileName)


def get_profile(name) -> FiducialProfile:
    try:
        key = ProfileName(name)
    except ValueError:
        raise KeyError(
            f"unknown profile {name!r}; valid names: {', '.join(PROFILE_NAMES)}"
        ) from None
    return BUILTIN_PROFILES[key]


@dataclass(frozen=True)
class Detection:
    """What the perception stack hands to the controller.

    ``position_target`` is (north, east, up): the drone's displacement from
    the pad centre in the drone's level heading frame.
    """

    position_target: tuple[float, float, float]
    pixel: tuple[float, float]
    pad_yaw: float
    timestamp: float
    marker_id: str
    ambiguity_flip: bool = False

    @property
    def planar_distance(self) -> float:
        return math.hypot(self.position_target[0], self.position_target[1])


@dataclass(frozen=True)
class SynthesisFlags:
    """Per-trial switches for the degradation pipeline."""

    ambiguity: bool = True
    noise: bool = True
    loss: bool = True
    bias: bool = True


def _camera_boresight(camera_pose: Pose) -> np.ndarray:
    return camera_pose.matrix()[:, 0]


def incidence_angle(camera_pose: Pose, pad_pose: Pose) -> float:
    """Angle between the reversed boresight and the pad's up normal.

    0 means the camera looks straight at the marker face.
    """
    b = _camera_boresight(camera_pose)
    # Marker z points into the pad, so the visible normal is -z.
    n = -pad_pose.matrix()[:, 2]
    c = float(np.clip(-b @ n, -1.0, 1.0))
    return math.acos(c)


def ambiguity_probability(theta: float, profile: FiducialProfile) -> float:
    """Chance of a roll/pitch sign flip at incidence ``theta``.

    ``base * cos(theta)**2 + 0.02 * base``, capped at 1; highest head-on.
    """
    if not -1e-12 <= theta <= math.pi / 2 + 1e-12:
        raise ValueError(f"theta must be in [0, pi/2], got {theta}")
    base = profile.ambiguity_base
    return min(1.0, base * math.cos(theta) ** 2 + AMBIGUITY_FLOOR_FRACTION * base)


def detection_schedule(profile: FiducialProfile, link_rate: float) -> float:
    """Effective frame interval in seconds given the video link's rate."""
    if not link_rate > 0:
        raise ValueError("link_rate must be positive")
    return 1.0 / min(profile.detection_rate, link_rate)


def view_bias(camera_pose: Pose, theta: float, gain: float) -> np.ndarray:
    """World-frame shift of the perceived pad centre for view-biased systems.

    Magnitude ``gain * theta``, directed along the horizontal part of the
    camera's viewing direction, i.e. away from the camera.  The gimbal
    cannot look backwards, so once the drone passes the pad the shift
    still points ahead of it.
    """
    b = _camera_boresight(camera_pose)
    h = np.array([b[0], b[1], 0.0])
    return gain * theta * h / np.linalg.norm(h)


def synthesize_detection(
    true_drone: Pose,
    gimbal_tilt: float,
    pad: Pose,
    profile: FiducialProfile,
    rng: np.random.Generator,
    t: float,
    camera: CameraModel = CameraModel(),
    sweeping: bool = False,
    flags: SynthesisFlags = SynthesisFlags(),
) -> Optional[Detection]:
    """Detection of ``pad`` from the drone's camera at time ``t``, or None.

    Random draws happen in a fixed order per visible frame (loss, noise,
    flip) so that a given seed always yields the same stream regardless of
    which degradations are enabled.
    """
    cam_pose = gimbal_camera_pose(true_drone, gimbal_tilt)
    pixel = project(cam_pose, pad.position, camera)
    if pixel is None:
        return None
    rng_range = float(np.linalg.norm(pad.position - cam_pose.position))
    if rng_range < profile.min_range or rng_range > profile.max_range:
        return None

    draws = rng.random(2)
    noise = rng.standard_normal(3)
    p_loss = profile.baseline_loss
    if sweeping:
        p_loss = 1.0 - (1.0 - p_loss) * (1.0 - profile.acquisition_loss)
    if flags.loss and draws[0] < p_loss:
        return None

    theta = min(incidence_angle(cam_pose, pad), math.pi / 2)
    rel = compose(invert(cam_pose), Pose(pad.position, pad.orientation, pad.frame, Frame.MARKER))
    position = rel.position
    if flags.noise and profile.position_noise_sigma > 0:
        position = position + profile.position_noise_sigma * noise
    if flags.bias and profile.view_bias_gain > 0:
        shift = view_bias(cam_pose, theta, profile.view_bias_gain)
        position = position + cam_pose.orientation.inv().apply(shift)
    marker = Pose(position, rel.orientation, Frame.CAMERA, Frame.MARKER)

    flipped = False
    if flags.ambiguity and draws[1] < ambiguity_probability(theta, profile):
        marker = flip_roll_pitch(marker)
        flipped = True

    target, pad_yaw = level_pad_target(marker)
    return Detection(
        position_target=(float(target[0]), float(target[1]), float(target[2])),
        pixel=pixel,
        pad_yaw=pad_yaw,
        timestamp=t,
        marker_id=profile.name.value,
        ambiguity_flip=flipped,
    )


def pad_pose(yaw: float, position=(0.0, 0.0, 0.0)) -> Pose:
    """Level landing pad at ``position`` (NED) with the given yaw."""
    return Pose(np.asarray(position, dtype=float), Rotation.from_axis_angle((0, 0, 1), yaw), Frame.WORLD, Frame.MARKER)
