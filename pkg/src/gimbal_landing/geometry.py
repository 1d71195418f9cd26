"""Frames, rotations, pinhole projection and the level-pad transform.

Conventions used throughout the package:

* World frame is North-East-Down (NED) internally so that every frame is
  right-handed and a positive yaw is a clockwise turn seen from above.
  Anything user-facing (position targets, logs) is reported as
  North/East/Up, with ``up = -down``.
* Drone body and camera frames are Forward-Right-Down.  For the camera
  this means boresight, image-right, image-down.
* Marker frame: x is the pad's forward axis, y its right axis, z points
  into the pad.  A level pad therefore has an orientation that is a pure
  yaw in the world frame.
* Euler angles are ZYX (yaw, then pitch, then roll):
  ``R = Rz(yaw) @ Ry(pitch) @ Rx(roll)``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

GIMBAL_MIN_TILT = math.radians(-85.0)
GIMBAL_MAX_TILT = 0.0

# Inverse Euler is refused this close to |pitch| = pi/2.
GIMBAL_LOCK_TOL = 1e-6

# Permutation taking camera FRD coordinates to the optical convention used
# by fiducial pose solvers (x right, y down, z along the boresight).
FRD_TO_OPTICAL = np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]])


class GeometryError(ValueError):
    pass


class GimbalLockError(GeometryError):
    pass


class FrameMismatchError(GeometryError):
    pass


class Frame(str, enum.Enum):
    WORLD = "world"
    BODY = "drone-body"
    CAMERA = "camera"
    MARKER = "marker"


def vec3(x, y=None, z=None) -> np.ndarray:
    """Build a float64 3-vector from three scalars or one sequence."""
    if y is None and z is None:
        v = np.asarray(x, dtype=float).reshape(3)
    else:
        v = np.array([x, y, z], dtype=float)
    if not np.all(np.isfinite(v)):
        raise GeometryError(f"non-finite vector {v}")
    return v


def wrap_angle(a: float) -> float:
    """Wrap an angle to [-pi, pi)."""
    return (a + math.pi) % (2.0 * math.pi) - math.pi


@dataclass(frozen=True)
class Rotation:
    """Unit quaternion (w, x, y, z) with Hamilton product semantics.

    ``Rotation.apply(v)`` maps child-frame coordinates into the parent
    frame, so ``(a * b).apply(v) == a.apply(b.apply(v))``.
    """

    w: float = 1.0
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0

    def __post_init__(self):
        n = math.sqrt(self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z)
        if not math.isfinite(n) or n < 1e-12:
            raise GeometryError("degenerate quaternion")
        if abs(n - 1.0) > 1e-12:
            object.__setattr__(self, "w", self.w / n)
            object.__setattr__(self, "x", self.x / n)
            object.__setattr__(self, "y", self.y / n)
            object.__setattr__(self, "z", self.z / n)

    @classmethod
    def identity(cls) -> "Rotation":
        return cls()

    @classmethod
    def from_axis_angle(cls, axis, angle: float) -> "Rotation":
        ax = np.asarray(axis, dtype=float)
        ax = ax / np.linalg.norm(ax)
        s = math.sin(angle / 2.0)
        return cls(math.cos(angle / 2.0), ax[0] * s, ax[1] * s, ax[2] * s)

    @classmethod
    def from_matrix(cls, m) -> "Rotation":
        m = np.asarray(m, dtype=float)
        tr = m[0, 0] + m[1, 1] + m[2, 2]
        # Shepperd's method: pick the largest diagonal term for stability.
        if tr > 0.0:
            s = 2.0 * math.sqrt(tr + 1.0)
            w = 0.25 * s
            x = (m[2, 1] - m[1, 2]) / s
            y = (m[0, 2] - m[2, 0]) / s
            z = (m[1, 0] - m[0, 1]) / s
        elif m[0, 0] > m[1, 1] and m[0, 0] > m[2, 2]:
            s = 2.0 * math.sqrt(1.0 + m[0, 0] - m[1, 1] - m[2, 2])
            w = (m[2, 1] - m[1, 2]) / s
            x = 0.25 * s
            y = (m[0, 1] + m[1, 0]) / s
            z = (m[0, 2] + m[2, 0]) / s
        elif m[1, 1] > m[2, 2]:
            s = 2.0 * math.sqrt(1.0 + m[1, 1] - m[0, 0] - m[2, 2])
            w = (m[0, 2] - m[2, 0]) / s
            x = (m[0, 1] + m[1, 0]) / s
            y = 0.25 * s
            z = (m[1, 2] + m[2, 1]) / s
        else:
            s = 2.0 * math.sqrt(1.0 + m[2, 2] - m[0, 0] - m[1, 1])
            w = (m[1, 0] - m[0, 1]) / s
            x = (m[0, 2] + m[2, 0]) / s
            y = (m[1, 2] + m[2, 1]) / s
            z = 0.25 * s
        return cls(w, x, y, z).canonical()

    def canonical(self) -> "Rotation":
        """Same rotation with w >= 0 (double-cover representative)."""
        if self.w < 0.0:
            return Rotation(-self.w, -self.x, -self.y, -self.z)
        return self

    def as_tuple(self) -> tuple[float, float, float, float]:
        q = self.canonical()
        return (q.w, q.x, q.y, q.z)

    def as_matrix(self) -> np.ndarray:
        w, x, y, z = self.w, self.x, self.y, self.z
        return np.array(
            [
                [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
                [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
                [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
            ]
        )

    def inv(self) -> "Rotation":
        return Rotation(self.w, -self.x, -self.y, -self.z)

    def __mul__(self, other: "Rotation") -> "Rotation":
        a, b = self, other
        return Rotation(
            a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
            a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
            a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
            a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
        )

    def apply(self, v) -> np.ndarray:
        return self.as_matrix() @ np.asarray(v, dtype=float)

    def angle_to(self, other: "Rotation") -> float:
        """Geodesic angle between two rotations, radians."""
        # atan2 of the relative quaternion stays accurate for tiny angles,
        # where acos of the dot product loses about half the digits.
        d = self.inv() * other
        return 2.0 * math.atan2(math.sqrt(d.x * d.x + d.y * d.y + d.z * d.z), abs(d.w))


def euler_to_rotation(roll: float, pitch: float, yaw: float) -> Rotation:
    """ZYX Euler angles to a rotation, ``Rz(yaw) Ry(pitch) Rx(roll)``."""
    if not all(math.isfinite(a) for a in (roll, pitch, yaw)):
        raise GeometryError("non-finite Euler angle")
    cr, sr = math.cos(roll / 2), math.sin(roll / 2)
    cp, sp = math.cos(pitch / 2), math.sin(pitch / 2)
    cy, sy = math.cos(yaw / 2), math.sin(yaw / 2)
    return Rotation(
        cy * cp * cr + sy * sp * sr,
        cy * cp * sr - sy * sp * cr,
        cy * sp * cr + sy * cp * sr,
        sy * cp * cr - cy * sp * sr,
    )


def _matrix_to_euler(m: np.ndarray, strict: bool) -> tuple[float, float, float]:
    sp = -m[2, 0]
    cp = math.hypot(m[0, 0], m[1, 0])
    pitch = math.atan2(sp, cp)
    if abs(abs(pitch) - math.pi / 2) <= GIMBAL_LOCK_TOL:
        if strict:
            raise GimbalLockError(f"pitch {pitch:.9f} rad is at gimbal lock")
        # Roll and yaw are coupled here; put everything into yaw.
        yaw = math.atan2(-m[0, 1], m[1, 1])
        return 0.0, pitch, yaw
    roll = math.atan2(m[2, 1], m[2, 2])
    yaw = math.atan2(m[1, 0], m[0, 0])
    return roll, pitch, yaw


def rotation_to_euler(r: Rotation) -> tuple[float, float, float]:
    """Inverse of :func:`euler_to_rotation`; returns ``(roll, pitch, yaw)``.

    Raises :class:`GimbalLockError` when ``|pitch|`` is within 1e-6 rad of
    pi/2, where roll and yaw are not separable.
    """
    return _matrix_to_euler(r.as_matrix(), strict=True)


@dataclass(frozen=True)
class Pose:
    """Rigid transform taking ``child`` coordinates into ``frame``."""

    position: np.ndarray = field(default_factory=lambda: np.zeros(3))
    orientation: Rotation = field(default_factory=Rotation)
    frame: Frame = Frame.WORLD
    child: Frame = Frame.BODY

    def __post_init__(self):
        object.__setattr__(self, "position", vec3(self.position))
        object.__setattr__(self, "frame", Frame(self.frame))
        object.__setattr__(self, "child", Frame(self.child))

    @classmethod
    def identity(cls, frame: Frame = Frame.WORLD) -> "Pose":
        return cls(np.zeros(3), Rotation(), frame, frame)

    def matrix(self) -> np.ndarray:
        return self.orientation.as_matrix()


def compose(a: Pose, b: Pose) -> Pose:
    """``a * b``: b must be expressed in a's child frame."""
    if b.frame != a.child:
        raise FrameMismatchError(
            f"cannot compose {a.frame.value}<-{a.child.value} with {b.frame.value}<-{b.child.value}"
        )
    return Pose(
        a.position + a.orientation.apply(b.position),
        a.orientation * b.orientation,
        a.frame,
        b.child,
    )


def invert(a: Pose) -> Pose:
    r_inv = a.orientation.inv()
    return Pose(-r_inv.apply(a.position), r_inv, a.child, a.frame)


def transform_point(a: Pose, p) -> np.ndarray:
    """Map a point from ``a.child`` coordinates into ``a.frame``."""
    return a.position + a.orientation.apply(vec3(p))


def poses_close(a: Pose, b: Pose, tol: float = 1e-9) -> bool:
    return (
        a.frame == b.frame
        and a.child == b.child
        and float(np.max(np.abs(a.position - b.position))) <= tol
        and a.orientation.angle_to(b.orientation) <= tol
    )


@dataclass(frozen=True)
class CameraModel:
    """Tangent-plane camera: half field of view per axis and detection range."""

    hfov_half: float = math.radians(40.0)
    vfov_half: float = math.radians(32.0)
    max_range: float = 8.0

    def __post_init__(self):
        for name in ("hfov_half", "vfov_half"):
            a = getattr(self, name)
            if not 0.0 < a < math.pi / 2:
                raise GeometryError(f"{name} must be in (0, pi/2), got {a}")
        if not self.max_range > 0:
            raise GeometryError("max_range must be positive")


def project(camera_pose: Pose, target, cam: CameraModel) -> Optional[tuple[float, float]]:
    """Normalized pixel coordinates of a world point, or None when unseen.

    ``u = tan(azimuth) / tan(hfov_half)`` and ``v = tan(elevation) /
    tan(vfov_half)`` with v positive below the image centre.
    """
    rel = vec3(target) - camera_pose.position
    p = camera_pose.orientation.inv().apply(rel)
    if p[0] <= 0.0:
        return None
    if math.sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]) > cam.max_range:
        return None
    th, tv = math.tan(cam.hfov_half), math.tan(cam.vfov_half)
    # Gate before dividing so a near-zero depth cannot overflow.  The
    # boundary is inclusive up to rounding.
    lim = 1.0 + 1e-12
    if abs(p[1]) > lim * th * p[0] or abs(p[2]) > lim * tv * p[0]:
        return None
    u = (p[1] / p[0]) / th
    v = (p[2] / p[0]) / tv
    return (float(u), float(v))


def drone_yaw(drone_pose: Pose) -> float:
    m = drone_pose.matrix()
    return math.atan2(m[1, 0], m[0, 0])


def check_gimbal_tilt(tilt: float) -> None:
    if not (GIMBAL_MIN_TILT - 1e-12 <= tilt <= GIMBAL_MAX_TILT + 1e-12):
        raise GeometryError(
            f"gimbal tilt {math.degrees(tilt):.3f} deg outside [-85, 0] deg"
        )


def gimbal_camera_pose(drone_pose: Pose, gimbal_tilt: float) -> Pose:
    """Camera pose in world for a roll-stabilized, pitch-only gimbal.

    The camera sits at the drone centre, shares the drone's yaw, and is
    pitched by ``gimbal_tilt`` (0 = forward, negative = down).
    """
    check_gimbal_tilt(gimbal_tilt)
    q = euler_to_rotation(0.0, gimbal_tilt, drone_yaw(drone_pose))
    return Pose(drone_pose.position, q, drone_pose.frame, Frame.CAMERA)


def level_pad_target(marker_pose_in_camera: Pose) -> tuple[np.ndarray, float]:
    """Drone displacement from the pad in a level frame, plus pad yaw.

    Assumes the pad is level: the marker's reported normal is taken as
    world-up, and the camera's image-right axis (horizontal because the
    gimbal stabilizes roll) fixes the heading.  Returns
    ``(array([north, east, up]), pad_yaw)`` where north/east are the
    drone's forward/right axes and ``pad_yaw`` is the pad's yaw relative
    to the drone heading, clockwise positive.

    A wrong reported orientation yields a deterministically wrong target;
    nothing here tries to detect that.
    """
    r = marker_pose_in_camera.matrix()
    up = -r[:, 2]
    right = np.array([0.0, 1.0, 0.0]) - up[1] * up
    n = np.linalg.norm(right)
    if n < 1e-9:
        # Marker normal along image-right; fall back to the boresight.
        fwd = np.array([1.0, 0.0, 0.0]) - up[0] * up
        fwd /= np.linalg.norm(fwd)
        right = np.cross(fwd, up)
    else:
        right /= n
        fwd = np.cross(up, right)
    d = -marker_pose_in_camera.position
    target = np.array([d @ fwd, d @ right, d @ up])
    x_m = r[:, 0]
    pad_yaw = math.atan2(x_m @ right, x_m @ fwd)
    return target, pad_yaw


def flip_roll_pitch(marker_pose_in_camera: Pose) -> Pose:
    """Negate the roll and pitch Euler components of a marker orientation.

    Angles are taken in the optical camera convention (z along the
    boresight), where a marker seen head-on has zero roll and pitch.  The
    result mirrors the marker normal about the optical axis, the classic
    planar-pose ambiguity.
    """
    r_opt = FRD_TO_OPTICAL @ marker_pose_in_camera.matrix()
    roll, pitch, yaw = _matrix_to_euler(r_opt, strict=False)
    flipped = euler_to_rotation(-roll, -pitch, yaw).as_matrix()
    q = Rotation.from_matrix(FRD_TO_OPTICAL.T @ flipped)
    return Pose(
        marker_pose_in_camera.position,
        q,
        marker_pose_in_camera.frame,
        marker_pose_in_camera.child,
    )


def ned_to_neu(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    return np.array([v[0], v[1], -v[2]])
