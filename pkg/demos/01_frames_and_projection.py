"""
Frames, projection and the level-pad target
===========================================

The world frame is North-East-Down, so a positive yaw turns the drone
clockwise.  The camera rides a pitch-only gimbal and reports where the
pad sits in the image as normalized (u, v) in [-1, 1].
"""

import math

import numpy as np

from gimbal_landing.geometry import (
    CameraModel,
    Frame,
    Pose,
    compose,
    euler_to_rotation,
    flip_roll_pitch,
    gimbal_camera_pose,
    invert,
    level_pad_target,
    ned_to_neu,
    project,
)
from gimbal_landing.marker_model import pad_pose

np.set_printoptions(precision=3, suppress=True)

# A drone 1.5 m up and 2 m south of the pad, facing north, camera tilted
# 30 degrees down.
drone = Pose(np.array([-2.0, 0.0, -1.5]), euler_to_rotation(0, 0, 0), Frame.WORLD, Frame.BODY)
camera = gimbal_camera_pose(drone, math.radians(-30))
pad = pad_pose(math.radians(40))
print("boresight (N, E, Up):", ned_to_neu(camera.matrix()[:, 0]))

# Where the pad appears in the image; v > 0 means below the centre.
print("pad pixel (u, v):", project(camera, pad.position, CameraModel()))

# The marker pose as a fiducial detector would report it, in camera axes.
marker = compose(invert(camera), Pose(pad.position, pad.orientation, Frame.WORLD, Frame.MARKER))
target, yaw = level_pad_target(marker)
print("position target (N, E, Up):", target, " pad yaw (deg):", round(math.degrees(yaw), 3))

# The same detection with the roll/pitch signs flipped: the recovered
# target tilts with the mirrored normal and lands somewhere else.
wrong, wrong_yaw = level_pad_target(flip_roll_pitch(marker))
print("after a sign flip:           ", wrong, " pad yaw (deg):", round(math.degrees(wrong_yaw), 3))
