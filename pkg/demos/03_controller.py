"""
The landing state machine
=========================

Feed a hand-made detection stream through the controller and watch the
phases advance.  Every command is clamped to [-0.2, 0.2] and the
throttle can only push down.
"""

import math

from gimbal_landing.controller import ControllerConfig, LandingController, approach_command
from gimbal_landing.marker_model import Detection

cfg = ControllerConfig.for_profile("apriltag48h12")
ctl = LandingController(cfg)


def det(north, east, up, pad_yaw=0.0, pixel=(0.05, 0.1)):
    return Detection((north, east, up), pixel, pad_yaw, 0.0, "apriltag48h12")


script = [
    (None, 0.4),                      # climbing
    (None, 1.2),                      # reached takeoff altitude: search
    (det(-2.4, 0.1, 1.2), 1.2),       # three sightings in a row lock on
    (det(-2.4, 0.1, 1.2), 1.2),
    (det(-2.3, 0.1, 1.2), 1.2),
    (det(-0.9, 0.05, 1.2), 1.2),
    (det(-0.3, 0.0, 1.2, 0.6), 1.2),  # close enough: align with the pad
    (det(-0.1, 0.0, 1.2, 0.05), 1.2),  # aligned: descend
    (det(0.05, 0.0, 0.8), 0.8),
    (det(0.02, 0.0, 0.3), 0.3),       # below commit height: blind descent
]
for k, (d, alt) in enumerate(script):
    cmd, phase = ctl.step(d, alt, 0.2 * k)
    print(f"t={0.2 * k:3.1f}  {phase.value:<15}", " ".join(f"{v:+.3f}" for v in cmd.as_tuple()))

# The deadzone: inside 0.2 m, pitch and roll are exactly zero, so even a
# wildly wrong position target inside it does nothing.
for r in (0.15, 0.25, 1.0, 3.0):
    c = approach_command(det(-r * math.cos(0.3), -r * math.sin(0.3), 1.0), cfg)
    print(f"planar distance {r:4.2f} m -> pitch {c.pitch:+.3f}, roll {c.roll:+.3f}")
