"""
Fiducial profiles and their failure modes
=========================================

Each built-in profile degrades a perfect detection in its own way.  The
orientation ambiguity peaks when the camera looks straight down at the
pad, and the multi-marker WhyCode bundle shifts the perceived pad centre
away from the camera.
"""

import math

import numpy as np

from gimbal_landing.geometry import Frame, Pose, Rotation
from gimbal_landing.marker_model import (
    BUILTIN_PROFILES,
    SynthesisFlags,
    ambiguity_probability,
    detection_schedule,
    pad_pose,
    synthesize_detection,
)

print(f"{'profile':<18}{'ambiguity':>10}{'rate Hz':>9}{'frame s':>9}{'min m':>7}")
for p in BUILTIN_PROFILES.values():
    print(f"{p.name.value:<18}{p.ambiguity_base:>10.2f}{p.detection_rate:>9.0f}{detection_schedule(p, 7.0):>9.3f}{p.min_range:>7.1f}")

# Flip probability against incidence angle (0 = camera normal to the pad).
thetas = np.radians([0, 20, 40, 60, 80, 90])
print("\nincidence deg:", np.degrees(thetas).round())
for p in BUILTIN_PROFILES.values():
    print(f"{p.name.value:<18}", np.round([ambiguity_probability(t, p) for t in thetas], 3))

# Multi-marker bias: view the pad at 0.5 rad incidence from 2 m up.
theta = 0.5
drone = Pose(np.array([-2.0 * math.tan(theta), 0.0, -2.0]), Rotation(), Frame.WORLD, Frame.BODY)
tilt = -(math.pi / 2 - theta)
rng = np.random.default_rng(0)
for name in ("whycode-orig", "whycode-multi"):
    det = synthesize_detection(drone, tilt, pad_pose(0.0), BUILTIN_PROFILES[name], rng, 0.0,
                               flags=SynthesisFlags(ambiguity=False, noise=False, loss=False))
    print(f"{name:<15} target north {det.position_target[0]:+.3f} m (truth {drone.position[0]:+.3f})")

# Flip counts over many frames at two incidence angles.
rng = np.random.default_rng(1)
amb = SynthesisFlags(ambiguity=True, noise=False, loss=False, bias=False)
p = BUILTIN_PROFILES["apriltag24h10"]
for theta in (0.1, 1.2):
    d = Pose(np.array([-1.5 * math.tan(theta), 0.0, -1.5]), Rotation(), Frame.WORLD, Frame.BODY)
    flips = sum(synthesize_detection(d, -(math.pi / 2 - theta), pad_pose(0.0), p, rng, 0.0, flags=amb).ambiguity_flip
                for _ in range(2000))
    print(f"24h10 at {math.degrees(theta):4.0f} deg: {flips / 2000:.3f} flipped (model {ambiguity_probability(theta, p):.3f})")
