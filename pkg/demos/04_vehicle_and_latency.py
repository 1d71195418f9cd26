"""
Vehicle response and the video link
===================================

Velocity follows the commanded setpoint with a first-order lag, the
gimbal saturates at -85 degrees, and processed frames come back 0.5 to
2 s late, in capture order.
"""

import math

import numpy as np

from gimbal_landing.controller import ControlCommand
from gimbal_landing.vehicle_sim import LatencyPipeline, VehicleParams, VehicleState, step_dynamics

p = VehicleParams()
s = VehicleState(down=-1.0, airborne=True)
for k in range(1, 101):
    s = step_dynamics(s, ControlCommand(pitch=0.2, gimbal_tilt=-0.2), 0.02, p)
    if k % 20 == 0:
        print(f"t={s.t:3.1f} s  forward speed {s.vn:.4f} m/s  tilt {math.degrees(s.gimbal_tilt):7.2f} deg")
print("first-order prediction at 2 s:", round(0.2 * (1 - math.exp(-2 / p.velocity_time_constant)), 4))

for _ in range(1500):
    s = step_dynamics(s, ControlCommand(gimbal_tilt=-0.2), 0.02, p)
print("tilt after 30 s more of down command:", math.degrees(s.gimbal_tilt))

# Seven frames a second through the link.
rng = np.random.default_rng(3)
link = LatencyPipeline(0.5, 2.0)
for k in range(7):
    link.push(None, k / 7, rng)
for t in np.arange(0.0, 3.0, 0.25):
    out = link.pop_all(t)
    if out:
        print(f"t={t:4.2f} s delivered captures", [round(c, 3) for c, _ in out])
