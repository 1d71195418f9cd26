"""
One landing, end to end
=======================

Run a single seeded trial, print its phase timeline and write the logs
and plot tables to a scratch directory.
"""

import math
import sys
import tempfile
from pathlib import Path

from gimbal_landing import export
from gimbal_landing.harness import TrialConfig, run_trial
from gimbal_landing.marker_model import get_profile

profile = sys.argv[1] if len(sys.argv) > 1 else "apriltag48h12"
result = run_trial(TrialConfig(get_profile(profile), pad_yaw=math.radians(-54), seed=7))

print(f"{profile}: {result.termination.value} after {result.duration:.1f} s, radius {result.landing_radius}")
for t, phase in result.phase_timeline:
    print(f"  {t:6.2f} s  {phase.value}")
print(f"{len(result.flip_times)} ambiguity flips reached the controller")

out = Path(tempfile.mkdtemp(prefix="trial_"))
for name, path in export.write_trial(result, out).items():
    print(f"{name:<10} {path}")
