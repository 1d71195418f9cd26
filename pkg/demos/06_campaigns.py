"""
The rotation campaign for every profile
=======================================

Twenty landings per profile with the pad turned 18 degrees clockwise
each time.  Four systems land every time; the multi-marker bundle
overshoots and never does.
"""

import os
import time

from gimbal_landing.harness import run_campaign
from gimbal_landing.marker_model import PROFILE_NAMES

workers = min(4, os.cpu_count() or 1)
t0 = time.perf_counter()
print(f"{'profile':<18}{'successes':>10}{'median m':>10}{'max m':>8}")
for name in PROFILE_NAMES:
    c = run_campaign(name, base_seed=1, workers=workers)
    r = c.radius_summary()
    med = "-" if r["median"] is None else f"{r['median']:.3f}"
    mx = "-" if r["max"] is None else f"{r['max']:.3f}"
    print(f"{name:<18}{c.successes:>7}/20{med:>10}{mx:>8}")
print(f"{time.perf_counter() - t0:.1f} s with {workers} workers")
