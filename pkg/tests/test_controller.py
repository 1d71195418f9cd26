import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gimbal_landing.controller import (
    LIMIT,
    NEUTRAL,
    CommandError,
    ControlCommand,
    ControllerConfig,
    LandingController,
    Phase,
    approach_command,
    clamp,
    descent_command,
    search_command,
    step,
    track_command,
    yaw_align_command,
)
from gimbal_landing.geometry import Frame, Pose, Rotation
from gimbal_landing.marker_model import Detection, SynthesisFlags, get_profile, pad_pose, synthesize_detection

CFG = ControllerConfig()


def det(target=(0.0, 0.0, 1.0), pixel=(0.0, 0.0), pad_yaw=0.0, t=0.0, flip=False):
    return Detection(tuple(map(float, target)), tuple(map(float, pixel)), pad_yaw, t, "apriltag48h12", flip)


detections = st.builds(
    det,
    st.tuples(st.floats(-20, 20), st.floats(-20, 20), st.floats(-1, 10)),
    st.tuples(st.floats(-1, 1), st.floats(-1, 1)),
    st.floats(-10, 10),
)


# -- clamp -------------------------------------------------------------------------


def test_clamp_examples():
    c = clamp(ControlCommand(0.5, -0.5, -0.05, 0.1, 0.3))
    assert c == ControlCommand(0.2, -0.2, -0.05, 0.0, 0.2)
    assert clamp(ControlCommand(throttle=-0.5)).throttle == -0.2


@pytest.mark.parametrize("bad", [float("nan"), float("inf")])
def test_clamp_rejects_non_finite(bad):
    with pytest.raises(CommandError):
        clamp(ControlCommand(pitch=bad))


@given(st.lists(st.floats(-1e6, 1e6), min_size=5, max_size=5))
def test_clamp_always_valid(vals):
    assert clamp(ControlCommand(*vals)).is_valid()


# -- search --------------------------------------------------------------------------


@given(st.floats(0, 1e4))
def test_search_spins_counterclockwise(t):
    c = search_command(t, CFG)
    assert c.yaw < 0 and c.throttle == 0 and c.pitch == 0 and c.roll == 0


def test_search_periodic_and_symmetric():
    T = CFG.gimbal_sweep_period
    assert search_command(0.0, CFG).gimbal_tilt == search_command(T, CFG).gimbal_tilt
    q, q3 = search_command(T / 4, CFG).gimbal_tilt, search_command(3 * T / 4, CFG).gimbal_tilt
    assert q == -q3 and q < 0


def test_search_sweep_traces_the_range():
    # Integrate the rate with a unit-scale gimbal over one period.
    cfg = replace(CFG, gimbal_sweep_range=(math.radians(-30), 0.0))
    dt = 0.001
    tilt, lo = 0.0, 0.0
    for k in range(int(cfg.gimbal_sweep_period / dt)):
        tilt += search_command(k * dt, cfg).gimbal_tilt * dt
        lo = min(lo, tilt)
    assert lo == pytest.approx(math.radians(-30), abs=1e-3)
    assert tilt == pytest.approx(0.0, abs=1e-3)


# -- per-phase laws ----------------------------------------------------------------------


def test_track_examples():
    assert track_command(det(pixel=(0, 0)), CFG) == (0.0, 0.0)
    yaw, _ = track_command(det(pixel=(0.5, 0)), CFG)
    assert yaw == 0.2
    assert track_command(det(pixel=(0.1, 0)), CFG)[0] == pytest.approx(0.08)
    assert track_command(det(pixel=(0, 0.3)), CFG)[1] < 0


@given(st.floats(-0.2, 0.2), st.floats(-0.2, 0.2))
def test_track_is_odd(u, v):
    a = track_command(det(pixel=(u, v)), CFG)
    b = track_command(det(pixel=(-u, -v)), CFG)
    assert a == (-b[0], -b[1])


def test_approach_examples():
    inside = approach_command(det(target=(-0.1, 0.0, 1.2)), CFG)
    assert inside.pitch == 0 and inside.roll == 0
    ahead = approach_command(det(target=(-2.0, 0.0, 1.2)), CFG)
    assert ahead.pitch > 0 and abs(ahead.roll) < 1e-12 and ahead.throttle == 0
    far = approach_command(det(target=(-3.0, 0.0, 1.2)), CFG)
    assert far.pitch == 0.2
    right = approach_command(det(target=(0.0, -0.5, 1.2)), CFG)
    assert right.roll == pytest.approx(0.15) and right.pitch == 0


def test_yaw_align_examples():
    assert yaw_align_command(det(pad_yaw=0.0), CFG).yaw == 0
    assert yaw_align_command(det(pad_yaw=0.1), CFG).yaw == pytest.approx(0.1)
    eps = 1e-3
    a = yaw_align_command(det(pad_yaw=math.pi - eps), replace(CFG, yaw_align_gain=0.05)).yaw
    b = yaw_align_command(det(pad_yaw=-math.pi + eps), replace(CFG, yaw_align_gain=0.05)).yaw
    assert a * b < 0 and abs(abs(a) - abs(b)) < 1e-9
    assert yaw_align_command(det(pad_yaw=0.1), CFG).throttle == 0


def test_descent_examples():
    c = descent_command(det(target=(0, 0, 1.0)), CFG)
    assert c.throttle < 0 and c.pitch == 0 and c.roll == 0
    off = descent_command(det(target=(0.5, 0, 1.0)), CFG)
    assert off.pitch != 0 and off.throttle < 0


@given(detections)
def test_descent_never_climbs(d):
    assert descent_command(d, CFG).throttle <= 0


def test_descent_throttle_over_10000_random():
    rng = np.random.default_rng(1)
    for _ in range(10_000):
        d = det(rng.uniform(-5, 5, 3), rng.uniform(-1, 1, 2), rng.uniform(-4, 4))
        c = descent_command(d, CFG)
        assert -LIMIT <= c.throttle <= 0


@given(st.floats(0.0, 0.1999), st.floats(-math.pi, math.pi), st.floats(-1, 1))
def test_deadzone_zeroes_planar(r, bearing, pad_yaw):
    d = det(target=(r * math.cos(bearing), r * math.sin(bearing), 0.8), pad_yaw=pad_yaw)
    for law in (approach_command, yaw_align_command, descent_command):
        c = law(d, CFG)
        assert c.pitch == 0.0 and c.roll == 0.0


@given(st.floats(0.25, 0.6), st.floats(-math.pi, math.pi), st.floats(-0.01, 0.01), st.floats(-0.01, 0.01))
def test_planar_commands_continuous_outside_deadzone(r, bearing, dn, de):
    n, e = r * math.cos(bearing), r * math.sin(bearing)
    a = approach_command(det(target=(n, e, 1)), CFG)
    b = approach_command(det(target=(n + dn, e + de, 1)), CFG)
    bound = CFG.approach_gain * math.hypot(dn, de) + 1e-12
    assert abs(a.pitch - b.pitch) <= bound and abs(a.roll - b.roll) <= bound


def flipped_pair(north, alt, tilt):
    p = replace(get_profile("apriltag48h12"), ambiguity_base=1 / 1.02)
    d = Pose(np.array([north, 0, -alt]), Rotation(), Frame.WORLD, Frame.BODY)
    off = SynthesisFlags(ambiguity=False, noise=False, loss=False, bias=False)
    on = replace(off, ambiguity=True)
    good = synthesize_detection(d, tilt, pad_pose(0.3), p, np.random.default_rng(0), 0.0, flags=off)
    bad = synthesize_detection(d, tilt, pad_pose(0.3), p, np.random.default_rng(0), 0.0, flags=on)
    assert bad.ambiguity_flip
    return good, bad


def test_flip_causes_planar_discontinuity():
    good, bad = flipped_pair(-0.6, 1.5, -math.atan2(1.5, 0.6))
    a, b = approach_command(good, CFG), approach_command(bad, CFG)
    assert math.hypot(a.pitch - b.pitch, a.roll - b.roll) > 0.1


def test_flip_inside_deadzone_has_no_effect():
    good, bad = flipped_pair(-0.1, 1.0, math.radians(-85))
    assert good.planar_distance < CFG.deadzone_radius and bad.planar_distance < CFG.deadzone_radius
    for law in (approach_command, descent_command):
        a, b = law(good, CFG), law(bad, CFG)
        assert a.pitch == b.pitch == 0.0 and a.roll == b.roll == 0.0


# -- state machine -------------------------------------------------------------------------


def test_takeoff_is_neutral_until_altitude():
    ctl = LandingController(CFG)
    assert ctl.step(None, 0.5, 0.0) == (NEUTRAL, Phase.TAKEOFF)
    cmd, phase = ctl.step(None, 1.2, 1.0)
    assert phase is Phase.SEARCH and cmd.yaw < 0


def test_lock_after_three_consecutive():
    ctl = LandingController(CFG, Phase.SEARCH)
    phases = [ctl.step(det(target=(-2, 0, 1.2)), 1.2, 0.1 * k)[1] for k in range(3)]
    assert phases == [Phase.SEARCH, Phase.SEARCH, Phase.APPROACH]


def test_missed_frame_resets_lock_streak():
    ctl = LandingController(CFG, Phase.SEARCH)
    for k, d in enumerate([det(), det(), None, det(), det()]):
        _, phase = ctl.step(d, 1.2, 0.1 * k)
    assert phase is Phase.SEARCH
    assert ctl.step(det(), 1.2, 0.6)[1] is Phase.APPROACH


def test_full_phase_sequence():
    ctl = LandingController(CFG, Phase.APPROACH)
    assert ctl.step(det(target=(-0.4, 0, 1.2), pad_yaw=1.0), 1.2, 0)[1] is Phase.YAW_ALIGN
    assert ctl.step(det(target=(-0.4, 0, 1.2), pad_yaw=0.5), 1.2, 0.1)[1] is Phase.YAW_ALIGN
    assert ctl.step(det(target=(0, 0, 1.2), pad_yaw=0.1), 1.2, 0.2)[1] is Phase.DESCENT
    assert ctl.step(det(target=(0, 0, 0.5)), 0.5, 0.3)[1] is Phase.DESCENT
    cmd, phase = ctl.step(det(target=(0, 0, CFG.commit_altitude - 0.01)), 0.3, 0.4)
    assert phase is Phase.LANDING_COMMIT and cmd == NEUTRAL
    # Commit is blind: later detections and timeouts change nothing.
    assert ctl.step(det(target=(3, 3, 2)), 0.3, 0.5) == (NEUTRAL, Phase.LANDING_COMMIT)
    assert ctl.heartbeat(0.3, 10.0) == (NEUTRAL, Phase.LANDING_COMMIT)
    ctl.touchdown()
    assert ctl.phase is Phase.LANDED


def test_dropout_holds_then_falls_back_to_search():
    ctl = LandingController(CFG, Phase.APPROACH)
    ctl.step(det(target=(-2, 0, 1.2), pixel=(0.1, 0.1)), 1.2, 0.0)
    assert ctl.step(None, 1.2, 1.0) == (NEUTRAL, Phase.APPROACH)
    cmd, phase = ctl.step(None, 1.2, 2.0)
    assert phase is Phase.SEARCH and cmd == search_command(2.0, CFG)


def test_heartbeat_keeps_command_in_flight():
    ctl = LandingController(CFG, Phase.APPROACH)
    cmd, _ = ctl.step(det(target=(-2, 0, 1.2), pixel=(0.1, 0.1)), 1.2, 0.0)
    assert ctl.heartbeat(1.2, 1.0) == (cmd, Phase.APPROACH)
    cmd, phase = ctl.heartbeat(1.2, 2.0)
    assert phase is Phase.SEARCH and cmd == search_command(2.0, CFG)


def test_heartbeat_does_not_break_lock_streak():
    ctl = LandingController(CFG, Phase.SEARCH)
    ctl.step(det(), 1.2, 0.0)
    ctl.step(det(), 1.2, 0.1)
    assert ctl.heartbeat(1.2, 0.4) == (search_command(0.4, CFG), Phase.SEARCH)
    assert ctl.step(det(), 1.2, 0.5)[1] is Phase.APPROACH


def test_heartbeat_in_takeoff_checks_altitude():
    ctl = LandingController(CFG)
    assert ctl.heartbeat(0.3, 0.2)[1] is Phase.TAKEOFF
    assert ctl.heartbeat(1.25, 0.4)[1] is Phase.SEARCH


def test_functional_step_matches():
    d = det(target=(0, 0, CFG.commit_altitude - 0.01))
    assert step(Phase.DESCENT, d, 0.3, 5.0, CFG)[1] is Phase.LANDING_COMMIT
    assert step(Phase.TAKEOFF, None, 0.5, 0.0, CFG) == (NEUTRAL, Phase.TAKEOFF)
    assert step(Phase.SEARCH, det(), 1.2, 0.0, CFG, streak=2)[1] is Phase.APPROACH


@given(st.lists(st.one_of(st.none(), detections), min_size=1, max_size=60), st.lists(st.booleans(), min_size=60, max_size=60))
def test_phase_order_monotone_except_search(stream, beats):
    ctl = LandingController(CFG)
    prev = ctl.phase
    committed = False
    for k, d in enumerate(stream):
        t = 0.3 * k
        alt = 1.3 if k else 0.0
        cmd, phase = ctl.heartbeat(alt, t) if beats[k] else ctl.step(d, alt, t)
        assert cmd.is_valid()
        if phase is not prev:
            assert phase.order > prev.order or phase is Phase.SEARCH
        if committed:
            assert phase is Phase.LANDING_COMMIT
        committed = phase is Phase.LANDING_COMMIT
        prev = phase


def test_config_for_profile():
    assert ControllerConfig.for_profile("apriltag24h10").commit_altitude == 0.35
    assert ControllerConfig.for_profile("whycode-ellipse").commit_altitude == 0.6
    assert ControllerConfig.for_profile("whycode-orig", commit_altitude=0.7).commit_altitude == 0.7


@pytest.mark.parametrize("kw", [dict(deadzone_radius=0.0), dict(commit_altitude=-1.0), dict(approach_gain=float("nan"))])
def test_config_invariants(kw):
    with pytest.raises(ValueError):
        ControllerConfig(**kw)


def test_config_defaults():
    c = ControllerConfig()
    assert (c.takeoff_altitude, c.tracking_gain_u, c.tracking_gain_v, c.approach_gain) == (1.2, 0.8, 0.8, 0.3)
    assert (c.yaw_align_gain, c.descent_rate, c.search_yaw_rate, c.gimbal_sweep_period) == (1.0, 0.15, 0.15, 6.0)
    assert (c.deadzone_radius, c.approach_handoff_radius, c.lock_count, c.loss_timeout) == (0.2, 0.5, 3, 2.0)
    assert c.yaw_align_tolerance == pytest.approx(math.radians(10))
