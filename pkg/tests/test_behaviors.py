import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from vatlab.behaviors import BehaviorSpec, BehaviorState, format_scenario, parse_scenario, target_action
from vatlab.sim import ActionCommand, ArenaConfig, ConfigError, Pose2D, WorldState, step_kinematics

CFG = ArenaConfig()
WORLD = WorldState(Pose2D(100, 100, 0), Pose2D(250, 250, 0.3))


def test_static_is_zero():
    cmd, st_ = target_action(BehaviorSpec(), BehaviorState(), WORLD, np.random.default_rng(0), CFG)
    assert cmd == ActionCommand(0.0, 0.0)
    assert st_ == BehaviorState()


def test_circular_full_caps():
    spec = BehaviorSpec.circular(8, 8, 0.0)
    cmd, _ = target_action(spec, BehaviorState(direction=1), WORLD, np.random.default_rng(0), CFG)
    assert cmd.v_norm == pytest.approx(1.0, abs=1e-15)
    assert cmd.w_norm == pytest.approx(1.0, abs=1e-15)


def test_circular_3_3():
    spec = BehaviorSpec.circular(3, 3, 0.0)
    cmd, _ = target_action(spec, BehaviorState(direction=-1), WORLD, np.random.default_rng(0), CFG)
    assert cmd.v_norm == pytest.approx(3 / 8)
    assert cmd.w_norm == pytest.approx(-3 / 8)


def test_circular_switch_rate():
    spec = BehaviorSpec.circular(3, 3, 0.2)
    rng = np.random.default_rng(3)
    state, flips, n = BehaviorState(), 0, 20_000
    for _ in range(n):
        _, new = target_action(spec, state, WORLD, rng, CFG)
        flips += new.direction != state.direction
        state = new
    assert abs(flips / n - 0.2) < 4 * math.sqrt(0.2 * 0.8 / n)


def test_circular_closes_loop():
    spec = BehaviorSpec.circular(3, 3, 0.0)
    rng = np.random.default_rng(0)
    start = Pose2D(250, 250, 0.0)
    pose, state = start, BehaviorState()
    k = math.ceil(2 * math.pi / spec.steering)
    for _ in range(k):
        cmd, state = target_action(spec, state, WorldState(Pose2D(0, 0, 0), pose), rng, CFG)
        pose = step_kinematics(pose, cmd, CFG)
    diff = abs(math.remainder(pose.heading - start.heading, 2 * math.pi))
    assert diff <= spec.steering + 1e-12
    assert math.hypot(pose.x - start.x, pose.y - start.y) < 3.0 + 1e-9


@given(st.floats(0, 8), st.floats(0, 8), st.integers(0, 2**31))
def test_waypoint_commands_within_caps(speed, steer, seed):
    spec = BehaviorSpec.waypoint(speed, steer)
    rng = np.random.default_rng(seed)
    state = BehaviorState()
    world = WorldState(Pose2D(0, 0, 0), Pose2D(*rng.uniform(0, 500, 2), rng.uniform(-3, 3)))
    for _ in range(20):
        cmd, state = target_action(spec, state, world, rng, CFG)
        assert abs(cmd.v_norm) * CFG.v_max <= speed + 1e-9
        assert abs(cmd.w_norm) * CFG.w_max <= spec.steering + 1e-12
        world = WorldState(world.tracker, step_kinematics(world.target, cmd, CFG))


def test_waypoint_resampled_when_reached():
    spec = BehaviorSpec.waypoint(3, 3)
    here = Pose2D(250, 250, 0)
    world = WorldState(Pose2D(0, 0, 0), here)
    s1 = target_action(spec, BehaviorState(waypoint=here), world, np.random.default_rng(5), CFG)[1]
    s2 = target_action(spec, BehaviorState(waypoint=here), world, np.random.default_rng(5), CFG)[1]
    assert s1.waypoint != here
    assert s1 == s2


def test_waypoint_reaches_goals():
    spec = BehaviorSpec.waypoint(8, 8)
    rng = np.random.default_rng(1)
    world = WorldState(Pose2D(0, 0, 0), Pose2D(250, 250, 0))
    state = BehaviorState()
    seen = set()
    for _ in range(2000):
        cmd, state = target_action(spec, state, world, rng, CFG)
        seen.add((state.waypoint.x, state.waypoint.y))
        world = WorldState(world.tracker, step_kinematics(world.target, cmd, CFG))
    assert len(seen) >= 5


def test_behavior_determinism():
    spec = BehaviorSpec.circular(5, 5, 0.1)

    def roll(seed):
        rng, state, out = np.random.default_rng(seed), BehaviorState(), []
        for _ in range(100):
            cmd, state = target_action(spec, state, WORLD, rng, CFG)
            out.append(cmd)
        return out

    assert roll(9) == roll(9)


@pytest.mark.parametrize("text", ["static", "circular:3:3:0.01", "circular:8:3:0", "waypoint:5:5"])
def test_scenario_roundtrip(text):
    spec = parse_scenario(text)
    assert parse_scenario(format_scenario(spec)) == spec


def test_scenario_default_switch_prob():
    assert parse_scenario("circular:3:3").switch_prob == 0.01


@pytest.mark.parametrize("text", ["circle:3:3", "circular:x:3", "waypoint:3", "static:1"])
def test_scenario_rejects(text):
    with pytest.raises(ConfigError):
        parse_scenario(text)


@pytest.mark.parametrize("spec", [
    BehaviorSpec.circular(9, 3), BehaviorSpec.circular(3, 9), BehaviorSpec.circular(3, 3, 1.5),
    BehaviorSpec("spiral"),
])
def test_spec_invariants(spec):
    with pytest.raises(ConfigError):
        spec.validate(CFG)
