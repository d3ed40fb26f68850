import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from vatlab.htg import HtgParams, NoiseConfig, add_noise, htg_noisy, htg_policy, noise_sample
from vatlab.sim import (
    ActionCommand,
    ArenaConfig,
    ConfigError,
    Pose2D,
    RelativeState,
    RewardParams,
    relative_state,
    reward,
    step_kinematics,
)

P = HtgParams()


def test_htg_at_optimum():
    cmd = htg_policy(RelativeState(50, 0), P)
    assert (cmd.v_norm, cmd.w_norm) == (0.0, 0.0)


def test_htg_gate_closed():
    cmd = htg_policy(RelativeState(50, math.radians(45)), P)
    assert cmd.w_norm == pytest.approx(-1.0, abs=1e-10)
    assert cmd.v_norm == 0.0


def test_htg_hand_values():
    cmd = htg_policy(RelativeState(70, math.radians(5)), P)
    assert cmd.v_norm == pytest.approx(1.0, abs=1e-10)
    assert cmd.w_norm == pytest.approx(-2 * 5 / 90, abs=1e-10)


def test_htg_gate_strict():
    assert htg_policy(RelativeState(70, math.radians(10)), P).v_norm == 0.0
    assert htg_policy(RelativeState(70, math.radians(9.999)), P).v_norm == 1.0


def test_htg_backs_off_when_close():
    cmd = htg_policy(RelativeState(40, 0), P)
    assert cmd.v_norm == pytest.approx(-0.5, abs=1e-12)


@given(st.floats(0, 500), st.floats(-math.pi, math.pi))
def test_htg_output_range(rho, theta):
    cmd = htg_policy(RelativeState(rho, theta), P)
    assert -1 <= cmd.v_norm <= 1 and -1 <= cmd.w_norm <= 1
    if theta > 0:
        assert cmd.w_norm <= 0


@given(st.floats(100, 400), st.floats(100, 400), st.floats(-math.pi, math.pi),
       st.floats(30, 120), st.floats(-math.pi, math.pi))
def test_htg_one_step_never_increases_bearing(x, y, h, dist, angle):
    cfg = ArenaConfig()
    tracker = Pose2D(x, y, h)
    target = Pose2D(x + dist * math.cos(angle), y + dist * math.sin(angle), 0)
    rel = relative_state(tracker, target)
    moved = step_kinematics(tracker, htg_policy(rel, P), cfg)
    assert abs(relative_state(moved, target).theta) <= abs(rel.theta) + 1e-12


def test_htg_closed_loop_convergence():
    cfg = ArenaConfig()
    rp = RewardParams()
    for seed in range(100):
        rng = np.random.default_rng(seed)
        tracker = Pose2D(*rng.uniform(0, 500, 2), rng.uniform(-math.pi, math.pi))
        target = Pose2D(*rng.uniform(0, 500, 2), 0)
        best = 0.0
        for _ in range(200):
            tracker = step_kinematics(tracker, htg_policy(relative_state(tracker, target), P), cfg)
            best = max(best, reward(relative_state(tracker, target), rp))
            if best > 0.9 * rp.A:
                break
        assert best > 0.9 * rp.A, seed


def test_noise_zero_sigma_is_identity():
    rel = RelativeState(70, 0.05)
    assert htg_noisy(rel, P, NoiseConfig(0.0, 0.0), np.random.default_rng(0)) == htg_policy(rel, P)


def test_noise_reproducible_and_clamped():
    rel = RelativeState(90, 0.4)
    a = [htg_noisy(rel, P, NoiseConfig(), np.random.default_rng(3)) for _ in range(3)]
    assert a[0] == a[1] == a[2]
    rng = np.random.default_rng(0)
    for _ in range(500):
        c = htg_noisy(rel, P, NoiseConfig(0, 3.0), rng)
        assert -1 <= c.v_norm <= 1 and -1 <= c.w_norm <= 1


def test_noise_std_pre_clamp():
    rng = np.random.default_rng(11)
    draws = np.array([noise_sample(NoiseConfig(0.0, 0.5), rng) for _ in range(10_000)])
    assert draws.std(axis=0) == pytest.approx([0.5, 0.5], rel=0.03)
    assert abs(draws.mean()) < 0.02
    # add_noise is exactly clamp(clean + sample) on the same stream
    clean = htg_policy(RelativeState(70, 0.05), P)
    eps = noise_sample(NoiseConfig(), np.random.default_rng(123))
    got = add_noise(clean, NoiseConfig(), np.random.default_rng(123))
    np.testing.assert_array_equal([got.v_norm, got.w_norm],
                                  np.clip([clean.v_norm + eps[0], clean.w_norm + eps[1]], -1, 1))


def test_noise_config_invariant():
    with pytest.raises(ConfigError):
        NoiseConfig(0, -0.1).validate()
