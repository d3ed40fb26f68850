import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vatlab.ddpg import InsufficientDataError, ReplayBuffer, Trajectory, mix_schedule, sample_batch
from vatlab.ddpg.trainer import TrainConfig, episode_source


def _traj(T: int, tag: int, source: str = "actor") -> Trajectory:
    # observation i of trajectory `tag` is [tag, i]; everything else encodes the step too
    steps = np.arange(T + 1, dtype=float)
    obs = np.stack([np.full(T + 1, float(tag)), steps], axis=1)
    return Trajectory(obs, np.stack([steps[:-1], -steps[:-1]], axis=1), steps[:-1] / 1000, steps[:-1] + 0.5,
                      -steps[:-1], source)


def _assert_windows_valid(batch, lengths):
    tags = batch.obs[..., 0]
    assert np.all(tags == tags[0]), "window crosses trajectories"
    expect = batch.start[None, :] + np.arange(batch.length)[:, None]  # (L, B)
    np.testing.assert_array_equal(batch.obs[..., 1], expect)
    np.testing.assert_array_equal(batch.next_obs[..., 1], expect + 1)
    np.testing.assert_array_equal(batch.actions[..., 0], expect)
    np.testing.assert_array_equal(batch.true_rho, expect + 0.5)
    assert np.all(batch.start + batch.length <= np.asarray(lengths)[tags[0].astype(int)])


def test_windows_never_cross_boundaries_1e5_samples():
    rng = np.random.default_rng(0)
    lengths = rng.integers(1, 40, size=60)
    buf = ReplayBuffer(100)
    for tag, T in enumerate(lengths):
        buf.add(_traj(int(T), tag))
    total = 0
    for L in (1, 3, 5, 8):
        for _ in range(25):
            batch = sample_batch(buf, 1000, L, rng)
            _assert_windows_valid(batch, lengths)
            total += batch.size
    assert total == 100_000


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(1, 30), min_size=1, max_size=12), st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_windows_valid_property(lengths, L, seed):
    buf = ReplayBuffer(50)
    for tag, T in enumerate(lengths):
        buf.add(_traj(T, tag))
    if max(lengths) < L:
        with pytest.raises(InsufficientDataError):
            sample_batch(buf, 4, L, np.random.default_rng(seed))
        return
    _assert_windows_valid(sample_batch(buf, 64, L, np.random.default_rng(seed)), lengths)


def test_seventy_step_trajectory_has_66_windows():
    buf = ReplayBuffer()
    buf.add(_traj(70, 0, "htg"))
    assert buf.window_counts(5)[-1] == 66
    starts = sample_batch(buf, 20_000, 5, np.random.default_rng(1)).start
    assert starts.min() == 0 and starts.max() == 65
    assert len(np.unique(starts)) == 66


def test_sampling_uniform_over_windows():
    buf = ReplayBuffer()
    buf.add(_traj(5, 0))  # 1 window of L=5
    buf.add(_traj(13, 1))  # 9 windows
    tags = sample_batch(buf, 50_000, 5, np.random.default_rng(2)).obs[0, :, 0]
    assert np.mean(tags == 0) == pytest.approx(0.1, abs=0.01)


def test_l1_is_transition_sampling():
    buf = ReplayBuffer()
    buf.add(_traj(10, 0))
    batch = sample_batch(buf, 500, 1, np.random.default_rng(3))
    assert batch.obs.shape == (1, 500, 2)
    assert set(batch.start.tolist()) == set(range(10))


def test_batch_is_time_major_and_tagged():
    buf = ReplayBuffer()
    buf.add(_traj(12, 0, "htg"))
    batch = sample_batch(buf, 7, 4, np.random.default_rng(4))
    assert batch.obs.shape == (4, 7, 2) and batch.actions.shape == (4, 7, 2) and batch.rewards.shape == (4, 7)
    assert batch.sources == ["htg"] * 7


def test_fixed_seed_identical_batch():
    buf = ReplayBuffer()
    for tag in range(5):
        buf.add(_traj(20 + tag, tag))
    a = sample_batch(buf, 32, 5, np.random.default_rng(9))
    b = sample_batch(buf, 32, 5, np.random.default_rng(9))
    np.testing.assert_array_equal(a.obs, b.obs)
    np.testing.assert_array_equal(a.start, b.start)


def test_insufficient_data():
    buf = ReplayBuffer()
    with pytest.raises(InsufficientDataError):
        sample_batch(buf, 1, 1, np.random.default_rng(0))
    buf.add(_traj(4, 0))
    with pytest.raises(InsufficientDataError):
        sample_batch(buf, 1, 5, np.random.default_rng(0))
    with pytest.raises(ValueError):
        sample_batch(buf, 0, 1, np.random.default_rng(0))


def test_capacity_fifo_never_exceeded():
    buf = ReplayBuffer(capacity=3)
    for tag in range(10):
        buf.add(_traj(6, tag, "htg" if tag % 2 else "actor"))
        assert len(buf) <= 3
    assert [int(t.observations[0, 0]) for t in buf.trajectories] == [7, 8, 9]
    assert buf.added == {"actor": 5, "htg": 5}
    assert buf.counts() == {"actor": 1, "htg": 2}
    # the window index is rebuilt after eviction
    assert set(sample_batch(buf, 300, 6, np.random.default_rng(0)).obs[0, :, 0].tolist()) == {7, 8, 9}
    with pytest.raises(ValueError):
        ReplayBuffer(0)


def test_trajectory_consistency_checks():
    with pytest.raises(ValueError):
        Trajectory(np.zeros((3, 4)), np.zeros((3, 2)), np.zeros(3), np.zeros(3), np.zeros(3), "actor")
    with pytest.raises(ValueError):
        Trajectory(np.zeros((4, 4)), np.zeros((3, 2)), np.zeros(3), np.zeros(3), np.zeros(3), "expert")


def test_mix_schedule_first_cycle():
    assert [mix_schedule(i) for i in range(5)] == ["actor", "htg", "htg", "htg", "htg"]


def test_mix_schedule_long_run_ratio_exact():
    tags = [mix_schedule(i, (1, 4)) for i in range(100_000)]
    assert tags.count("actor") * 4 == tags.count("htg")


def test_mix_schedule_step_ratio():
    cfg = TrainConfig()
    steps = {"actor": 0, "htg": 0}
    for i in range(1000):
        src = episode_source(i, cfg)
        steps[src] += 250 if src == "actor" else cfg.htg_episode_len
    assert steps["actor"] / steps["htg"] == pytest.approx(250 / 280, abs=1e-12)


def test_mix_schedule_inverse_and_ablation():
    assert [mix_schedule(i, (4, 1)) for i in range(5)] == ["actor"] * 4 + ["htg"]
    assert {episode_source(i, TrainConfig(use_htg=False)) for i in range(50)} == {"actor"}
    annealed = TrainConfig(htg_anneal_episodes=10)
    assert episode_source(9, annealed) == "htg" and episode_source(11, annealed) == "actor"
    # the worker's own count drives the interleave; the global index only drives annealing
    assert episode_source(5, TrainConfig(), local_index=1) == "htg"
    assert episode_source(11, annealed, local_index=0) == "actor"
    with pytest.raises(ValueError):
        mix_schedule(0, (0, 0))
