import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from vatlab.observe import (
    COLOR_SEPARATION,
    ObservationMode,
    SceneRandomization,
    observe,
    randomize_scene,
    read_ppm,
    render_raster,
    target_box,
    vector_features,
    write_ppm,
)
from vatlab.sim import ArenaConfig, ConfigError, Pose2D, RelativeState, WorldState

FOV = math.radians(90)


def test_vector_hand_normalised():
    v = vector_features(RelativeState(50, 0), FOV)
    np.testing.assert_allclose(v, [1, 1 / 3, 0, 1], atol=1e-15)


def test_vector_masked_behind():
    assert np.array_equal(vector_features(RelativeState(50, math.pi), FOV), np.zeros(4))
    assert np.array_equal(vector_features(RelativeState(50, math.radians(46)), FOV), np.zeros(4))


def test_vector_clamps_distance():
    assert vector_features(RelativeState(400, 0.1), FOV)[1] == 1.0


@given(st.floats(0, 400), st.floats(-math.pi, math.pi), st.integers(0, 1000))
def test_vector_noisy_ranges(rho, theta, seed):
    v = vector_features(RelativeState(rho, theta), FOV, 0.3, np.random.default_rng(seed))
    assert v.shape == (4,)
    if v[0] == 0:
        assert not v.any()
    else:
        assert 0 <= v[1] <= 1 and -1 <= v[2] <= 1 and -1 <= v[3] <= 1


def test_scene_determinism_and_separation():
    assert randomize_scene(np.random.default_rng(4)) == randomize_scene(np.random.default_rng(4))
    rng = np.random.default_rng(0)
    lights = []
    for _ in range(1000):
        s = randomize_scene(rng)
        assert np.max(np.abs(np.subtract(s.target_color, s.wall_color))) >= COLOR_SEPARATION
        lights.append(s.light)
    lights = np.array(lights)
    assert lights.min() >= 0.4 and lights.max() <= 1.0
    # uniform on [0.4, 1.0]: compare deciles with a generous Kolmogorov bound
    emp = np.sort(lights)
    cdf = (emp - 0.4) / 0.6
    ks = np.max(np.abs(cdf - np.arange(1, 1001) / 1000))
    assert ks < 1.63 / math.sqrt(1000)  # 1% critical value


def test_raster_centered_block():
    box = target_box(RelativeState(50, 0), FOV, 84, 84)
    r0, r1, c0, c1 = box
    assert abs((c0 + c1) / 2 - 42) <= 1
    assert r1 - r0 == pytest.approx(84 / 4, abs=1)


def test_raster_column_monotone_in_bearing():
    centres = []
    for deg in np.linspace(-40, 40, 17):
        c0, c1 = target_box(RelativeState(80, math.radians(deg)), FOV, 84, 84)[2:]
        centres.append((c0 + c1) / 2)
    assert all(b >= a for a, b in zip(centres, centres[1:]))
    assert centres[-1] > centres[0]


def test_raster_size_shrinks_with_distance():
    heights = [np.subtract(*target_box(RelativeState(r, 0), FOV, 84, 84)[1::-1]) for r in (30, 50, 80, 150, 300)]
    assert all(b <= a for a, b in zip(heights, heights[1:]))
    assert heights[0] > heights[-1]


def test_raster_absent_out_of_view():
    scene = SceneRandomization()
    img = render_raster(RelativeState(50, math.pi / 2), scene, FOV, 84, 84)
    assert target_box(RelativeState(50, math.pi / 2), FOV, 84, 84) is None
    assert not np.any(np.all(np.isclose(img, scene.target_color), axis=-1))


def test_raster_geometry_independent_of_scene():
    rel = RelativeState(60, math.radians(12))
    masks = []
    for seed in range(5):
        scene = randomize_scene(np.random.default_rng(seed))
        img = render_raster(rel, scene, FOV, 84, 84)
        masks.append(np.all(np.isclose(img, np.clip(np.asarray(scene.target_color) * scene.light, 0, 1)), axis=-1))
    for m in masks[1:]:
        assert np.array_equal(m, masks[0])


def test_raster_values_in_unit_range():
    img = render_raster(RelativeState(20, 0.1), randomize_scene(np.random.default_rng(1)), FOV, 84, 84)
    assert img.shape == (84, 84, 3)
    assert img.min() >= 0 and img.max() <= 1


def test_observe_dispatch():
    world = WorldState(Pose2D(100, 100, 0), Pose2D(150, 100, 0))
    cfg = ArenaConfig()
    v = observe(world, ObservationMode(), SceneRandomization(), cfg)
    np.testing.assert_allclose(v, [1, 1 / 3, 0, 1], atol=1e-15)
    r = observe(world, ObservationMode("raster", 32, 24), SceneRandomization(), cfg)
    assert r.shape == (24, 32, 3)


def test_ppm_roundtrip(tmp_path):
    img = render_raster(RelativeState(50, 0.2), randomize_scene(np.random.default_rng(2)), FOV, 40, 30)
    path = tmp_path / "obs.ppm"
    write_ppm(path, img)
    assert path.read_bytes().startswith(b"P6\n40 30\n255\n")
    back = read_ppm(path)
    assert back.shape == img.shape
    assert np.max(np.abs(back - img)) <= 0.5 / 255 + 1e-12


def test_mode_invariants():
    with pytest.raises(ConfigError):
        ObservationMode("depth").validate()
    with pytest.raises(ConfigError):
        ObservationMode("raster", 4, 84).validate()
    with pytest.raises(ConfigError):
        ObservationMode(vector_noise_std=-1).validate()
