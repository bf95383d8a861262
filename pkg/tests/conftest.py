import numpy as np
import pytest

from lumipose import DEFAULT_INTRINSICS, SceneConfig, make_scene, sample_pose


@pytest.fixture
def intrinsics():
    return DEFAULT_INTRINSICS


@pytest.fixture
def flat_config():
    return SceneConfig(noise_sigma=0.0, seed=123)


@pytest.fixture
def flat_spec(flat_config):
    return make_scene(flat_config)


def tilted_config(tilt_deg, **kwargs):
    kwargs.setdefault("noise_sigma", 0.0)
    kwargs.setdefault("seed", 123)
    return SceneConfig(tilt_deg=tilt_deg, **kwargs)


def random_scene_poses(config, n, seed=0):
    """True poses paired with exact pixel observations."""
    from lumipose import observe

    spec = make_scene(config)
    rng = np.random.default_rng(seed)
    scenes = []
    for _ in range(n):
        pose = sample_pose(config, spec, rng)
        obs = observe(spec, pose, config, rng)
        scenes.append((pose, obs))
    return spec, scenes
