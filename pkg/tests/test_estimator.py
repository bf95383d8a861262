import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from lumipose import (
    CameraPoseEstimator,
    DegenerateObjective,
    SceneConfig,
    make_scene,
    observe,
    sample_pose,
    solve_pose_dh,
    solve_pose_sh,
)
from lumipose.pose_dh import DhSearchConfig


def _scene(tilt_deg=0.0, seed=60, sigma=0.0):
    config = SceneConfig(tilt_deg=tilt_deg, noise_sigma=sigma, seed=seed)
    spec = make_scene(config)
    rng = np.random.default_rng(seed)
    pose = sample_pose(config, spec, rng)
    obs = observe(spec, pose, config, rng)
    return config, spec, pose, obs


class TestFit:
    def test_flat_scene_matches_solver(self):
        config, spec, pose, obs = _scene()
        est = CameraPoseEstimator(luminaire=spec, intrinsics=config.intrinsics).fit(obs.pixels)
        direct = solve_pose_sh(obs, spec, config.intrinsics)
        assert est.solver_ == "basic"
        assert np.array_equal(est.translation_, direct.translation)
        assert np.array_equal(est.rotation_, direct.rotation)
        assert est.residual_ == direct.residual
        assert np.linalg.norm(est.translation_ - pose.translation) <= 1e-6

    def test_tilted_scene_uses_height_search(self):
        config, spec, pose, obs = _scene(tilt_deg=20.0)
        est = CameraPoseEstimator(luminaire=spec, intrinsics=config.intrinsics).fit(obs.pixels)
        direct = solve_pose_dh(
            obs, spec, config.intrinsics, DhSearchConfig(max_height=3.0)
        )
        assert est.solver_ == "dh"
        assert np.array_equal(est.translation_, direct.translation)

    def test_frame_burst_is_averaged(self):
        config, spec, pose, obs = _scene()
        burst = np.stack([obs.pixels + 0.5, obs.pixels - 0.5])
        est = CameraPoseEstimator(luminaire=spec, intrinsics=config.intrinsics).fit(burst)
        single = CameraPoseEstimator(luminaire=spec, intrinsics=config.intrinsics).fit(obs.pixels)
        assert np.allclose(est.translation_, single.translation_, atol=1e-12)

    def test_forced_dh_on_flat_scene_raises(self):
        config, spec, pose, obs = _scene()
        est = CameraPoseEstimator(luminaire=spec, intrinsics=config.intrinsics, mode="dh")
        with pytest.raises(DegenerateObjective):
            est.fit(obs.pixels)

    def test_luminaire_as_plain_array(self):
        config, spec, pose, obs = _scene()
        est = CameraPoseEstimator(
            luminaire=np.asarray(spec.vertices), intrinsics=config.intrinsics
        ).fit(obs.pixels)
        assert np.linalg.norm(est.translation_ - pose.translation) <= 1e-6

    def test_intrinsics_as_mapping(self):
        config, spec, pose, obs = _scene()
        mapping = {"u0": 320.0, "v0": 240.0, "f": 0.008, "fu": 800.0, "fv": 800.0}
        est = CameraPoseEstimator(luminaire=spec, intrinsics=mapping).fit(obs.pixels)
        assert np.linalg.norm(est.translation_ - pose.translation) <= 1e-6


class TestValidation:
    def test_bad_mode(self):
        config, spec, pose, obs = _scene()
        with pytest.raises(ValueError):
            CameraPoseEstimator(luminaire=spec, intrinsics=config.intrinsics, mode="x").fit(
                obs.pixels
            )

    def test_bad_corner_shape(self):
        config, spec, pose, obs = _scene()
        est = CameraPoseEstimator(luminaire=spec, intrinsics=config.intrinsics)
        with pytest.raises(ValueError):
            est.fit(np.zeros((3, 2)))
        with pytest.raises(ValueError):
            est.fit(np.full((4, 2), np.nan))

    def test_missing_inputs(self):
        with pytest.raises(ValueError):
            CameraPoseEstimator().fit(np.zeros((4, 2)))


class TestPredict:
    def test_reprojects_panel_corners(self):
        config, spec, pose, obs = _scene()
        est = CameraPoseEstimator(luminaire=spec, intrinsics=config.intrinsics).fit(obs.pixels)
        predicted = est.predict(spec.vertices)
        assert np.allclose(predicted, obs.pixels, atol=1e-6)

    def test_requires_fit(self):
        config, spec, pose, obs = _scene()
        est = CameraPoseEstimator(luminaire=spec, intrinsics=config.intrinsics)
        with pytest.raises(NotFittedError):
            est.predict(spec.vertices)


class TestSklearnProtocol:
    def test_get_params_round_trip(self):
        config, spec, pose, obs = _scene()
        est = CameraPoseEstimator(
            luminaire=spec, intrinsics=config.intrinsics, room_height=2.8
        )
        params = est.get_params()
        assert params["room_height"] == 2.8
        est.set_params(fine_step=0.02)
        assert est.fine_step == 0.02

    def test_clone_preserves_params_and_forgets_fit(self):
        config, spec, pose, obs = _scene()
        est = CameraPoseEstimator(luminaire=spec, intrinsics=config.intrinsics).fit(obs.pixels)
        fresh = clone(est)
        assert np.array_equal(fresh.luminaire.vertices, spec.vertices)
        assert not hasattr(fresh, "pose_")
        fresh.fit(obs.pixels)
        assert np.array_equal(fresh.translation_, est.translation_)
