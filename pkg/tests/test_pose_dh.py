import math

import numpy as np
import pytest

from lumipose import (
    DegenerateObjective,
    DhSearchConfig,
    SingularConfiguration,
    euler_xy_from_c,
    solve_c_row,
    solve_pose_2d,
    solve_pose_dh,
    tilt_rotation,
)
from lumipose.pose_dh import _HeightScan, _span_grid

from conftest import random_scene_poses, tilted_config


class TestDhSearchConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            DhSearchConfig(max_height=3.0, coarse_step=0.01, fine_step=0.1)
        with pytest.raises(ValueError):
            DhSearchConfig(max_height=0.05)
        with pytest.raises(ValueError):
            DhSearchConfig(max_height=3.0, stages=0)

    def test_step_schedule(self):
        cfg = DhSearchConfig(max_height=3.0)
        assert np.allclose(cfg.step_schedule, [0.10, 0.01])
        cfg3 = DhSearchConfig(max_height=3.0, stages=3)
        sched = cfg3.step_schedule
        assert sched[0] == pytest.approx(0.10)
        assert sched[-1] == pytest.approx(0.01)
        assert np.all(np.diff(sched) < 0)


class TestSolveCRow:
    def test_flat_heights_any_assignment(self, flat_spec):
        cam_vertices = flat_spec.vertices - np.array([2.5, 2.5, 1.0])
        fit = solve_c_row(cam_vertices, flat_spec.heights, 1.0)
        assert np.allclose(fit.c, [0.0, 0.0, 1.0], atol=1e-12)
        assert fit.raw_norm == pytest.approx(1.0, abs=1e-9)

    def test_recovers_true_row_on_tilted_panel(self, intrinsics):
        config = tilted_config(20.0)
        spec, scenes = random_scene_poses(config, 30, seed=41)
        for pose, obs in scenes:
            cam_vertices = (spec.vertices - pose.translation) @ pose.rotation
            fit = solve_c_row(cam_vertices, spec.heights, pose.translation[2])
            expected = tilt_rotation(pose.euler.phi, pose.euler.theta)[2]
            assert np.linalg.norm(fit.c - expected) <= 1e-6
            assert fit.raw_norm == pytest.approx(1.0, abs=1e-6)
            assert fit.residual <= 1e-9

    def test_height_offset_shows_in_norm(self, intrinsics):
        config = tilted_config(20.0)
        spec, scenes = random_scene_poses(config, 5, seed=42)
        for pose, obs in scenes:
            cam_vertices = (spec.vertices - pose.translation) @ pose.rotation
            fit = solve_c_row(cam_vertices, spec.heights, pose.translation[2] + 0.5)
            assert abs(fit.raw_norm - 1.0) > 1e-3

    def test_rank_deficient_vertices(self, flat_spec):
        coplanar = np.array(
            [[0.1, 0.0, 0.0], [0.0, 0.2, 0.0], [-0.1, 0.0, 0.0], [0.0, -0.2, 0.0]]
        )
        with pytest.raises(SingularConfiguration):
            solve_c_row(coplanar, flat_spec.heights, 1.0)


class TestEulerXyFromC:
    def test_values(self):
        assert euler_xy_from_c([0.0, 0.0, 1.0]) == pytest.approx((0.0, 0.0))
        t = math.radians(20.0)
        phi, theta = euler_xy_from_c([-math.sin(t), 0.0, math.cos(t)])
        assert (phi, theta) == pytest.approx((0.0, t))
        p = math.radians(5.0)
        phi, theta = euler_xy_from_c([0.0, math.sin(p), math.cos(p)])
        assert (phi, theta) == pytest.approx((p, 0.0))


class TestSolvePose2d:
    def test_exact_at_true_height(self, intrinsics):
        config = tilted_config(20.0)
        spec, scenes = random_scene_poses(config, 25, seed=43)
        for pose, obs in scenes:
            est, delta_g = solve_pose_2d(
                obs, spec, config.intrinsics, pose.translation[2]
            )
            assert delta_g <= 1e-9
            assert np.linalg.norm(est.translation - pose.translation) <= 1e-6
            assert np.allclose(est.euler, pose.euler, atol=1e-6)

    def test_mismatch_grows_off_truth(self, intrinsics):
        config = tilted_config(20.0)
        spec, scenes = random_scene_poses(config, 10, seed=44)
        for pose, obs in scenes:
            _, at_truth = solve_pose_2d(
                obs, spec, config.intrinsics, pose.translation[2]
            )
            _, off = solve_pose_2d(
                obs, spec, config.intrinsics, min(2.49, pose.translation[2] + 0.4)
            )
            assert off > max(at_truth, 1e-6)

    def test_flat_panel_objective_uninformative(self, flat_config, intrinsics):
        # For a flat panel the implied world normal is reproduced at
        # every hypothesized height.
        spec, scenes = random_scene_poses(flat_config, 5, seed=45)
        for pose, obs in scenes:
            for t_z in (0.0, 0.8, 1.7, 2.4):
                _, delta_g = solve_pose_2d(obs, spec, flat_config.intrinsics, t_z)
                assert delta_g <= 1e-9


def _dh_config(config):
    return DhSearchConfig(max_height=config.room_height)


class TestSolvePoseDh:
    def test_height_within_fine_step(self, intrinsics):
        config = tilted_config(20.0)
        spec, scenes = random_scene_poses(config, 25, seed=46)
        for pose, obs in scenes:
            est = solve_pose_dh(obs, spec, intrinsics, _dh_config(config))
            assert abs(est.translation[2] - pose.translation[2]) <= 0.01 + 1e-9
            assert np.linalg.norm(est.translation - pose.translation) <= 0.02

    def test_flat_panel_degenerate(self, flat_config, flat_spec, intrinsics):
        spec, scenes = random_scene_poses(flat_config, 1, seed=47)
        with pytest.raises(DegenerateObjective):
            solve_pose_dh(scenes[0][1], flat_spec, intrinsics, _dh_config(flat_config))

    def test_matches_solve_pose_2d_at_found_height(self, intrinsics):
        # Same code path: the returned pose is the single-point
        # evaluation at the found height, bitwise.
        config = tilted_config(30.0)
        spec, scenes = random_scene_poses(config, 10, seed=48)
        for _, obs in scenes:
            est = solve_pose_dh(obs, spec, intrinsics, _dh_config(config))
            direct, _ = solve_pose_2d(
                obs, spec, config.intrinsics, est.translation[2]
            )
            assert est.euler == direct.euler
            assert np.array_equal(est.translation, direct.translation)
            assert np.array_equal(est.rotation, direct.rotation)
            assert est.residual == direct.residual

    def test_refinement_never_worse_than_coarse(self, intrinsics):
        config = tilted_config(20.0)
        spec, scenes = random_scene_poses(config, 10, seed=49)
        for _, obs in scenes:
            pose, trace = solve_pose_dh(
                obs, spec, intrinsics, _dh_config(config), full_output=True
            )
            coarse_best = float(np.nanmin(trace["stage_values"][0]))
            final_best = min(b[1] for b in trace["basins"])
            assert final_best <= coarse_best + 1e-12

    def test_true_height_depresses_coarse_grid(self, intrinsics):
        # The coarse grid point nearest the true height ranks among the
        # smallest objective values (the basin may be narrower than the
        # coarse step, but it pulls its neighborhood down), which is
        # what makes the shortlist refinement find it.
        config = tilted_config(20.0)
        spec, scenes = random_scene_poses(config, 25, seed=50)
        for pose, obs in scenes:
            scan = _HeightScan(obs, spec, config.intrinsics)
            grid = _span_grid(0.0, config.room_height, 0.10)
            values = scan.evaluate(grid)["delta_g"]
            nearest = int(np.argmin(np.abs(grid - pose.translation[2])))
            rank = int(np.sum(values < values[nearest]))
            assert rank < 6

    def test_three_stage_schedule(self, intrinsics):
        config = tilted_config(25.0)
        spec, scenes = random_scene_poses(config, 5, seed=51)
        dh = DhSearchConfig(max_height=config.room_height, stages=3)
        for pose, obs in scenes:
            est = solve_pose_dh(obs, spec, intrinsics, dh)
            assert abs(est.translation[2] - pose.translation[2]) <= 0.01 + 1e-9
