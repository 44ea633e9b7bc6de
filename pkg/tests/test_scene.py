import json

import numpy as np
import pytest

from orbit4d.errors import InvalidArgument
from orbit4d.scene import (
    AnimatedPrimitive,
    CameraPose,
    DynamicAsset,
    MotionProgram,
    RenderSettings,
    build_trajectory,
    load_video,
    render_frame,
    render_orbital,
    sample_asset,
    save_video,
)
from orbit4d.scene.render import render_primitives

SETTINGS = RenderSettings(height=64, width=64)


def sphere(position, radius, albedo=(0.8, 0.2, 0.2), motion=MotionProgram()):
    return AnimatedPrimitive(
        shape="sphere",
        position=position,
        rotation_axis=(0.0, 0.0, 1.0),
        rotation_angle=0.0,
        scale=(radius, radius, radius),
        albedo=albedo,
        motion=motion,
    )


class TestTrajectory:
    def test_step_is_exactly_360_over_T(self):
        traj = build_trajectory(24, elevation=0.0, distance=2.0, start_azimuth=0.0)
        azs = np.array([p.azimuth for p in traj.poses])
        diffs = np.diff(np.concatenate([azs, [azs[0] + 360.0]])) % 360.0
        assert np.allclose(diffs, 15.0, atol=1e-9)

    def test_start_azimuth_wraps(self):
        traj = build_trajectory(4, 0.0, 2.0, start_azimuth=90.0)
        assert [p.azimuth for p in traj.poses] == [90.0, 180.0, 270.0, 0.0]

    def test_orbit_closure(self):
        traj = build_trajectory(24, 0.0, 2.0, 0.0)
        assert traj.poses[0].azimuth == pytest.approx(
            (traj.poses[23].azimuth + 15.0) % 360.0, abs=1e-9
        )

    def test_timestamps(self):
        traj = build_trajectory(8, 0.0, 2.0, 0.0)
        assert traj.timestamps == tuple(i / 8 for i in range(8))

    def test_rejects_bad_arguments(self):
        with pytest.raises(InvalidArgument):
            build_trajectory(1, 0.0, 2.0)
        with pytest.raises(InvalidArgument):
            build_trajectory(24, 0.0, 0.0)
        with pytest.raises(InvalidArgument):
            build_trajectory(24, 0.0, -1.0)

    def test_pose_basis_orthonormal(self):
        for az in (0.0, 37.0, 191.5):
            pose = CameraPose(az, 12.0, 2.0)
            f, r, u = pose.basis()
            M = np.stack([f, r, u])
            assert np.allclose(M @ M.T, np.eye(3), atol=1e-12)


class TestSampleAsset:
    def test_deterministic(self):
        a = sample_asset(7, 1.0, label=2)
        b = sample_asset(7, 1.0, label=2)
        assert a.to_dict() == b.to_dict()

    def test_scale_only_changes_motion_scale(self):
        a = sample_asset(7, 1.0)
        b = sample_asset(7, 2.0)
        da, db = a.to_dict(), b.to_dict()
        for pa, pb in zip(da["primitives"], db["primitives"]):
            ma, mb = pa.pop("motion"), pb.pop("motion")
            assert pa == pb
            assert ma.pop("motion_scale") == 1.0
            assert mb.pop("motion_scale") == 2.0
            assert ma == mb

    def test_zero_scale_static_in_tau(self):
        asset = sample_asset(7, 0.0, label=1)
        pose = build_trajectory(8, 0.0, 2.0).poses[3]
        f0 = render_frame(asset, pose, 0.0, SETTINGS)
        f1 = render_frame(asset, pose, 0.7, SETTINGS)
        assert np.array_equal(f0.rgb, f1.rgb)
        assert np.array_equal(f0.alpha, f1.alpha)
        assert np.array_equal(f0.depth, f1.depth)

    def test_roundtrip_through_dict(self):
        asset = sample_asset(11, 1.5, label=3)
        again = DynamicAsset.from_dict(json.loads(json.dumps(asset.to_dict())))
        assert again.to_dict() == asset.to_dict()


class TestRenderFrame:
    def test_empty_scene_is_background(self):
        pose = CameraPose(0.0, 0.0, 2.0)
        f = render_primitives([], pose, 0.0, SETTINGS)
        assert np.all(f.alpha == 0.0)
        assert np.all(f.rgb == np.float32(SETTINGS.background))
        assert np.all(f.depth == SETTINGS.depth_sentinel)

    def test_centered_sphere_centroid(self):
        pose = CameraPose(0.0, 0.0, 2.0)
        f = render_frame(
            DynamicAsset((sphere((0.0, 0.0, 0.0), 0.4),), seed=0, label=0), pose, 0.0, SETTINGS
        )
        ys, xs = np.nonzero(f.alpha)
        cy, cx = ys.mean(), xs.mean()
        assert abs(cy - (SETTINGS.height - 1) / 2) <= 1.0
        assert abs(cx - (SETTINGS.width - 1) / 2) <= 1.0

    def test_two_sphere_occlusion_matches_analytic_oracle(self):
        # camera at (2,0,0) looking down -x; sphere A at distance 1.5, B at 1.8
        pose = CameraPose(0.0, 0.0, 2.0)
        albedo_a, albedo_b = (0.9, 0.1, 0.1), (0.1, 0.1, 0.9)
        asset = DynamicAsset(
            (
                sphere((0.5, 0.0, 0.0), 0.3, albedo_a),
                sphere((0.2, 0.0, 0.0), 0.3, albedo_b),
            ),
            seed=0,
            label=0,
        )
        f = render_frame(asset, pose, 0.0, SETTINGS)
        r, c = SETTINGS.height // 2, SETTINGS.width // 2
        # center ray is the optical axis (pixel centers straddle it at even res,
        # so allow the half-pixel offset): analytic first hit t = 1.5 - 0.3
        assert f.depth[r, c] == pytest.approx(1.2, abs=2e-3)
        # headlight shading at normal incidence returns the raw albedo
        assert np.allclose(f.rgb[r, c], albedo_a, atol=2e-3)

    def test_alpha_depth_coupling(self):
        asset = sample_asset(3, 1.0)
        pose = CameraPose(45.0, 10.0, 2.0)
        f = render_frame(asset, pose, 0.3, SETTINGS)
        assert np.array_equal(f.alpha == 0.0, f.depth == SETTINGS.depth_sentinel)
        assert np.all(np.isfinite(f.rgb)) and np.all(np.isfinite(f.depth))

    def test_bit_identical_across_runs(self):
        asset = sample_asset(5, 1.0)
        pose = CameraPose(100.0, 0.0, 2.0)
        f1 = render_frame(asset, pose, 0.4, SETTINGS)
        f2 = render_frame(asset, pose, 0.4, SETTINGS)
        assert f1.rgb.tobytes() == f2.rgb.tobytes()
        assert f1.depth.tobytes() == f2.depth.tobytes()

    def test_rejects_tau_out_of_range(self):
        asset = sample_asset(1, 1.0)
        with pytest.raises(InvalidArgument):
            render_frame(asset, CameraPose(0.0, 0.0, 2.0), 1.0, SETTINGS)

    def test_box_and_capsule_render(self):
        for shape in ("box", "capsule"):
            prim = AnimatedPrimitive(
                shape=shape,
                position=(0.0, 0.0, 0.0),
                rotation_axis=(0.3, 0.5, 0.8),
                rotation_angle=0.7,
                scale=(0.3, 0.3, 0.3),
                albedo=(0.2, 0.7, 0.3),
            )
            f = render_primitives([prim], CameraPose(30.0, 5.0, 2.0), 0.0, SETTINGS)
            assert f.alpha.sum() > 20


class TestRenderOrbital:
    def test_zero_motion_dynamic_equals_static(self):
        asset = sample_asset(9, 0.0)
        traj = build_trajectory(6, 0.0, 2.0)
        dyn = render_orbital(asset, traj, animate=True, settings=SETTINGS)
        sta = render_orbital(asset, traj, animate=False, settings=SETTINGS)
        assert dyn.is_static is False and sta.is_static is True
        for fd, fs in zip(dyn.frames, sta.frames):
            assert np.array_equal(fd.rgb, fs.rgb)

    def test_static_frames_differ_only_by_pose(self):
        asset = sample_asset(2, 2.0)
        traj = build_trajectory(6, 0.0, 2.0)
        sta = render_orbital(asset, traj, animate=False, settings=SETTINGS)
        ref = render_frame(asset, traj.poses[3], traj.timestamps[0], SETTINGS)
        assert np.array_equal(sta.frames[3].rgb, ref.rgb)

    def test_matched_rotation_keeps_silhouette_area(self):
        # box at the origin spinning about the orbit axis at the sweep rate:
        # the configuration seen by the orbiting camera never changes
        motion = MotionProgram(motion_scale=1.0, rotation_axis=(0.0, 0.0, 1.0), rotation_rate=1.0)
        prim = AnimatedPrimitive(
            shape="box",
            position=(0.0, 0.0, 0.0),
            rotation_axis=(0.0, 0.0, 1.0),
            rotation_angle=0.0,
            scale=(0.18, 0.12, 0.25),
            albedo=(0.6, 0.6, 0.2),
            motion=motion,
        )
        asset = DynamicAsset((prim,), seed=0, label=0)
        traj = build_trajectory(12, 0.0, 2.0)
        video = render_orbital(asset, traj, animate=True, settings=SETTINGS)
        areas = np.array([f.alpha.sum() for f in video.frames])
        assert np.all(np.abs(areas - areas.mean()) <= 0.02 * areas.mean())


class TestVideoIO:
    def test_save_load_roundtrip(self, tmp_path):
        asset = sample_asset(4, 1.0, label=1)
        traj = build_trajectory(4, 0.0, 2.0)
        video = render_orbital(asset, traj, settings=SETTINGS)
        save_video(tmp_path / "v", video, meta={"seed": 4, "motion_scale": 1.0, "label": 1})
        loaded, sidecar = load_video(tmp_path / "v")
        assert sidecar["seed"] == 4 and sidecar["is_static"] is False
        assert len(loaded.frames) == 4
        for a, b in zip(video.frames, loaded.frames):
            assert np.array_equal(a.rgb, b.rgb)
            assert np.array_equal(a.alpha, b.alpha)
            assert np.array_equal(a.depth, b.depth)
        assert loaded.trajectory.to_dict() == traj.to_dict()
