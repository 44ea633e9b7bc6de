import numpy as np
import pytest
import torch

from orbit4d.errors import InvalidArgument
from orbit4d.scene import (
    RenderSettings,
    RgbVideo,
    build_trajectory,
    render_orbital,
    sample_asset,
)
from orbit4d.splat import (
    ConstructConfig,
    RasterSettings,
    construct,
    initialize_cloud,
    rasterize,
)
from orbit4d.splat.construct import render_sweep

SETTINGS = RenderSettings(height=48, width=48)
TRAJ = build_trajectory(10, elevation=0.0, distance=2.0)


def mean_psnr(frames_a, frames_b):
    vals = []
    for a, b in zip(frames_a, frames_b):
        mse = float(np.mean((a.rgb.astype(np.float64) - b.rgb.astype(np.float64)) ** 2))
        vals.append(99.0 if mse == 0 else 10.0 * np.log10(1.0 / mse))
    return float(np.mean(vals))


@pytest.fixture(scope="module")
def gt_pair():
    asset = sample_asset(21, 0.8)
    dyn = render_orbital(asset, TRAJ, True, SETTINGS)
    sta = render_orbital(asset, TRAJ, False, SETTINGS)
    return dyn, sta


class TestInitialize:
    def test_backprojection_lands_on_surface(self, gt_pair):
        _, sta = gt_pair
        cloud = initialize_cloud(sta, SETTINGS, ConstructConfig(n_init=256, seed=0))
        assert len(cloud) == 256
        # all back-projected points sit inside the asset's bounding sphere
        radii = cloud.positions.norm(dim=1)
        assert float(radii.max()) < 1.0
        assert torch.all(cloud.motion_coeffs == 0)

    def test_depth_free_input_uses_sphere(self, gt_pair):
        _, sta = gt_pair
        rgb_only = RgbVideo(rgb=sta.rgb_stack(), trajectory=sta.trajectory)
        cfg = ConstructConfig(n_init=128, seed=0, init_sphere_radius=0.5)
        cloud = initialize_cloud(rgb_only, SETTINGS, cfg)
        radii = cloud.positions.norm(dim=1)
        assert torch.allclose(radii, torch.full_like(radii, 0.5), atol=1e-5)

    def test_empty_foreground_rejected(self):
        blank = RgbVideo(
            rgb=np.full((4, 48, 48, 3), SETTINGS.background, dtype=np.float32),
            trajectory=build_trajectory(4, 0.0, 2.0),
        )
        with pytest.raises(InvalidArgument):
            initialize_cloud(blank, SETTINGS, ConstructConfig(n_init=64))

    def test_deterministic(self, gt_pair):
        _, sta = gt_pair
        a = initialize_cloud(sta, SETTINGS, ConstructConfig(n_init=128, seed=3))
        b = initialize_cloud(sta, SETTINGS, ConstructConfig(n_init=128, seed=3))
        assert torch.equal(a.positions, b.positions)
        assert torch.equal(a.colors, b.colors)


class TestConstruct:
    def test_recovers_cloud_rendered_pair(self):
        # self-consistency: targets rendered from a known cloud are recoverable
        from orbit4d.splat.gaussians import GaussianCloud4D, MOTION_BASIS_SIZE

        gen = torch.Generator().manual_seed(2)
        n = 12
        rot = torch.zeros(n, 4)
        rot[:, 0] = 1.0
        motion = torch.zeros(n, 3, MOTION_BASIS_SIZE)
        motion[:, 2, 2] = 0.08   # vertical harmonic wobble
        known = GaussianCloud4D(
            positions=(torch.rand(n, 3, generator=gen) - 0.5) * 0.5,
            log_scales=torch.full((n, 3), float(np.log(0.07))),
            rotations=rot,
            opacity_logits=torch.full((n,), 3.0),
            colors=torch.rand(n, 3, generator=gen),
            motion_coeffs=motion,
        )
        raster = RasterSettings.from_render_settings(SETTINGS)
        dyn_frames, sta_frames = [], []
        with torch.no_grad():
            for pose, tau in zip(TRAJ.poses, TRAJ.timestamps):
                dyn_frames.append(rasterize(known, pose, tau, raster).to_frame_image())
                sta_frames.append(rasterize(known, pose, 0.0, raster).to_frame_image())
        from orbit4d.scene import OrbitalVideo

        dyn = OrbitalVideo(frames=tuple(dyn_frames), trajectory=TRAJ, is_static=False)
        sta = OrbitalVideo(frames=tuple(sta_frames), trajectory=TRAJ, is_static=True)

        cfg = ConstructConfig(n_init=192, coarse_iterations=900, fine_iterations=400, seed=0)
        result = construct(dyn, sta, SETTINGS, cfg)
        fitted = render_sweep(result.cloud, TRAJ, SETTINGS, animate=True)
        assert mean_psnr(fitted, dyn_frames) >= 30.0

    def test_zero_iteration_stages_keep_init(self, gt_pair):
        dyn, sta = gt_pair
        cfg = ConstructConfig(n_init=64, coarse_iterations=0, fine_iterations=0, seed=0)
        result = construct(dyn, sta, SETTINGS, cfg)
        ref = initialize_cloud(sta, SETTINGS, cfg)
        assert torch.equal(result.cloud.positions, ref.positions)
        assert result.coarse_curve == [] and result.fine_curve == []

    def test_curves_recorded(self, gt_pair):
        dyn, sta = gt_pair
        cfg = ConstructConfig(n_init=96, coarse_iterations=12, fine_iterations=7, seed=0)
        result = construct(dyn, sta, SETTINGS, cfg)
        assert len(result.coarse_curve) == 12
        assert len(result.fine_curve) == 7

    def test_render_sweep_static_mode(self, gt_pair):
        dyn, sta = gt_pair
        cfg = ConstructConfig(n_init=64, coarse_iterations=0, fine_iterations=0)
        result = construct(dyn, sta, SETTINGS, cfg)
        frames = render_sweep(result.cloud, TRAJ, SETTINGS, animate=False)
        assert len(frames) == len(TRAJ)
        assert frames[0].rgb.shape == (48, 48, 3)
