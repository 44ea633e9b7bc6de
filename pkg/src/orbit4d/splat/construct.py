"""Coarse-to-fine cloud construction from an orbital video pair.

The coarse stage fits merged static + dynamic sweeps (static frames pinned at
the first timestamp), the fine stage then tunes on the dynamic sweep alone.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import torch

from ..errors import InvalidArgument
from ..scene import FrameImage, OrbitalVideo, OrbitTrajectory, RgbVideo
from ..scene.render import ray_grid, RenderSettings
from .gaussians import GaussianCloud4D, MOTION_BASIS_SIZE
from .losses import SplatLossWeights
from .optimize import OptimizeConfig, OptimizeResult, optimize
from .rasterize import RasterSettings, rasterize


@dataclass(frozen=True)
class ConstructConfig:
    n_init: int = 1024
    coarse_iterations: int = 5000
    fine_iterations: int = 2000
    batch_views: int = 1
    seed: int = 0
    init_opacity: float = 0.1
    init_sphere_radius: float = 0.55   # fallback surface for inputs without depth
    foreground_threshold: float = 0.05


@dataclass
class ConstructResult:
    cloud: GaussianCloud4D
    coarse_curve: list[float] = field(default_factory=list)
    fine_curve: list[float] = field(default_factory=list)


def _foreground(video, threshold: float, background: float):
    """(T, H, W) coverage mask and rgb stack; alpha channel when available."""
    rgb = video.rgb_stack()
    if isinstance(video, OrbitalVideo):
        return video.alpha_stack() > 0.5, rgb
    dist = np.abs(rgb - background).max(axis=-1)
    return dist > threshold, rgb


def _sphere_depth(origin: np.ndarray, dirs: np.ndarray, radius: float) -> np.ndarray:
    b = 2.0 * dirs @ origin
    c = origin @ origin - radius * radius
    disc = b * b - 4.0 * c
    ok = disc >= 0
    t = np.where(ok, (-b - np.sqrt(np.where(ok, disc, 0.0))) / 2.0, np.nan)
    return t


def initialize_cloud(
    static_video: OrbitalVideo | RgbVideo,
    render_settings: RenderSettings,
    config: ConstructConfig = ConstructConfig(),
) -> GaussianCloud4D:
    """Back-project covered pixels of the static sweep into a seed cloud.

    Depth comes from the depth channel when the input carries one, otherwise
    from intersecting view rays with a sphere around the origin.
    """
    trajectory = static_video.trajectory
    if trajectory is None:
        raise InvalidArgument("static video needs a trajectory for back-projection")
    mask, rgb = _foreground(static_video, config.foreground_threshold, render_settings.background)
    has_depth = isinstance(static_video, OrbitalVideo)
    H, W = mask.shape[1], mask.shape[2]

    points, colors = [], []
    for i, pose in enumerate(trajectory.poses):
        ys, xs = np.nonzero(mask[i])
        if ys.size == 0:
            continue
        origin, dirs = ray_grid(pose, render_settings)
        flat = ys * W + xs
        d = dirs[flat]
        if has_depth:
            t = static_video.frames[i].depth[ys, xs].astype(np.float64)
        else:
            t = _sphere_depth(origin, d, config.init_sphere_radius)
        good = np.isfinite(t) & (t > 0)
        pts = origin[None, :] + t[good, None] * d[good]
        points.append(pts)
        colors.append(rgb[i][ys[good], xs[good]])

    if not points:
        raise InvalidArgument("initialization found no foreground pixels")
    points = np.concatenate(points, axis=0)
    colors = np.concatenate(colors, axis=0)

    rng = np.random.default_rng(config.seed)
    n = min(config.n_init, points.shape[0])
    pick = rng.choice(points.shape[0], size=n, replace=False)
    points = points[pick]
    colors = colors[pick]

    # scale init: mean distance to the 3 nearest neighbors (brute force)
    d2 = ((points[:, None, :] - points[None, :, :]) ** 2).sum(-1)
    np.fill_diagonal(d2, np.inf)
    k = min(3, n - 1)
    nn = np.sqrt(np.sort(d2, axis=1)[:, :k]).mean(axis=1) if k > 0 else np.full(n, 0.05)
    sigma = np.clip(nn, 1e-3, 0.3)

    logit = float(np.log(config.init_opacity / (1.0 - config.init_opacity)))
    rotations = torch.zeros(n, 4)
    rotations[:, 0] = 1.0
    return GaussianCloud4D(
        positions=torch.from_numpy(points.astype(np.float32)),
        log_scales=torch.log(torch.from_numpy(sigma.astype(np.float32)))[:, None].repeat(1, 3),
        rotations=rotations,
        opacity_logits=torch.full((n,), logit),
        colors=torch.from_numpy(colors.astype(np.float32)),
        motion_coeffs=torch.zeros(n, 3, MOTION_BASIS_SIZE),
        background=render_settings.background,
    )


def _supervision(video, trajectory: OrbitTrajectory, static: bool) -> list:
    """(frame, pose, tau) triples; static sweeps are pinned at the first timestamp."""
    tau0 = trajectory.timestamps[0]
    items = []
    if isinstance(video, OrbitalVideo):
        frames = video.frames
    else:
        frames = [video.rgb[i] for i in range(video.rgb.shape[0])]
    for i, pose in enumerate(trajectory.poses):
        tau = tau0 if static else trajectory.timestamps[i]
        items.append((frames[i], pose, tau))
    return items


def construct(
    video: OrbitalVideo | RgbVideo,
    static_video: OrbitalVideo | RgbVideo,
    render_settings: RenderSettings,
    config: ConstructConfig = ConstructConfig(),
    weights: SplatLossWeights = SplatLossWeights(),
    optim: OptimizeConfig | None = None,
) -> ConstructResult:
    """Initialize from the static sweep, fit coarse on both sweeps, refine on dynamic."""
    trajectory = video.trajectory
    if trajectory is None or static_video.trajectory is None:
        raise InvalidArgument("both videos need trajectories")
    cloud = initialize_cloud(static_video, render_settings, config)
    settings = RasterSettings.from_render_settings(render_settings)
    optim = optim or OptimizeConfig()

    dynamic_sup = _supervision(video, trajectory, static=False)
    static_sup = _supervision(static_video, static_video.trajectory, static=True)

    coarse = optimize(
        cloud,
        dynamic_sup + static_sup,
        OptimizeConfig(**{**optim.__dict__, "iterations": config.coarse_iterations,
                          "batch_views": config.batch_views, "seed": config.seed}),
        weights,
        settings,
    )
    fine = optimize(
        cloud,
        dynamic_sup,
        OptimizeConfig(**{**optim.__dict__, "iterations": config.fine_iterations,
                          "batch_views": config.batch_views, "seed": config.seed + 1}),
        weights,
        settings,
    )
    return ConstructResult(cloud=cloud, coarse_curve=coarse.loss_curve, fine_curve=fine.loss_curve)


def render_sweep(
    cloud: GaussianCloud4D,
    trajectory: OrbitTrajectory,
    render_settings: RenderSettings,
    animate: bool = True,
) -> list[FrameImage]:
    """Orbital sweep of the fitted cloud as exportable frames."""
    settings = RasterSettings.from_render_settings(render_settings)
    tau0 = trajectory.timestamps[0]
    frames = []
    with torch.no_grad():
        for pose, tau in zip(trajectory.poses, trajectory.timestamps):
            render = rasterize(cloud, pose, tau if animate else tau0, settings)
            frames.append(render.to_frame_image(render_settings.depth_sentinel))
    return frames
