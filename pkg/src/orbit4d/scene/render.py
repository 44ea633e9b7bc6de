"""Deterministic analytic rasterizer: per-pixel ray vs. primitive intersection.

Rays are intersected against unit primitives in each primitive's local frame,
so nonuniform scales and rotations come for free through the affine ray
transform (the ray parameter t is preserved and equals world distance for
unit-length world directions).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import InvalidArgument
from ..tensor_io import read_tensor, write_tensor
from .assets import AnimatedPrimitive, DynamicAsset
from .camera import CameraPose, OrbitTrajectory


@dataclass(frozen=True)
class RenderSettings:
    height: int = 64
    width: int = 64
    focal_scale: float = 1.0      # focal length in pixels = focal_scale * height
    background: float = 0.5       # mid-gray keeps SSIM luminance terms informative
    ambient: float = 0.25
    near: float = 1e-4
    depth_sentinel: float = 0.0

    @property
    def focal_px(self) -> float:
        return self.focal_scale * self.height

    def to_dict(self) -> dict:
        return {
            "height": self.height,
            "width": self.width,
            "focal_scale": self.focal_scale,
            "background": self.background,
            "ambient": self.ambient,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RenderSettings":
        return cls(**d)


@dataclass(frozen=True)
class FrameImage:
    rgb: np.ndarray     # (H, W, 3) float32 in [0, 1]
    alpha: np.ndarray   # (H, W) float32, 0 exactly where nothing covers the pixel
    depth: np.ndarray   # (H, W) float32 scene units, sentinel where alpha == 0

    @property
    def shape(self) -> tuple[int, int]:
        return self.rgb.shape[0], self.rgb.shape[1]


@dataclass(frozen=True)
class OrbitalVideo:
    frames: tuple[FrameImage, ...]
    trajectory: OrbitTrajectory
    is_static: bool

    def __post_init__(self):
        if len(self.frames) != len(self.trajectory):
            raise InvalidArgument(
                f"{len(self.frames)} frames for {len(self.trajectory)} poses"
            )

    def rgb_stack(self) -> np.ndarray:
        return np.stack([f.rgb for f in self.frames])

    def alpha_stack(self) -> np.ndarray:
        return np.stack([f.alpha for f in self.frames])

    def depth_stack(self) -> np.ndarray:
        return np.stack([f.depth for f in self.frames])


@dataclass(frozen=True)
class RgbVideo:
    """RGB-only orbital sweep (decoded/generated content has no alpha or depth)."""

    rgb: np.ndarray     # (T, H, W, 3)
    trajectory: OrbitTrajectory | None = None

    def rgb_stack(self) -> np.ndarray:
        return self.rgb


def ray_grid(pose: CameraPose, settings: RenderSettings) -> tuple[np.ndarray, np.ndarray]:
    """Camera origin and unit ray directions, shape (H*W, 3)."""
    H, W, f = settings.height, settings.width, settings.focal_px
    forward, right, up = pose.basis()
    origin = pose.position()
    cols = (np.arange(W) + 0.5 - W / 2.0) / f
    rows = (H / 2.0 - (np.arange(H) + 0.5)) / f
    xx, yy = np.meshgrid(cols, rows)
    dirs = forward[None, :] + xx.reshape(-1, 1) * right[None, :] + yy.reshape(-1, 1) * up[None, :]
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    return origin, dirs


def _ray_sphere(o, d, near):
    a = np.sum(d * d, axis=1)
    b = 2.0 * (d @ o)
    c = o @ o - 1.0
    disc = b * b - 4.0 * a * c
    ok = disc >= 0.0
    sq = np.sqrt(np.where(ok, disc, 0.0))
    t = (-b - sq) / (2.0 * a)
    t = np.where(ok & (t > near), t, np.inf)
    t_safe = np.where(np.isfinite(t), t, 0.0)
    n = o[None, :] + t_safe[:, None] * d
    return t, n


def _ray_box(o, d, near):
    with np.errstate(divide="ignore", invalid="ignore"):
        t1 = (-1.0 - o[None, :]) / d
        t2 = (1.0 - o[None, :]) / d
    lo = np.fmin(t1, t2)
    hi = np.fmax(t1, t2)
    lo = np.nan_to_num(lo, nan=-np.inf)
    hi = np.nan_to_num(hi, nan=np.inf)
    tmin = lo.max(axis=1)
    tmax = hi.min(axis=1)
    hit = (tmax >= tmin) & (tmin > near)
    t = np.where(hit, tmin, np.inf)
    axis = lo.argmax(axis=1)
    n = np.zeros_like(d)
    rows = np.arange(d.shape[0])
    n[rows, axis] = -np.sign(d[rows, axis])
    return t, n


def _ray_capsule(o, d, near):
    # unit radius, cylindrical section z in [-1, 1], spherical caps beyond
    ox, oy, oz = o
    a = d[:, 0] ** 2 + d[:, 1] ** 2
    b = 2.0 * (ox * d[:, 0] + oy * d[:, 1])
    c = ox * ox + oy * oy - 1.0
    disc = b * b - 4.0 * a * c
    ok = (disc >= 0.0) & (a > 1e-12)
    sq = np.sqrt(np.where(ok, disc, 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        t_cyl = np.where(ok, (-b - sq) / (2.0 * a), np.inf)
    z_cyl = oz + np.where(np.isfinite(t_cyl), t_cyl, 0.0) * d[:, 2]
    t_cyl = np.where((t_cyl > near) & (np.abs(z_cyl) <= 1.0), t_cyl, np.inf)
    t_cyl_safe = np.where(np.isfinite(t_cyl), t_cyl, 0.0)

    t_best = t_cyl
    n_best = np.stack(
        [ox + t_cyl_safe * d[:, 0], oy + t_cyl_safe * d[:, 1], np.zeros_like(t_cyl)], axis=1
    )
    for zc in (1.0, -1.0):
        oc = o - np.array([0.0, 0.0, zc])
        ts, _ = _ray_sphere(oc, d, near)
        ts_safe = np.where(np.isfinite(ts), ts, 0.0)
        pz = oz + ts_safe * d[:, 2]
        valid = np.isfinite(ts) & ((pz > 1.0) if zc > 0 else (pz < -1.0))
        better = valid & (ts < t_best)
        if better.any():
            p = o[None, :] + ts_safe[:, None] * d - np.array([0.0, 0.0, zc])[None, :]
            n_best = np.where(better[:, None], p, n_best)
            t_best = np.where(better, ts, t_best)
    return t_best, n_best


_INTERSECTORS = {"sphere": _ray_sphere, "box": _ray_box, "capsule": _ray_capsule}


def render_primitives(
    primitives: tuple[AnimatedPrimitive, ...] | list[AnimatedPrimitive],
    pose: CameraPose,
    tau: float,
    settings: RenderSettings = RenderSettings(),
) -> FrameImage:
    if not 0.0 <= tau < 1.0:
        raise InvalidArgument(f"tau must lie in [0, 1), got {tau}")
    H, W = settings.height, settings.width
    origin, dirs = ray_grid(pose, settings)
    npix = H * W

    t_best = np.full(npix, np.inf)
    rgb = np.full((npix, 3), settings.background)
    normal = np.zeros((npix, 3))
    albedo = np.zeros((npix, 3))

    for prim in primitives:
        pos, rot, scale, alb = prim.at(tau)
        inv_rot = rot.T
        o_l = (inv_rot @ (origin - pos)) / scale
        d_l = (dirs @ rot) / scale[None, :]
        t, n_l = _INTERSECTORS[prim.shape](o_l, d_l, settings.near)
        closer = t < t_best
        if not closer.any():
            continue
        n_l = np.where(np.isfinite(t)[:, None], n_l, 0.0)
        n_w = (n_l / scale[None, :]) @ inv_rot
        norm = np.linalg.norm(n_w, axis=1, keepdims=True)
        n_w = np.where(norm > 0, n_w / np.where(norm > 0, norm, 1.0), n_w)
        t_best = np.where(closer, t, t_best)
        normal = np.where(closer[:, None], n_w, normal)
        albedo = np.where(closer[:, None], alb[None, :], albedo)

    hit = np.isfinite(t_best)
    if hit.any():
        lambert = np.clip(-(normal * dirs).sum(axis=1), 0.0, None)
        shade = settings.ambient + (1.0 - settings.ambient) * lambert
        rgb = np.where(hit[:, None], albedo * shade[:, None], rgb)

    alpha = hit.astype(np.float32)
    depth = np.where(hit, t_best, settings.depth_sentinel).astype(np.float32)
    rgb = np.clip(rgb, 0.0, 1.0).astype(np.float32)
    return FrameImage(
        rgb=rgb.reshape(H, W, 3), alpha=alpha.reshape(H, W), depth=depth.reshape(H, W)
    )


def render_frame(
    asset: DynamicAsset,
    pose: CameraPose,
    tau: float,
    settings: RenderSettings = RenderSettings(),
) -> FrameImage:
    return render_primitives(asset.primitives, pose, tau, settings)


def render_orbital(
    asset: DynamicAsset,
    trajectory: OrbitTrajectory,
    animate: bool = True,
    settings: RenderSettings = RenderSettings(),
) -> OrbitalVideo:
    """Orbital sweep; animate=False freezes the asset at the first timestamp."""
    tau0 = trajectory.timestamps[0]
    frames = tuple(
        render_frame(asset, pose, tau if animate else tau0, settings)
        for pose, tau in zip(trajectory.poses, trajectory.timestamps)
    )
    return OrbitalVideo(frames=frames, trajectory=trajectory, is_static=not animate)


def save_video(directory: str | Path, video: OrbitalVideo, meta: dict | None = None) -> None:
    """rgb/alpha/depth raw tensors plus a JSON sidecar describing the sweep."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    write_tensor(directory / "rgb.orb", video.rgb_stack())
    write_tensor(directory / "alpha.orb", video.alpha_stack())
    write_tensor(directory / "depth.orb", video.depth_stack())
    sidecar = {
        "trajectory": video.trajectory.to_dict(),
        "timestamps": list(video.trajectory.timestamps),
        "is_static": video.is_static,
    }
    sidecar.update(meta or {})
    with open(directory / "video.json", "w") as f:
        json.dump(sidecar, f, indent=2, sort_keys=True)
        f.write("\n")


def load_video(directory: str | Path) -> tuple[OrbitalVideo, dict]:
    directory = Path(directory)
    with open(directory / "video.json") as f:
        sidecar = json.load(f)
    rgb = read_tensor(directory / "rgb.orb")
    alpha = read_tensor(directory / "alpha.orb")
    depth = read_tensor(directory / "depth.orb")
    frames = tuple(
        FrameImage(rgb=rgb[i], alpha=alpha[i], depth=depth[i]) for i in range(rgb.shape[0])
    )
    trajectory = OrbitTrajectory.from_dict(sidecar["trajectory"])
    video = OrbitalVideo(frames=frames, trajectory=trajectory, is_static=sidecar["is_static"])
    return video, sidecar
