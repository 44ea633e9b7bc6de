"""Differentiable splat rasterizer with windowed evaluation.

Each Gaussian contributes only inside a fixed square window around its
projected center, so the work scales with N * K^2 instead of N * H * W.
Front-to-back compositing runs over (pixel, gaussian) pairs sorted by
(pixel, depth rank) using a segmented exclusive prefix sum of
log(1 - alpha); the prefix sum is taken in float64 so long global
accumulations do not leak error into per-segment differences.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch

from ..scene import CameraPose, FrameImage, RenderSettings
from .gaussians import GaussianCloud4D, deform, world_covariances
from .project import Intrinsics, project


@dataclass(frozen=True)
class RasterSettings:
    height: int = 64
    width: int = 64
    focal_px: float = 64.0
    window_radius: int = 6
    blur_px2: float = 0.3        # isotropic dilation of the 2D covariance, px^2
    alpha_clamp: float = 0.999
    near: float = 0.05
    depth_eps: float = 1e-8
    pair_cutoff: float = 1.0 / 255.0   # drop contributions below this alpha; 0 = exact

    @classmethod
    def from_render_settings(cls, rs: RenderSettings, **overrides) -> "RasterSettings":
        kwargs = dict(height=rs.height, width=rs.width, focal_px=rs.focal_px)
        kwargs.update(overrides)
        return cls(**kwargs)

    @property
    def intrinsics(self) -> Intrinsics:
        return Intrinsics(self.height, self.width, self.focal_px)


@dataclass
class SplatRender:
    rgb: torch.Tensor     # (H, W, 3)
    alpha: torch.Tensor   # (H, W) accumulated coverage in [0, 1]
    depth: torch.Tensor   # (H, W) alpha-weighted composite depth

    def to_frame_image(self, depth_sentinel: float = 0.0) -> FrameImage:
        rgb = self.rgb.detach().cpu().numpy().astype(np.float32)
        alpha = self.alpha.detach().cpu().numpy().astype(np.float32)
        depth = self.depth.detach().cpu().numpy().astype(np.float32)
        depth = np.where(alpha == 0.0, np.float32(depth_sentinel), depth)
        return FrameImage(rgb=np.clip(rgb, 0.0, 1.0), alpha=alpha, depth=depth)


def _background(cloud: GaussianCloud4D, settings: RasterSettings, dtype) -> SplatRender:
    H, W = settings.height, settings.width
    return SplatRender(
        rgb=torch.full((H, W, 3), cloud.background, dtype=dtype),
        alpha=torch.zeros(H, W, dtype=dtype),
        depth=torch.zeros(H, W, dtype=dtype),
    )


def rasterize(
    cloud: GaussianCloud4D,
    pose: CameraPose,
    tau: float,
    settings: RasterSettings = RasterSettings(),
) -> SplatRender:
    """Front-to-back alpha compositing of the cloud deformed to time tau."""
    dtype = cloud.positions.dtype
    H, W = settings.height, settings.width

    means3d = deform(cloud, tau)
    covs = world_covariances(cloud)
    means2d, covs2d, z, in_front = project(
        means3d, covs, pose, settings.intrinsics, near=settings.near
    )
    keep = in_front
    if not bool(keep.any()):
        return _background(cloud, settings, dtype)

    idx_keep = torch.nonzero(keep).squeeze(1)
    means2d = means2d[idx_keep]
    covs2d = covs2d[idx_keep]
    z = z[idx_keep]
    colors = cloud.colors[idx_keep]
    opac = cloud.opacities()[idx_keep]
    N = idx_keep.numel()

    a = covs2d[:, 0, 0] + settings.blur_px2
    b = covs2d[:, 0, 1]
    c = covs2d[:, 1, 1] + settings.blur_px2
    det = (a * c - b * b).clamp_min(1e-12)
    conic_a = c / det
    conic_b = -b / det
    conic_c = a / det

    r = settings.window_radius
    K = 2 * r + 1
    centers = means2d.detach().round().long()                       # (N, 2) x, y
    offs = torch.stack(
        torch.meshgrid(
            torch.arange(-r, r + 1), torch.arange(-r, r + 1), indexing="ij"
        ),
        dim=-1,
    ).reshape(-1, 2).flip(-1)                                       # (K^2, 2) as (dx, dy)
    pix = centers[:, None, :] + offs[None, :, :]                    # (N, K^2, 2)
    valid = (
        (pix[..., 0] >= 0) & (pix[..., 0] < W) & (pix[..., 1] >= 0) & (pix[..., 1] < H)
    )
    pix_cl = torch.stack([pix[..., 0].clamp(0, W - 1), pix[..., 1].clamp(0, H - 1)], dim=-1)

    d = pix.to(dtype) - means2d[:, None, :]                         # (N, K^2, 2)
    dx, dy = d[..., 0], d[..., 1]
    q = conic_a[:, None] * dx * dx + 2.0 * conic_b[:, None] * dx * dy + conic_c[:, None] * dy * dy
    alpha_pair = (opac[:, None] * torch.exp(-0.5 * q)).clamp(max=settings.alpha_clamp)
    alpha_pair = (alpha_pair * valid.to(dtype)).reshape(-1)

    # keep only pairs that contribute; the gate is detached bookkeeping
    sel = torch.nonzero(alpha_pair.detach() > settings.pair_cutoff).squeeze(1)
    if sel.numel() == 0:
        return _background(cloud, settings, dtype)
    pix_idx = (pix_cl[..., 1] * W + pix_cl[..., 0]).reshape(-1)     # (N*K^2,)
    gauss_idx = torch.arange(N).repeat_interleave(K * K)
    alpha_sel = alpha_pair[sel]
    pix_sel = pix_idx[sel]
    gauss_sel = gauss_idx[sel]

    # sort pairs by (pixel, depth rank) for per-pixel front-to-back order
    rank = torch.empty(N, dtype=torch.long)
    rank[torch.argsort(z.detach())] = torch.arange(N)
    key = pix_sel * N + rank[gauss_sel]
    order = torch.argsort(key)

    a_s = alpha_sel[order]
    p_s = pix_sel[order]
    g_s = gauss_sel[order]

    log_t = torch.log1p(-a_s).double()
    csum = torch.cumsum(log_t, dim=0)
    c_excl = csum - log_t
    start = torch.ones_like(p_s, dtype=torch.bool)
    start[1:] = p_s[1:] != p_s[:-1]
    seg_id = torch.cumsum(start.long(), dim=0) - 1
    seg_offset = c_excl[start]
    transmit = torch.exp(c_excl - seg_offset[seg_id]).to(dtype)
    weight = a_s * transmit                                          # (M,)

    P = H * W
    alpha_px = torch.zeros(P, dtype=dtype).index_add(0, p_s, weight)
    rgb_px = torch.zeros(P, 3, dtype=dtype).index_add(0, p_s, weight[:, None] * colors[g_s])
    depth_px = torch.zeros(P, dtype=dtype).index_add(0, p_s, weight * z[g_s])

    rgb = rgb_px + (1.0 - alpha_px)[:, None] * cloud.background
    depth = depth_px / alpha_px.clamp_min(settings.depth_eps)
    return SplatRender(
        rgb=rgb.reshape(H, W, 3), alpha=alpha_px.reshape(H, W), depth=depth.reshape(H, W)
    )
