"""Photometric splat loss: L1 + SSIM-based perceptual term + depth smoothness."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch

from ..errors import InvalidArgument
from ..scene import FrameImage
from ..ssim import DEFAULT_SSIM, SsimParams, ssim_torch
from .rasterize import SplatRender


@dataclass(frozen=True)
class SplatLossWeights:
    lambda_l1: float = 1.0
    lambda_perc: float = 10.0
    lambda_depth: float = 1.0

    def __post_init__(self):
        vals = (self.lambda_l1, self.lambda_perc, self.lambda_depth)
        if any(not np.isfinite(v) or v < 0 for v in vals):
            raise InvalidArgument(f"loss weights must be finite and >= 0, got {vals}")


def charbonnier(x: torch.Tensor, eps: float = 1e-3) -> torch.Tensor:
    """Smooth robust penalty, shifted so charbonnier(0) == 0."""
    return torch.sqrt(x * x + eps * eps) - eps


def depth_smoothness(depth: torch.Tensor, alpha: torch.Tensor, eps: float = 1e-3) -> torch.Tensor:
    """Charbonnier penalty on second differences of depth over covered pixels.

    The alpha > 0.5 mask is detached: it gates which pixels count, it is not
    itself a training signal.
    """
    mask = (alpha > 0.5).to(depth.dtype).detach()
    ddx = depth[:, 2:] - 2.0 * depth[:, 1:-1] + depth[:, :-2]
    ddy = depth[2:, :] - 2.0 * depth[1:-1, :] + depth[:-2, :]
    mx = mask[:, 2:] * mask[:, 1:-1] * mask[:, :-2]
    my = mask[2:, :] * mask[1:-1, :] * mask[:-2, :]
    total = (charbonnier(ddx, eps) * mx).sum() + (charbonnier(ddy, eps) * my).sum()
    count = mx.sum() + my.sum()
    return total / count.clamp_min(1.0)


def _target_tensors(target, dtype) -> tuple[torch.Tensor, torch.Tensor | None]:
    if isinstance(target, FrameImage):
        rgb = torch.from_numpy(np.ascontiguousarray(target.rgb)).to(dtype)
        alpha = torch.from_numpy(np.ascontiguousarray(target.alpha)).to(dtype)
        return rgb, alpha
    rgb = target if isinstance(target, torch.Tensor) else torch.as_tensor(target, dtype=dtype)
    return rgb.to(dtype), None


def splat_loss(
    render: SplatRender,
    target,
    weights: SplatLossWeights = SplatLossWeights(),
    ssim_params: SsimParams = DEFAULT_SSIM,
) -> torch.Tensor:
    """lambda_l1 * mean|dRGB| + lambda_perc * (1 - SSIM) + lambda_depth * smoothness."""
    dtype = render.rgb.dtype
    target_rgb, _ = _target_tensors(target, dtype)
    if target_rgb.shape != render.rgb.shape:
        raise InvalidArgument(
            f"target shape {tuple(target_rgb.shape)} != render {tuple(render.rgb.shape)}"
        )
    loss = weights.lambda_l1 * (render.rgb - target_rgb).abs().mean()
    if weights.lambda_perc:
        a = render.rgb.permute(2, 0, 1)
        b = target_rgb.permute(2, 0, 1)
        loss = loss + weights.lambda_perc * (1.0 - ssim_torch(a, b, ssim_params))
    if weights.lambda_depth:
        loss = loss + weights.lambda_depth * depth_smoothness(render.depth, render.alpha)
    return loss
