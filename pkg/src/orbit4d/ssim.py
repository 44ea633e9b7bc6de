"""Structural similarity with a uniform box window.

One differentiable torch core serves both the curation filters (float64,
numpy in/out) and the splat perceptual loss (stays in the caller's autograd
graph). Statistics are population moments over valid (unpadded) windows,
averaged across windows and channels.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
import torch.nn.functional as F

from .errors import InvalidArgument


@dataclass(frozen=True)
class SsimParams:
    window: int = 11
    k1: float = 0.01
    k2: float = 0.03
    dynamic_range: float = 1.0

    def __post_init__(self):
        if self.window < 3 or self.window % 2 == 0:
            raise InvalidArgument(f"window must be odd and >= 3, got {self.window}")
        if self.k1 <= 0 or self.k2 <= 0:
            raise InvalidArgument("k1 and k2 must be > 0")

    @property
    def c1(self) -> float:
        return (self.k1 * self.dynamic_range) ** 2

    @property
    def c2(self) -> float:
        return (self.k2 * self.dynamic_range) ** 2


DEFAULT_SSIM = SsimParams()


def ssim_map(a: torch.Tensor, b: torch.Tensor, params: SsimParams = DEFAULT_SSIM) -> torch.Tensor:
    """Per-window SSIM, shape (C, H-w+1, W-w+1). Inputs (C, H, W), same dtype."""
    if a.shape != b.shape:
        raise InvalidArgument(f"ssim inputs differ in shape: {tuple(a.shape)} vs {tuple(b.shape)}")
    if a.shape[-1] < params.window or a.shape[-2] < params.window:
        raise InvalidArgument(
            f"image {tuple(a.shape)} smaller than ssim window {params.window}"
        )
    w = params.window
    # one pooling call over the five stacked moment maps
    stacked = torch.stack([a, b, a * a, b * b, a * b])
    mu_a, mu_b, m_aa, m_bb, m_ab = F.avg_pool2d(stacked, w, stride=1).unbind(0)
    var_a = m_aa - mu_a * mu_a
    var_b = m_bb - mu_b * mu_b
    cov = m_ab - mu_a * mu_b
    c1, c2 = params.c1, params.c2
    return ((2 * mu_a * mu_b + c1) * (2 * cov + c2)) / (
        (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)
    )


def ssim_torch(a: torch.Tensor, b: torch.Tensor, params: SsimParams = DEFAULT_SSIM) -> torch.Tensor:
    """Mean SSIM as a 0-dim tensor; differentiable. Inputs (C, H, W)."""
    return ssim_map(a, b, params).mean()


def ssim(a: np.ndarray, b: np.ndarray, params: SsimParams = DEFAULT_SSIM) -> float:
    """Mean SSIM between two images, channel-last (H, W, C) or (H, W)."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise InvalidArgument(f"ssim inputs differ in shape: {a.shape} vs {b.shape}")
    if a.ndim == 2:
        a = a[..., None]
        b = b[..., None]
    if a.ndim != 3:
        raise InvalidArgument(f"expected (H, W[, C]) image, got shape {a.shape}")
    at = torch.from_numpy(np.ascontiguousarray(a)).double().permute(2, 0, 1)
    bt = torch.from_numpy(np.ascontiguousarray(b)).double().permute(2, 0, 1)
    return float(ssim_torch(at, bt, params))
