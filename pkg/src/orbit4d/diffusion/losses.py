"""Training losses and the three-term guided noise combination."""

from __future__ import annotations

from dataclasses import dataclass

import torch

from ..errors import InvalidArgument
from .latents import LatentVideo
from .schedule import NoiseSchedule, forward_diffuse


@dataclass(frozen=True)
class GuidanceWeights:
    w1: float = 7.0
    w2: float = 0.5

    def __post_init__(self):
        import math

        if not (math.isfinite(self.w1) and math.isfinite(self.w2)):
            raise InvalidArgument("guidance weights must be finite")


def _tensor(x):
    if isinstance(x, LatentVideo):
        return x.data
    return x


def cfg_combine(eps_cond, eps_uncond, eps_static, weights: GuidanceWeights):
    """eps + w1 * (cond - uncond) + w2 * (cond - static), elementwise.

    Scalars stay scalars; tensor inputs must agree in shape.
    """
    if all(isinstance(e, (int, float)) for e in (eps_cond, eps_uncond, eps_static)):
        return (
            eps_cond
            + weights.w1 * (eps_cond - eps_uncond)
            + weights.w2 * (eps_cond - eps_static)
        )
    c, u, s = _tensor(eps_cond), _tensor(eps_uncond), _tensor(eps_static)
    if c.shape != u.shape or c.shape != s.shape:
        raise InvalidArgument(
            f"guidance inputs disagree: {tuple(c.shape)}, {tuple(u.shape)}, {tuple(s.shape)}"
        )
    out = c + weights.w1 * (c - u) + weights.w2 * (c - s)
    if isinstance(eps_cond, LatentVideo):
        return LatentVideo(out, eps_cond.source_height, eps_cond.source_width)
    return out


def latent_motion_magnitude(z: torch.Tensor, z_bar: torch.Tensor) -> torch.Tensor:
    """Latent analogue of the pixel-space motion metric (per-element mean)."""
    z, z_bar = _tensor(z), _tensor(z_bar)
    if z.shape != z_bar.shape:
        raise InvalidArgument(f"latent shapes differ: {tuple(z.shape)} vs {tuple(z_bar.shape)}")
    return ((z - z_bar) ** 2).mean()


def loss_mr(z0, z0_hat, z0_bar) -> torch.Tensor:
    """Squared error between true and estimated latent motion magnitudes."""
    a, b, c = _tensor(z0), _tensor(z0_hat), _tensor(z0_bar)
    if not (a.shape == b.shape == c.shape):
        raise InvalidArgument("loss_mr needs three same-shape latents")
    m_true = latent_motion_magnitude(a, c)
    m_hat = latent_motion_magnitude(b, c)
    return (m_true - m_hat) ** 2


def _model_batch(x) -> torch.Tensor:
    """Normalize to the model layout (B, T, C, h, w)."""
    if isinstance(x, LatentVideo):
        return x.to_model().unsqueeze(0)
    if x.ndim == 4:
        return x.unsqueeze(0)
    if x.ndim == 5:
        return x
    raise InvalidArgument(f"expected a video latent, got shape {tuple(x.shape)}")


def loss_ldm(denoiser, z0, t, eps, schedule: NoiseSchedule, cond=None, m=None, drop=None):
    """Mean squared noise-prediction error on the diffused latent.

    Raw tensor inputs use the model layout (T, C, h, w) or batched
    (B, T, C, h, w); LatentVideo inputs are converted.
    """
    z0_t = _model_batch(z0)
    eps_t = _model_batch(eps)
    if z0_t.shape != eps_t.shape:
        raise InvalidArgument(f"noise shape {tuple(eps_t.shape)} != latent {tuple(z0_t.shape)}")
    z_t = forward_diffuse(z0_t, t, eps_t, schedule)
    t_b = t if isinstance(t, torch.Tensor) else torch.full((z0_t.shape[0],), int(t), dtype=torch.long)
    eps_hat = denoiser(z_t, t_b, cond=cond, m=m, drop=drop)
    return ((eps_hat - eps_t) ** 2).mean()


def total_loss(ldm, mr, omega: float):
    """L = L_ldm + omega * L_mr."""
    if omega < 0:
        raise InvalidArgument(f"omega must be >= 0, got {omega}")
    return ldm + omega * mr
