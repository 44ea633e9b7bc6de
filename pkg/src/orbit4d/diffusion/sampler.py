"""Guided DDIM sampling with conditional, unconditional, and static-model branches."""

from __future__ import annotations

import torch

from ..errors import InvalidArgument, InvalidState
from .latents import LatentVideo
from .losses import GuidanceWeights, cfg_combine
from .model import ConditionSignal
from .schedule import NoiseSchedule, ddim_step, ddim_timesteps


def sample(
    denoiser,
    static_denoiser,
    y: ConditionSignal | None,
    m: float,
    steps: int,
    weights: GuidanceWeights,
    seed: int,
    schedule: NoiseSchedule,
    shape: tuple[int, int, int, int],
    source_hw: tuple[int, int] | None = None,
    x0_clamp: tuple[float, float] | None = None,
) -> LatentVideo:
    """Iteratively denoise seeded Gaussian noise into a video latent.

    Per step the conditional prediction is pushed away from both the
    unconditional branch (condition and motion dropped together) and the
    static-model branch (same condition, no motion pathway).
    """
    if steps < 1:
        raise InvalidArgument(f"steps must be >= 1, got {steps}")
    for model, name in ((denoiser, "denoiser"), (static_denoiser, "static_denoiser")):
        if not getattr(model, "trained", False):
            raise InvalidState(f"{name} is not trained")

    T, c, h, w = shape
    gen = torch.Generator().manual_seed(seed)
    z = torch.randn(1, T, c, h, w, generator=gen)

    cond = None
    if y is not None and y.kind != "none":
        cond = denoiser.encode_condition(y, T, h, w).unsqueeze(0)
    m_t = torch.tensor([float(m)])
    drop = torch.tensor([True])

    path = ddim_timesteps(schedule, steps)
    with torch.no_grad():
        for t, t_prev in zip(path[:-1], path[1:]):
            t_b = torch.tensor([t], dtype=torch.long)
            eps_c = denoiser(z, t_b, cond=cond, m=m_t)
            eps_u = denoiser(z, t_b, cond=None, m=None, drop=drop)
            eps_s = static_denoiser(z, t_b, cond=cond)
            eps_hat = cfg_combine(eps_c, eps_u, eps_s, weights)
            z = ddim_step(z, eps_hat, t, t_prev, schedule, x0_clamp=x0_clamp)

    if source_hw is None:
        source_hw = (h * 4, w * 4)
    return LatentVideo.from_model(z.squeeze(0), source_hw[0], source_hw[1])
