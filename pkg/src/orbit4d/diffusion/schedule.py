"""Linear-beta noise schedule and the deterministic (eta=0) DDIM update."""

from __future__ import annotations

from dataclasses import dataclass, field

import torch

from ..errors import InvalidArgument
from .latents import LatentVideo


@dataclass(frozen=True)
class NoiseSchedule:
    num_train_steps: int = 1000
    beta_start: float = 1e-4
    beta_end: float = 0.02
    betas: torch.Tensor = field(init=False, repr=False)
    alpha_bar: torch.Tensor = field(init=False, repr=False)   # (N+1,), alpha_bar[0] == 1

    def __post_init__(self):
        if self.num_train_steps < 1:
            raise InvalidArgument(f"num_train_steps must be >= 1, got {self.num_train_steps}")
        if not 0.0 < self.beta_start <= self.beta_end < 1.0:
            raise InvalidArgument(
                f"betas must satisfy 0 < start <= end < 1, got ({self.beta_start}, {self.beta_end})"
            )
        betas = torch.linspace(self.beta_start, self.beta_end, self.num_train_steps,
                               dtype=torch.float64)
        alpha_bar = torch.cat([torch.ones(1, dtype=torch.float64),
                               torch.cumprod(1.0 - betas, dim=0)])
        object.__setattr__(self, "betas", betas)
        object.__setattr__(self, "alpha_bar", alpha_bar)

    def to_dict(self) -> dict:
        return {
            "num_train_steps": self.num_train_steps,
            "beta_start": self.beta_start,
            "beta_end": self.beta_end,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NoiseSchedule":
        return cls(**d)


def _unwrap(x):
    return (x.data, True) if isinstance(x, LatentVideo) else (x, False)


def _rewrap(t: torch.Tensor, template, was_latent: bool):
    if was_latent:
        return LatentVideo(t, template.source_height, template.source_width)
    return t


def _coeffs(schedule: NoiseSchedule, t, like: torch.Tensor):
    """sqrt(alpha_bar_t) and sqrt(1 - alpha_bar_t), broadcastable against `like`."""
    if isinstance(t, torch.Tensor):
        ab = schedule.alpha_bar[t.long()].to(like.dtype)
        ab = ab.reshape(-1, *([1] * (like.ndim - 1)))
    else:
        ab = schedule.alpha_bar[int(t)].to(like.dtype)
    return torch.sqrt(ab), torch.sqrt(1.0 - ab)


def _check_t(schedule: NoiseSchedule, t, low: int = 1) -> None:
    tt = t.flatten().tolist() if isinstance(t, torch.Tensor) else [int(t)]
    for v in tt:
        if not low <= v <= schedule.num_train_steps:
            raise InvalidArgument(
                f"step {v} outside [{low}, {schedule.num_train_steps}]"
            )


def forward_diffuse(z0, t, eps, schedule: NoiseSchedule):
    """z_t = sqrt(alpha_bar_t) z0 + sqrt(1 - alpha_bar_t) eps."""
    z0_t, wrapped = _unwrap(z0)
    eps_t, _ = _unwrap(eps)
    if z0_t.shape != eps_t.shape:
        raise InvalidArgument(f"noise shape {tuple(eps_t.shape)} != latent {tuple(z0_t.shape)}")
    _check_t(schedule, t, low=0)
    a, s = _coeffs(schedule, t, z0_t)
    return _rewrap(a * z0_t + s * eps_t, z0, wrapped)


def predict_x0(z_t, eps_hat, t, schedule: NoiseSchedule):
    """Invert the forward marginal under the model's noise estimate."""
    zt_t, wrapped = _unwrap(z_t)
    eh_t, _ = _unwrap(eps_hat)
    if zt_t.shape != eh_t.shape:
        raise InvalidArgument("z_t and eps_hat shapes differ")
    _check_t(schedule, t, low=0)
    a, s = _coeffs(schedule, t, zt_t)
    return _rewrap((zt_t - s * eh_t) / a, z_t, wrapped)


def ddim_step(z_t, eps_hat, t, t_prev, schedule: NoiseSchedule,
              x0_clamp: tuple[float, float] | None = None):
    """Deterministic update: re-noise the x0 estimate at the earlier step.

    `x0_clamp` optionally bounds the clean-latent estimate (sampler hygiene
    for latent spaces with a known range); None leaves the update exact.
    """
    if isinstance(t, torch.Tensor) or isinstance(t_prev, torch.Tensor):
        raise InvalidArgument("ddim_step takes scalar steps")
    if not t_prev < t:
        raise InvalidArgument(f"need t_prev < t, got {t_prev} >= {t}")
    _check_t(schedule, t)
    _check_t(schedule, t_prev, low=0)
    zt_t, wrapped = _unwrap(z_t)
    x0 = _unwrap(predict_x0(z_t, eps_hat, t, schedule))[0]
    if x0_clamp is not None:
        x0 = x0.clamp(x0_clamp[0], x0_clamp[1])
    eh_t, _ = _unwrap(eps_hat)
    a_prev, s_prev = _coeffs(schedule, t_prev, zt_t)
    return _rewrap(a_prev * x0 + s_prev * eh_t, z_t, wrapped)


def ddim_timesteps(schedule: NoiseSchedule, steps: int) -> list[int]:
    """Uniform-stride descending step path ending at 0, e.g. 1000, 980, ..., 0."""
    if not 1 <= steps <= schedule.num_train_steps:
        raise InvalidArgument(
            f"steps must lie in [1, {schedule.num_train_steps}], got {steps}"
        )
    N = schedule.num_train_steps
    path = [round(N * k / steps) for k in range(steps, -1, -1)]
    # rounding can collide for steps close to N; enforce strict descent
    out = [path[0]]
    for v in path[1:]:
        if v < out[-1]:
            out.append(v)
    if out[-1] != 0:
        out.append(0)
    return out
