"""Denoiser training on curated latent pairs."""

from __future__ import annotations

from dataclasses import dataclass, field

import torch

from ..errors import InvalidArgument, NonFiniteLoss
from .losses import loss_mr, total_loss
from .model import ConditionSignal, Denoiser
from .schedule import NoiseSchedule, forward_diffuse, predict_x0


@dataclass
class TrainingExample:
    """One curated asset: clean latent, static counterpart, condition, motion value."""

    z0: torch.Tensor        # (T, c, h, w), model layout
    z0_bar: torch.Tensor    # (T, c, h, w)
    cond: ConditionSignal
    m_raw: float            # pixel-space motion magnitude from the curator
    m_norm: float           # m_raw normalized into [0, 1] by the corpus 95th percentile


@dataclass(frozen=True)
class TrainConfig:
    iterations: int = 4000
    lr: float = 3e-5
    batch_size: int = 4
    omega: float = 5e-4
    cond_dropout: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.iterations < 0 or self.lr < 0 or self.omega < 0:
            raise InvalidArgument("iterations, lr, and omega must be >= 0")
        if not 0.0 <= self.cond_dropout <= 1.0:
            raise InvalidArgument(f"cond_dropout must be in [0, 1], got {self.cond_dropout}")


@dataclass
class TrainResult:
    loss_curve: list[float] = field(default_factory=list)
    ldm_curve: list[float] = field(default_factory=list)
    mr_curve: list[float] = field(default_factory=list)


def _stack_conditions(denoiser: Denoiser, batch: list[TrainingExample]) -> torch.Tensor:
    T, _, h, w = batch[0].z0.shape
    return torch.stack([denoiser.encode_condition(ex.cond, T, h, w) for ex in batch])


def train(
    denoiser: Denoiser,
    dataset: list[TrainingExample],
    schedule: NoiseSchedule,
    config: TrainConfig,
) -> TrainResult:
    """Adam on L_ldm + omega * L_mr; condition and motion drop out together.

    Deterministic given (seed, dataset order); `omega` does not consume
    randomness, so runs that differ only in omega see identical draws.
    """
    if not dataset:
        raise InvalidArgument("training dataset is empty")
    gen = torch.Generator().manual_seed(config.seed)
    opt = torch.optim.Adam(denoiser.parameters(), lr=config.lr)
    result = TrainResult()
    n = len(dataset)
    N = schedule.num_train_steps

    denoiser.train()
    for it in range(config.iterations):
        idx = torch.randint(0, n, (config.batch_size,), generator=gen)
        batch = [dataset[i] for i in idx.tolist()]
        z0 = torch.stack([ex.z0 for ex in batch])
        z0_bar = torch.stack([ex.z0_bar for ex in batch])
        cond = _stack_conditions(denoiser, batch)
        m = torch.tensor([ex.m_norm for ex in batch], dtype=z0.dtype)
        t = torch.randint(1, N + 1, (len(batch),), generator=gen)
        eps = torch.randn(z0.shape, generator=gen, dtype=z0.dtype)
        drop = torch.rand(len(batch), generator=gen) < config.cond_dropout

        z_t = forward_diffuse(z0, t, eps, schedule)
        eps_hat = denoiser(z_t, t, cond=cond, m=m, drop=drop)
        ldm = ((eps_hat - eps) ** 2).mean()
        z0_hat = predict_x0(z_t, eps_hat, t, schedule)
        dims = tuple(range(1, z0.ndim))
        m_true = ((z0 - z0_bar) ** 2).mean(dim=dims)
        m_hat = ((z0_hat - z0_bar) ** 2).mean(dim=dims)
        mr = ((m_true - m_hat) ** 2).mean()
        loss = total_loss(ldm, mr, config.omega)

        value = float(loss.detach())
        if not torch.isfinite(loss):
            raise NonFiniteLoss(it, value, f"ldm={float(ldm)!r} mr={float(mr)!r}")
        opt.zero_grad()
        loss.backward()
        opt.step()
        result.loss_curve.append(value)
        result.ldm_curve.append(float(ldm.detach()))
        result.mr_curve.append(float(mr.detach()))

    denoiser.eval()
    denoiser.trained = True
    return result


def motion_reconstruction_error(
    denoiser: Denoiser,
    dataset: list[TrainingExample],
    schedule: NoiseSchedule,
    eval_steps: tuple[int, ...] = (200, 500, 800),
    seed: int = 0,
) -> float:
    """Mean |m(z0) - m(z0_hat)| over a fixed evaluation grid of steps and noise."""
    gen = torch.Generator().manual_seed(seed)
    errs = []
    with torch.no_grad():
        for ex in dataset:
            z0 = ex.z0.unsqueeze(0)
            z0_bar = ex.z0_bar.unsqueeze(0)
            T, _, h, w = ex.z0.shape
            cond = denoiser.encode_condition(ex.cond, T, h, w).unsqueeze(0)
            m = torch.tensor([ex.m_norm], dtype=z0.dtype)
            for t in eval_steps:
                eps = torch.randn(z0.shape, generator=gen, dtype=z0.dtype)
                z_t = forward_diffuse(z0, t, eps, schedule)
                t_b = torch.tensor([t], dtype=torch.long)
                eps_hat = denoiser(z_t, t_b, cond=cond, m=m)
                z0_hat = predict_x0(z_t, eps_hat, t, schedule)
                m_true = ((z0 - z0_bar) ** 2).mean()
                m_hat = ((z0_hat - z0_bar) ** 2).mean()
                errs.append(float(torch.abs(m_true - m_hat)))
    return sum(errs) / len(errs)
