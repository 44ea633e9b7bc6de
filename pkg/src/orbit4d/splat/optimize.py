"""Adam-based photometric fitting of a Gaussian cloud."""

from __future__ import annotations

from dataclasses import dataclass, field

import torch

from ..errors import InvalidArgument, NonFiniteLoss
from ..scene import CameraPose
from .gaussians import GaussianCloud4D
from .losses import SplatLossWeights, splat_loss
from .rasterize import RasterSettings, rasterize

# supervision item: (target frame, camera pose, normalized time)
Supervision = tuple[object, CameraPose, float]


@dataclass(frozen=True)
class OptimizeConfig:
    iterations: int = 1000
    batch_views: int = 1
    seed: int = 0
    lr_position: float = 1.6e-3
    lr_scale: float = 5e-3
    lr_rotation: float = 1e-3
    lr_opacity: float = 5e-2
    lr_color: float = 5e-3
    lr_motion: float = 1.6e-3

    def __post_init__(self):
        if self.iterations < 0 or self.batch_views < 1:
            raise InvalidArgument("iterations must be >= 0 and batch_views >= 1")


@dataclass
class OptimizeResult:
    cloud: GaussianCloud4D
    loss_curve: list[float] = field(default_factory=list)


def _optimizer(cloud: GaussianCloud4D, config: OptimizeConfig) -> torch.optim.Adam:
    groups = [
        {"params": [cloud.positions], "lr": config.lr_position},
        {"params": [cloud.log_scales], "lr": config.lr_scale},
        {"params": [cloud.rotations], "lr": config.lr_rotation},
        {"params": [cloud.opacity_logits], "lr": config.lr_opacity},
        {"params": [cloud.colors], "lr": config.lr_color},
        {"params": [cloud.motion_coeffs], "lr": config.lr_motion},
    ]
    return torch.optim.Adam(groups, eps=1e-15)


def optimize(
    cloud: GaussianCloud4D,
    supervision: list[Supervision],
    config: OptimizeConfig,
    weights: SplatLossWeights = SplatLossWeights(),
    settings: RasterSettings = RasterSettings(),
) -> OptimizeResult:
    """Gradient descent on the splat loss over random view minibatches.

    Mutates the cloud in place and returns it with the recorded loss curve;
    quaternions are renormalized after every step.
    """
    if not supervision:
        raise InvalidArgument("supervision set is empty")
    result = OptimizeResult(cloud=cloud)
    if config.iterations == 0:
        return result

    cloud.requires_grad_(True)
    opt = _optimizer(cloud, config)
    gen = torch.Generator().manual_seed(config.seed)
    n = len(supervision)

    for it in range(config.iterations):
        idx = torch.randint(0, n, (min(config.batch_views, n),), generator=gen)
        loss = None
        for i in idx.tolist():
            target, pose, tau = supervision[i]
            render = rasterize(cloud, pose, tau, settings)
            term = splat_loss(render, target, weights)
            loss = term if loss is None else loss + term
        loss = loss / len(idx)
        value = float(loss.detach())
        if not torch.isfinite(loss):
            raise NonFiniteLoss(it, value)
        if loss.requires_grad:   # every Gaussian culled in this batch -> no signal
            opt.zero_grad()
            loss.backward()
            opt.step()
            cloud.renormalize_rotations_()
        result.loss_curve.append(value)

    cloud.requires_grad_(False)
    return result
