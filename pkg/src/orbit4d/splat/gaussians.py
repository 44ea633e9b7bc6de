"""4D Gaussian cloud: static 3D Gaussians plus per-Gaussian temporal trajectories.

Positions deform over normalized time through a small basis (linear, quadratic,
and one harmonic pair); every basis function vanishes at tau = 0 so the stored
position is the pose at the first timestamp.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch

from ..errors import InvalidArgument

# basis: tau, tau^2, sin(2 pi tau), 1 - cos(2 pi tau)
MOTION_BASIS_SIZE = 4

TWO_PI = 2.0 * torch.pi


def motion_basis(tau: float | torch.Tensor, dtype=torch.float32) -> torch.Tensor:
    t = torch.as_tensor(tau, dtype=dtype)
    return torch.stack(
        [t, t * t, torch.sin(TWO_PI * t), 1.0 - torch.cos(TWO_PI * t)], dim=-1
    )


@dataclass
class GaussianCloud4D:
    """Parameter tensors over N Gaussians; raw fields carry activations:

    opacity = sigmoid(opacity_logit), scale = exp(log_scale), and rotations
    are normalized in use so the effective quaternion is always unit.
    """

    positions: torch.Tensor       # (N, 3)
    log_scales: torch.Tensor      # (N, 3)
    rotations: torch.Tensor       # (N, 4) quaternion wxyz, renormalized in use
    opacity_logits: torch.Tensor  # (N,)
    colors: torch.Tensor          # (N, 3)
    motion_coeffs: torch.Tensor   # (N, 3, MOTION_BASIS_SIZE)
    background: float = 0.5

    def __post_init__(self):
        n = self.positions.shape[0]
        if n == 0:
            raise InvalidArgument("cloud must hold at least one Gaussian")
        expected = {
            "positions": (n, 3),
            "log_scales": (n, 3),
            "rotations": (n, 4),
            "opacity_logits": (n,),
            "colors": (n, 3),
            "motion_coeffs": (n, 3, MOTION_BASIS_SIZE),
        }
        for name, shape in expected.items():
            got = tuple(getattr(self, name).shape)
            if got != shape:
                raise InvalidArgument(f"{name} has shape {got}, expected {shape}")

    def __len__(self) -> int:
        return self.positions.shape[0]

    def parameters(self) -> list[torch.Tensor]:
        return [
            self.positions,
            self.log_scales,
            self.rotations,
            self.opacity_logits,
            self.colors,
            self.motion_coeffs,
        ]

    def requires_grad_(self, flag: bool = True) -> "GaussianCloud4D":
        for p in self.parameters():
            p.requires_grad_(flag)
        return self

    def detach_clone(self) -> "GaussianCloud4D":
        return GaussianCloud4D(
            *(p.detach().clone() for p in self.parameters()), background=self.background
        )

    def renormalize_rotations_(self) -> None:
        with torch.no_grad():
            self.rotations /= self.rotations.norm(dim=1, keepdim=True).clamp_min(1e-12)

    def opacities(self) -> torch.Tensor:
        return torch.sigmoid(self.opacity_logits)

    def scales(self) -> torch.Tensor:
        return torch.exp(self.log_scales)

    def unit_rotations(self) -> torch.Tensor:
        return self.rotations / self.rotations.norm(dim=1, keepdim=True).clamp_min(1e-12)


def quaternion_to_matrix(q: torch.Tensor) -> torch.Tensor:
    """(N, 4) unit quaternions (w, x, y, z) -> (N, 3, 3) rotation matrices."""
    w, x, y, z = q.unbind(-1)
    return torch.stack(
        [
            torch.stack([1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)], dim=-1),
            torch.stack([2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)], dim=-1),
            torch.stack([2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)], dim=-1),
        ],
        dim=-2,
    )


def deform(cloud: GaussianCloud4D, tau: float) -> torch.Tensor:
    """Positions at normalized time tau, (N, 3); other attributes are static."""
    if not 0.0 <= tau < 1.0 + 1e-12:
        raise InvalidArgument(f"tau must lie in [0, 1), got {tau}")
    basis = motion_basis(tau, dtype=cloud.positions.dtype)   # (MOTION_BASIS_SIZE,)
    return cloud.positions + torch.einsum("ncb,b->nc", cloud.motion_coeffs, basis)


def world_covariances(cloud: GaussianCloud4D) -> torch.Tensor:
    """(N, 3, 3) covariance R S S^T R^T from scales and unit rotations."""
    R = quaternion_to_matrix(cloud.unit_rotations())
    S = cloud.scales()
    RS = R * S[:, None, :]
    return RS @ RS.transpose(1, 2)
