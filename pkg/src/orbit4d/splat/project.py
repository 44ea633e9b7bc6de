"""Perspective projection of 3D Gaussians to screen-space 2D Gaussians."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch

from ..scene import CameraPose


@dataclass(frozen=True)
class Intrinsics:
    height: int
    width: int
    focal_px: float

    @property
    def cx(self) -> float:
        return (self.width - 1) / 2.0

    @property
    def cy(self) -> float:
        return (self.height - 1) / 2.0


def camera_matrices(pose: CameraPose, dtype=torch.float32) -> tuple[torch.Tensor, torch.Tensor]:
    """World-to-camera rotation (3, 3) and camera origin (3,).

    Camera frame: x right, y up, z forward (into the scene along the view).
    """
    forward, right, up = pose.basis()
    R = torch.from_numpy(np.stack([right, up, forward])).to(dtype)
    origin = torch.from_numpy(pose.position()).to(dtype)
    return R, origin


def project(
    means_world: torch.Tensor,
    covs_world: torch.Tensor,
    pose: CameraPose,
    intr: Intrinsics,
    near: float = 0.05,
) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor, torch.Tensor]:
    """Project Gaussians to pixel space.

    Returns (means2d (N, 2) in pixel coords, covs2d (N, 2, 2), depth (N,),
    in_front (N,) bool). Behind-camera Gaussians are flagged, not dropped, so
    callers control masking without breaking autograd shapes.
    """
    R, origin = camera_matrices(pose, dtype=means_world.dtype)
    cam = (means_world - origin) @ R.T          # (N, 3)
    x, y, z = cam.unbind(-1)
    in_front = z > near
    z_safe = z.clamp_min(near)

    f = intr.focal_px
    # pixel row grows downward while camera y grows upward
    px = intr.cx + f * x / z_safe
    py = intr.cy - f * y / z_safe
    means2d = torch.stack([px, py], dim=-1)

    # Jacobian of (px, py) wrt camera coords at the mean
    zero = torch.zeros_like(z_safe)
    J = torch.stack(
        [
            torch.stack([f / z_safe, zero, -f * x / z_safe**2], dim=-1),
            torch.stack([zero, -f / z_safe, f * y / z_safe**2], dim=-1),
        ],
        dim=-2,
    )                                            # (N, 2, 3)
    cov_cam = R @ covs_world @ R.T               # broadcast (N, 3, 3)
    covs2d = J @ cov_cam @ J.transpose(1, 2)
    return means2d, covs2d, z, in_front
