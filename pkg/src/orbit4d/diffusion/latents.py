"""Fixed linear latent codec: 4x area downsampling with RGB passthrough.

Stands in for a learned autoencoder; being an exact linear projection it
keeps latent-space motion magnitudes well defined and makes
encode(decode(z)) an identity on the latent range.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch

from ..errors import InvalidArgument
from ..scene import OrbitalVideo, RgbVideo

FACTOR = 4


@dataclass(frozen=True)
class LatentVideo:
    data: torch.Tensor          # (T, h, w, c) float32, channel-last
    source_height: int
    source_width: int

    def __post_init__(self):
        if self.data.ndim != 4:
            raise InvalidArgument(f"latent must be (T, h, w, c), got {tuple(self.data.shape)}")
        if not torch.isfinite(self.data).all():
            raise InvalidArgument("latent contains non-finite entries")

    @property
    def shape(self) -> tuple[int, int, int, int]:
        return tuple(self.data.shape)

    def to_model(self) -> torch.Tensor:
        """(T, c, h, w) view for convolutional stacks."""
        return self.data.permute(0, 3, 1, 2)

    @classmethod
    def from_model(cls, x: torch.Tensor, source_height: int, source_width: int) -> "LatentVideo":
        return cls(x.permute(0, 2, 3, 1).contiguous(), source_height, source_width)


def encode(video: OrbitalVideo | RgbVideo | np.ndarray) -> LatentVideo:
    """Block-average each frame over FACTOR x FACTOR patches; channels pass through."""
    rgb = video if isinstance(video, np.ndarray) else video.rgb_stack()
    T, H, W, C = rgb.shape
    if H % FACTOR or W % FACTOR:
        raise InvalidArgument(f"frame size {H}x{W} not divisible by {FACTOR}")
    h, w = H // FACTOR, W // FACTOR
    latent = rgb.reshape(T, h, FACTOR, w, FACTOR, C).mean(axis=(2, 4))
    return LatentVideo(torch.from_numpy(np.ascontiguousarray(latent)), source_height=H, source_width=W)


def decode(latent: LatentVideo) -> np.ndarray:
    """Nearest-neighbor upsample back to pixel space; no clamping here.

    Clamp to [0, 1] only when exporting frames.
    """
    data = latent.data.detach().cpu().numpy()
    up = np.repeat(np.repeat(data, FACTOR, axis=1), FACTOR, axis=2)
    return up


def decode_video(latent: LatentVideo, trajectory=None) -> RgbVideo:
    return RgbVideo(rgb=np.clip(decode(latent), 0.0, 1.0), trajectory=trajectory)
