"""Small convolutional noise predictor over orbital-video latents.

Spatial residual blocks with FiLM conditioning from a summed time + motion
embedding, a temporal convolution per block for frame-axis mixing, and the
prompt condition concatenated on the channel axis. A static-mode twin (no
motion pathway) plays the 3D-but-not-4D reference model.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, asdict

import torch
import torch.nn as nn
import torch.nn.functional as F

from ..errors import InvalidArgument

CONDITION_KINDS = ("none", "label", "image", "static_video")


@dataclass(frozen=True)
class DenoiserConfig:
    latent_channels: int = 3
    cond_channels: int = 3
    hidden: int = 32
    blocks: int = 3
    temb_dim: int = 32
    num_labels: int = 8
    groups: int = 4
    static_mode: bool = False

    def __post_init__(self):
        if self.hidden % self.groups:
            raise InvalidArgument(f"hidden={self.hidden} not divisible by groups={self.groups}")
        if self.temb_dim % 2:
            raise InvalidArgument(f"temb_dim must be even, got {self.temb_dim}")

    def architecture_hash(self) -> str:
        return hashlib.sha256(json.dumps(asdict(self), sort_keys=True).encode()).hexdigest()[:16]


@dataclass(frozen=True)
class ConditionSignal:
    """Exactly one of: nothing, a class label, an image latent, a static-video latent."""

    kind: str
    label: int | None = None
    latent: torch.Tensor | None = None

    def __post_init__(self):
        if self.kind not in CONDITION_KINDS:
            raise InvalidArgument(f"unknown condition kind {self.kind!r}")
        if self.kind == "label" and (self.label is None or self.latent is not None):
            raise InvalidArgument("label condition needs label=<id> and no latent")
        if self.kind in ("image", "static_video") and self.latent is None:
            raise InvalidArgument(f"{self.kind} condition needs a latent tensor")
        if self.kind == "image" and self.latent.ndim != 3:
            raise InvalidArgument("image condition latent must be (c, h, w)")
        if self.kind == "static_video" and self.latent.ndim != 4:
            raise InvalidArgument("static_video condition latent must be (T, c, h, w)")
        if self.kind == "none" and (self.label is not None or self.latent is not None):
            raise InvalidArgument("none condition carries no payload")

    @classmethod
    def none(cls) -> "ConditionSignal":
        return cls(kind="none")

    @classmethod
    def of_label(cls, label: int) -> "ConditionSignal":
        return cls(kind="label", label=label)

    @classmethod
    def of_image(cls, latent: torch.Tensor) -> "ConditionSignal":
        return cls(kind="image", latent=latent)

    @classmethod
    def of_static_video(cls, latent: torch.Tensor) -> "ConditionSignal":
        return cls(kind="static_video", latent=latent)


def sinusoidal_embedding(t: torch.Tensor, dim: int, dtype: torch.dtype) -> torch.Tensor:
    half = dim // 2
    freqs = torch.exp(
        -math.log(10000.0) * torch.arange(half, dtype=dtype) / max(half - 1, 1)
    )
    ang = t.to(dtype)[:, None] * freqs[None, :]
    return torch.cat([torch.sin(ang), torch.cos(ang)], dim=1)


class MotionEmbedding(nn.Module):
    """Two affine layers with a pointwise nonlinearity, scalar -> embedding width."""

    def __init__(self, dim: int):
        super().__init__()
        self.fc1 = nn.Linear(1, dim)
        self.fc2 = nn.Linear(dim, dim)

    def forward(self, m: torch.Tensor) -> torch.Tensor:
        return self.fc2(F.silu(self.fc1(m[:, None])))


class _Block(nn.Module):
    def __init__(self, hidden: int, temb_dim: int, groups: int):
        super().__init__()
        self.norm1 = nn.GroupNorm(groups, hidden)
        self.conv1 = nn.Conv2d(hidden, hidden, 3, padding=1)
        self.film = nn.Linear(temb_dim, 2 * hidden)
        self.norm2 = nn.GroupNorm(groups, hidden)
        self.conv2 = nn.Conv2d(hidden, hidden, 3, padding=1)
        self.tconv = nn.Conv1d(hidden, hidden, 3, padding=1)

    def forward(self, x: torch.Tensor, emb: torch.Tensor, T: int) -> torch.Tensor:
        # x: (B*T, hidden, h, w), emb: (B, temb_dim)
        h = self.conv1(F.silu(self.norm1(x)))
        scale, shift = self.film(emb).repeat_interleave(T, dim=0).chunk(2, dim=1)
        h = h * (1.0 + scale[:, :, None, None]) + shift[:, :, None, None]
        h = self.conv2(F.silu(self.norm2(h)))
        x = x + h
        # frame-axis mixing: fold space into the batch, convolve along T
        BT, C, ph, pw = x.shape
        B = BT // T
        xt = x.reshape(B, T, C, ph, pw).permute(0, 3, 4, 2, 1).reshape(B * ph * pw, C, T)
        xt = self.tconv(xt)
        xt = xt.reshape(B, ph, pw, C, T).permute(0, 4, 3, 1, 2).reshape(BT, C, ph, pw)
        return x + xt


class Denoiser(nn.Module):
    """Predicts the added noise for a batch of video latents.

    forward(z, t, cond, m, drop) with z (B, T, C, h, w); per-element `drop`
    realizes the unconditional branch by zeroing both the condition channels
    and the motion embedding.
    """

    def __init__(self, config: DenoiserConfig = DenoiserConfig()):
        super().__init__()
        self.config = config
        c, cc, hid = config.latent_channels, config.cond_channels, config.hidden
        self.in_conv = nn.Conv2d(c + cc, hid, 3, padding=1)
        self.blocks = nn.ModuleList(
            [_Block(hid, config.temb_dim, config.groups) for _ in range(config.blocks)]
        )
        self.temb_mlp = nn.Sequential(
            nn.Linear(config.temb_dim, config.temb_dim),
            nn.SiLU(),
            nn.Linear(config.temb_dim, config.temb_dim),
        )
        self.motion_embed = None if config.static_mode else MotionEmbedding(config.temb_dim)
        self.label_embed = nn.Embedding(config.num_labels, cc)
        self.out_norm = nn.GroupNorm(config.groups, hid)
        self.out_conv = nn.Conv2d(hid, c, 3, padding=1)
        nn.init.zeros_(self.out_conv.weight)
        nn.init.zeros_(self.out_conv.bias)
        self.trained = False

    @property
    def static_mode(self) -> bool:
        return self.config.static_mode

    def parameter_count(self) -> int:
        return sum(p.numel() for p in self.parameters())

    def encode_condition(self, signal: ConditionSignal, T: int, h: int, w: int) -> torch.Tensor:
        """(T, cond_channels, h, w) tensor for channel concatenation."""
        cc = self.config.cond_channels
        dtype = self.out_conv.weight.dtype
        if signal.kind == "none":
            return torch.zeros(T, cc, h, w, dtype=dtype)
        if signal.kind == "label":
            if not 0 <= signal.label < self.config.num_labels:
                raise InvalidArgument(f"label {signal.label} outside embedding table")
            vec = self.label_embed(torch.tensor(signal.label))
            return vec.to(dtype)[None, :, None, None].expand(T, cc, h, w)
        lat = signal.latent.to(dtype)
        if signal.kind == "image":
            if lat.shape != (cc, h, w):
                raise InvalidArgument(
                    f"image condition shape {tuple(lat.shape)} != ({cc}, {h}, {w})"
                )
            return lat[None].expand(T, cc, h, w)
        if lat.shape != (T, cc, h, w):
            raise InvalidArgument(
                f"static_video condition shape {tuple(lat.shape)} != ({T}, {cc}, {h}, {w})"
            )
        return lat

    def forward(
        self,
        z: torch.Tensor,
        t: torch.Tensor,
        cond: torch.Tensor | None = None,
        m: torch.Tensor | None = None,
        drop: torch.Tensor | None = None,
    ) -> torch.Tensor:
        if z.ndim != 5:
            raise InvalidArgument(f"expected (B, T, C, h, w) latent, got {tuple(z.shape)}")
        B, T, C, h, w = z.shape
        dtype = z.dtype
        if cond is None:
            cond = torch.zeros(B, T, self.config.cond_channels, h, w, dtype=dtype)
        if drop is not None:
            cond = cond * (~drop).to(dtype)[:, None, None, None, None]

        emb = self.temb_mlp(sinusoidal_embedding(t, self.config.temb_dim, dtype))
        if self.motion_embed is not None:
            mv = torch.zeros(B, dtype=dtype) if m is None else m.to(dtype)
            memb = self.motion_embed(mv)
            if drop is not None:
                memb = memb * (~drop).to(dtype)[:, None]
            emb = emb + memb

        x = torch.cat([z, cond], dim=2).reshape(B * T, C + self.config.cond_channels, h, w)
        x = self.in_conv(x)
        for block in self.blocks:
            x = block(x, emb, T)
        x = self.out_conv(F.silu(self.out_norm(x)))
        return x.reshape(B, T, C, h, w)
