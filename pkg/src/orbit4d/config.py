"""Pipeline configuration: one JSON document, validated up front.

Defaults carry the reference hyperparameters (T=24, elevation 0, distance 2,
lr 3e-5, omega 5e-4, 50 sampling steps, w1=7.0, w2=0.5, 5000/2000 splat
iterations, loss weights 1/10/1); the demo preset shrinks budgets to desk
scale without touching the formulas.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .curation import CurationRule
from .diffusion import DenoiserConfig, GuidanceWeights, NoiseSchedule, TrainConfig
from .errors import InvalidArgument
from .scene import RenderSettings, build_trajectory
from .splat import ConstructConfig, OptimizeConfig, SplatLossWeights
from .ssim import SsimParams

SCHEMA_VERSION = 1


def _from_dict(cls, data: dict):
    names = {f.name for f in fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise InvalidArgument(f"unknown {cls.__name__} keys: {sorted(unknown)}")
    kwargs = {}
    for f in fields(cls):
        if f.name in data:
            value = data[f.name]
            kwargs[f.name] = tuple(value) if isinstance(value, list) else value
    return cls(**kwargs)


@dataclass(frozen=True)
class SceneConfig:
    T: int = 24
    resolution: int = 64
    elevation: float = 0.0
    distance: float = 2.0
    focal_scale: float = 1.0
    background: float = 0.5
    motion_scales: tuple[float, ...] = (0.25, 0.5, 1.0, 2.0)

    def render_settings(self) -> RenderSettings:
        return RenderSettings(
            height=self.resolution,
            width=self.resolution,
            focal_scale=self.focal_scale,
            background=self.background,
        )


@dataclass(frozen=True)
class CurationConfig:
    s_high: float = 0.95
    s_low: float = 0.4
    boundary_margin: int = 1

    def rule(self, T: int) -> CurationRule:
        return CurationRule.for_T(T, self.s_high, self.s_low, self.boundary_margin)


@dataclass(frozen=True)
class DiffusionConfig:
    num_train_steps: int = 1000
    beta_start: float = 1e-4
    beta_end: float = 0.02
    hidden: int = 32
    blocks: int = 3
    temb_dim: int = 32
    num_labels: int = 8
    condition: str = "static_video"
    lr: float = 3e-5
    iterations: int = 4000
    static_iterations: int = 1000
    batch_size: int = 4
    omega: float = 5e-4
    cond_dropout: float = 0.1
    sample_steps: int = 50
    w1: float = 7.0
    w2: float = 0.5
    m_levels: tuple[float, ...] = (0.2, 0.5, 0.9)
    # clean-latent clamp during sampling; the codec's latents are block means
    # of [0, 1] pixels, so the range is known. None disables.
    x0_clamp: tuple[float, float] | None = (0.0, 1.0)

    def schedule(self) -> NoiseSchedule:
        return NoiseSchedule(self.num_train_steps, self.beta_start, self.beta_end)

    def denoiser_config(self, static_mode: bool = False) -> DenoiserConfig:
        return DenoiserConfig(
            hidden=self.hidden,
            blocks=self.blocks,
            temb_dim=self.temb_dim,
            num_labels=self.num_labels,
            groups=min(4, self.hidden),
            static_mode=static_mode,
        )

    def train_config(self, seed: int, static: bool = False) -> TrainConfig:
        return TrainConfig(
            iterations=self.static_iterations if static else self.iterations,
            lr=self.lr,
            batch_size=self.batch_size,
            omega=0.0 if static else self.omega,
            cond_dropout=0.0 if static else self.cond_dropout,
            seed=seed,
        )

    def guidance(self) -> GuidanceWeights:
        return GuidanceWeights(self.w1, self.w2)


@dataclass(frozen=True)
class SplatConfig:
    n_init: int = 1024
    coarse_iterations: int = 5000
    fine_iterations: int = 2000
    lambda_l1: float = 1.0
    lambda_perc: float = 10.0
    lambda_depth: float = 1.0
    batch_views: int = 1
    max_clouds: int = 4

    def weights(self) -> SplatLossWeights:
        return SplatLossWeights(self.lambda_l1, self.lambda_perc, self.lambda_depth)

    def construct_config(self, seed: int) -> ConstructConfig:
        return ConstructConfig(
            n_init=self.n_init,
            coarse_iterations=self.coarse_iterations,
            fine_iterations=self.fine_iterations,
            batch_views=self.batch_views,
            seed=seed,
        )


@dataclass(frozen=True)
class PipelineConfig:
    schema_version: int = SCHEMA_VERSION
    n_assets: int = 4
    seed: int = 0
    torch_threads: int = 2
    scene: SceneConfig = field(default_factory=SceneConfig)
    curation: CurationConfig = field(default_factory=CurationConfig)
    diffusion: DiffusionConfig = field(default_factory=DiffusionConfig)
    splat: SplatConfig = field(default_factory=SplatConfig)

    def __post_init__(self):
        if self.schema_version != SCHEMA_VERSION:
            raise InvalidArgument(
                f"config schema {self.schema_version} unsupported (expected {SCHEMA_VERSION})"
            )
        if self.n_assets < 1:
            raise InvalidArgument("n_assets must be >= 1")
        self.validate()

    def validate(self) -> None:
        """Instantiate every downstream parameter object so range errors surface now."""
        build_trajectory(self.scene.T, self.scene.elevation, self.scene.distance)
        if self.scene.resolution % 4:
            raise InvalidArgument("resolution must be divisible by 4 for the latent codec")
        self.curation.rule(self.scene.T)
        SsimParams()
        self.diffusion.schedule()
        self.diffusion.denoiser_config()
        self.diffusion.train_config(seed=0)
        self.diffusion.guidance()
        if self.diffusion.condition not in ("none", "label", "image", "static_video"):
            raise InvalidArgument(f"unknown condition kind {self.diffusion.condition!r}")
        if len(self.diffusion.m_levels) < 1:
            raise InvalidArgument("need at least one sampling m level")
        self.splat.weights()
        self.splat.construct_config(seed=0)
        OptimizeConfig(iterations=1, batch_views=self.splat.batch_views)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineConfig":
        data = dict(data)
        sections = {}
        for name, sub in (
            ("scene", SceneConfig),
            ("curation", CurationConfig),
            ("diffusion", DiffusionConfig),
            ("splat", SplatConfig),
        ):
            if name in data:
                sections[name] = _from_dict(sub, data.pop(name))
        top = _from_dict(PipelineConfig, data)
        return PipelineConfig(**{**top.to_dict_shallow(), **sections})

    def to_dict_shallow(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "n_assets": self.n_assets,
            "seed": self.seed,
            "torch_threads": self.torch_threads,
            "scene": self.scene,
            "curation": self.curation,
            "diffusion": self.diffusion,
            "splat": self.splat,
        }

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()[:16]

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.canonical_json())

    @classmethod
    def load(cls, path: str | Path) -> "PipelineConfig":
        with open(path) as f:
            return cls.from_dict(json.load(f))

    def with_seed(self, seed: int) -> "PipelineConfig":
        return PipelineConfig(**{**self.to_dict_shallow(), "seed": seed})


def demo_config(seed: int = 0) -> PipelineConfig:
    """Desk-budget preset: tiny corpus, short budgets, same formulas."""
    return PipelineConfig(
        n_assets=4,
        seed=seed,
        scene=SceneConfig(T=24, resolution=48),
        diffusion=DiffusionConfig(
            hidden=16,
            blocks=2,
            temb_dim=16,
            lr=2e-3,
            iterations=400,
            static_iterations=200,
            sample_steps=10,
            w1=1.5,
            m_levels=(0.2, 0.8),
        ),
        splat=SplatConfig(
            n_init=256,
            coarse_iterations=250,
            fine_iterations=120,
            max_clouds=1,
        ),
    )
