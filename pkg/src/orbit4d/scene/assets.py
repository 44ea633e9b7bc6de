"""Procedural animated assets: primitives plus deterministic motion programs.

Every time-varying quantity is a pure function of (program, tau); the only
randomness is in `sample_asset`, driven by an explicit seed.
"""

from __future__ import annotations

import colorsys
from dataclasses import dataclass, field

import numpy as np

from ..errors import InvalidArgument

SHAPES = ("sphere", "box", "capsule")

TWO_PI = 2.0 * np.pi


def _rotation_matrix(axis: np.ndarray, angle: float) -> np.ndarray:
    """Rodrigues rotation about a unit axis."""
    axis = np.asarray(axis, dtype=float)
    n = np.linalg.norm(axis)
    if n == 0.0:
        return np.eye(3)
    x, y, z = axis / n
    c, s = np.cos(angle), np.sin(angle)
    C = 1.0 - c
    return np.array(
        [
            [c + x * x * C, x * y * C - z * s, x * z * C + y * s],
            [y * x * C + z * s, c + y * y * C, y * z * C - x * s],
            [z * x * C - y * s, z * y * C + x * s, c + z * z * C],
        ]
    )


def _shift_hue(rgb: np.ndarray, amount: float) -> np.ndarray:
    h, s, v = colorsys.rgb_to_hsv(*rgb)
    return np.array(colorsys.hsv_to_rgb((h + amount) % 1.0, s, v))


@dataclass(frozen=True)
class MotionProgram:
    """Per-channel motion amplitudes, all scaled by one global motion_scale.

    Translation is sinusoidal with one cycle over tau in [0,1), rotation is a
    steady spin (turns per unit tau), scale oscillates log-uniformly so it
    stays positive, and hue drifts linearly in tau.
    """

    motion_scale: float = 1.0
    translation: tuple[float, float, float] = (0.0, 0.0, 0.0)
    translation_phase: tuple[float, float, float] = (0.0, 0.0, 0.0)
    rotation_axis: tuple[float, float, float] = (0.0, 0.0, 1.0)
    rotation_rate: float = 0.0
    scale_osc: float = 0.0
    scale_phase: float = 0.0
    hue_drift: float = 0.0

    def __post_init__(self):
        if self.motion_scale < 0:
            raise InvalidArgument(f"motion_scale must be >= 0, got {self.motion_scale}")

    def offset(self, tau: float) -> np.ndarray:
        amp = self.motion_scale * np.asarray(self.translation)
        phase = np.asarray(self.translation_phase)
        return amp * np.sin(TWO_PI * (tau + phase))

    def rotation(self, tau: float) -> np.ndarray:
        angle = TWO_PI * self.motion_scale * self.rotation_rate * tau
        return _rotation_matrix(np.asarray(self.rotation_axis), angle)

    def scale_factor(self, tau: float) -> float:
        return float(
            np.exp(self.motion_scale * self.scale_osc * np.sin(TWO_PI * (tau + self.scale_phase)))
        )

    def hue_shift(self, tau: float) -> float:
        return self.motion_scale * self.hue_drift * tau

    def to_dict(self) -> dict:
        return {
            "motion_scale": self.motion_scale,
            "translation": list(self.translation),
            "translation_phase": list(self.translation_phase),
            "rotation_axis": list(self.rotation_axis),
            "rotation_rate": self.rotation_rate,
            "scale_osc": self.scale_osc,
            "scale_phase": self.scale_phase,
            "hue_drift": self.hue_drift,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MotionProgram":
        return cls(
            motion_scale=d["motion_scale"],
            translation=tuple(d["translation"]),
            translation_phase=tuple(d["translation_phase"]),
            rotation_axis=tuple(d["rotation_axis"]),
            rotation_rate=d["rotation_rate"],
            scale_osc=d["scale_osc"],
            scale_phase=d["scale_phase"],
            hue_drift=d["hue_drift"],
        )


@dataclass(frozen=True)
class AnimatedPrimitive:
    shape: str
    position: tuple[float, float, float]
    rotation_axis: tuple[float, float, float]
    rotation_angle: float                      # base orientation, radians
    scale: tuple[float, float, float]
    albedo: tuple[float, float, float]
    motion: MotionProgram = field(default_factory=MotionProgram)

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise InvalidArgument(f"unknown shape {self.shape!r}, expected one of {SHAPES}")
        if min(self.scale) <= 0:
            raise InvalidArgument(f"scale components must be > 0, got {self.scale}")

    def at(self, tau: float) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """(position, rotation matrix, scale, albedo) at normalized time tau."""
        base_rot = _rotation_matrix(np.asarray(self.rotation_axis), self.rotation_angle)
        rot = self.motion.rotation(tau) @ base_rot
        pos = np.asarray(self.position) + self.motion.offset(tau)
        scale = np.asarray(self.scale) * self.motion.scale_factor(tau)
        albedo = _shift_hue(np.asarray(self.albedo), self.motion.hue_shift(tau))
        return pos, rot, scale, albedo

    def to_dict(self) -> dict:
        return {
            "shape": self.shape,
            "position": list(self.position),
            "rotation_axis": list(self.rotation_axis),
            "rotation_angle": self.rotation_angle,
            "scale": list(self.scale),
            "albedo": list(self.albedo),
            "motion": self.motion.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AnimatedPrimitive":
        return cls(
            shape=d["shape"],
            position=tuple(d["position"]),
            rotation_axis=tuple(d["rotation_axis"]),
            rotation_angle=d["rotation_angle"],
            scale=tuple(d["scale"]),
            albedo=tuple(d["albedo"]),
            motion=MotionProgram.from_dict(d["motion"]),
        )


@dataclass(frozen=True)
class DynamicAsset:
    primitives: tuple[AnimatedPrimitive, ...]
    seed: int
    label: int

    def __post_init__(self):
        if not self.primitives:
            raise InvalidArgument("asset needs at least one primitive")

    @property
    def motion_scale(self) -> float:
        return self.primitives[0].motion.motion_scale

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "label": self.label,
            "primitives": [p.to_dict() for p in self.primitives],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DynamicAsset":
        return cls(
            primitives=tuple(AnimatedPrimitive.from_dict(p) for p in d["primitives"]),
            seed=d["seed"],
            label=d["label"],
        )


def sample_asset(seed: int, motion_scale: float = 1.0, label: int = 0) -> DynamicAsset:
    """Draw a deterministic 1-3 primitive asset.

    Amplitude floors keep every asset visibly dynamic for motion_scale > 0, so
    the rendered motion magnitude grows monotonically with motion_scale.
    """
    if motion_scale < 0:
        raise InvalidArgument(f"motion_scale must be >= 0, got {motion_scale}")
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 4))
    prims = []
    for _ in range(n):
        shape = SHAPES[int(rng.integers(0, len(SHAPES)))]
        position = rng.uniform(-0.28, 0.28, size=3)
        axis = rng.normal(size=3)
        axis /= np.linalg.norm(axis)
        scale = rng.uniform(0.14, 0.30, size=3)
        if shape == "capsule":
            # keep radius circular so local intersection math stays exact
            scale[1] = scale[0]
            scale[2] = scale[0] * rng.uniform(1.2, 1.8)
        hue = rng.uniform(0.0, 1.0)
        albedo = colorsys.hsv_to_rgb(hue, rng.uniform(0.55, 0.95), rng.uniform(0.7, 1.0))
        # amplitude bands chosen so motion_scale <= ~2 stays inside the
        # curation keep band (visible motion, no wholesale structure change)
        trans = rng.uniform(0.03, 0.08, size=3) * rng.choice([-1.0, 1.0], size=3)
        motion = MotionProgram(
            motion_scale=motion_scale,
            translation=tuple(trans),
            translation_phase=tuple(rng.uniform(0.0, 1.0, size=3)),
            rotation_axis=tuple(axis),
            rotation_rate=float(rng.uniform(0.0, 0.15)),
            scale_osc=float(rng.uniform(0.02, 0.08)),
            scale_phase=float(rng.uniform(0.0, 1.0)),
            hue_drift=float(rng.uniform(0.03, 0.12)),
        )
        prims.append(
            AnimatedPrimitive(
                shape=shape,
                position=tuple(position),
                rotation_axis=tuple(axis),
                rotation_angle=float(rng.uniform(0.0, TWO_PI)),
                scale=tuple(scale),
                albedo=tuple(albedo),
                motion=motion,
            )
        )
    return DynamicAsset(primitives=tuple(prims), seed=seed, label=label)
