"""Dataset curation: SSIM probe filtering, boundary rejection, motion magnitude.

An asset survives when its three fixed-front-view probes show real but bounded
change (reject when BOTH probe scores exceed s_high, or when EITHER falls
below s_low) and its dynamic sweep never pushes foreground pixels into the
border margin.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvalidArgument
from .scene import (
    CameraPose,
    DynamicAsset,
    OrbitalVideo,
    OrbitTrajectory,
    RenderSettings,
    RgbVideo,
    render_frame,
    render_orbital,
)
from .ssim import DEFAULT_SSIM, SsimParams, ssim

REASONS = ("kept", "too_static", "too_distorted", "out_of_boundary")


@dataclass(frozen=True)
class CurationRule:
    s_high: float = 0.95
    s_low: float = 0.4
    probe_indices: tuple[int, int, int] = (0, 6, 12)   # tau_0, tau_{T/4}, tau_{T/2} for T=24
    boundary_margin: int = 1

    def __post_init__(self):
        if not 0.0 <= self.s_low < self.s_high <= 1.0:
            raise InvalidArgument(
                f"need 0 <= s_low < s_high <= 1, got s_low={self.s_low}, s_high={self.s_high}"
            )
        if len(set(self.probe_indices)) != 3:
            raise InvalidArgument(f"probe indices must be distinct, got {self.probe_indices}")
        if self.boundary_margin < 0:
            raise InvalidArgument(f"boundary_margin must be >= 0, got {self.boundary_margin}")

    @classmethod
    def for_T(cls, T: int, s_high: float = 0.95, s_low: float = 0.4, margin: int = 1):
        return cls(s_high, s_low, (0, T // 4, T // 2), margin)


@dataclass(frozen=True)
class CurationVerdict:
    asset_id: str
    kept: bool
    reason: str
    ssim_scores: tuple[float, float]
    motion_magnitude: float

    def __post_init__(self):
        if self.reason not in REASONS:
            raise InvalidArgument(f"unknown reason {self.reason!r}")
        if (self.reason == "kept") != self.kept:
            raise InvalidArgument("reason 'kept' must match the kept flag")

    def to_dict(self) -> dict:
        return {
            "asset_id": self.asset_id,
            "kept": self.kept,
            "reason": self.reason,
            "ssim_scores": list(self.ssim_scores),
            "motion_magnitude": self.motion_magnitude,
        }


@dataclass
class CurationReport:
    rule: CurationRule
    verdicts: list[CurationVerdict] = field(default_factory=list)
    errors: list[dict] = field(default_factory=list)

    @property
    def counts(self) -> dict[str, int]:
        c = {r: 0 for r in REASONS}
        for v in self.verdicts:
            c[v.reason] += 1
        return c

    def kept_ids(self) -> list[str]:
        return [v.asset_id for v in self.verdicts if v.kept]

    def to_dict(self) -> dict:
        return {
            "rule": {
                "s_high": self.rule.s_high,
                "s_low": self.rule.s_low,
                "probe_indices": list(self.rule.probe_indices),
                "boundary_margin": self.rule.boundary_margin,
            },
            "counts": self.counts,
            "verdicts": [v.to_dict() for v in sorted(self.verdicts, key=lambda v: v.asset_id)],
            "errors": self.errors,
        }

    def save(self, path: str | Path) -> None:
        with open(path, "w") as f:
            json.dump(self.to_dict(), f, indent=2, sort_keys=True)
            f.write("\n")


def motion_magnitude(video: OrbitalVideo | RgbVideo, static: OrbitalVideo | RgbVideo) -> float:
    """Mean squared frame difference against the frozen counterpart.

    Camera motion cancels because both sweeps share the trajectory; the norm
    is a per-pixel-per-channel mean so the value is resolution independent.
    """
    if isinstance(static, OrbitalVideo) and not static.is_static:
        raise InvalidArgument("reference video must be the static counterpart")
    ta = getattr(video, "trajectory", None)
    tb = getattr(static, "trajectory", None)
    if ta is not None and tb is not None and ta.to_dict() != tb.to_dict():
        raise InvalidArgument("motion magnitude needs matching trajectories")
    a = video.rgb_stack().astype(np.float64)
    b = static.rgb_stack().astype(np.float64)
    if a.shape != b.shape:
        raise InvalidArgument(f"frame stacks differ in shape: {a.shape} vs {b.shape}")
    return float(np.mean((a - b) ** 2))


def classify_scores(scores: tuple[float, float], rule: CurationRule) -> str:
    """Threshold logic on the two probe scores ('higher than' is strict)."""
    if scores[0] > rule.s_high and scores[1] > rule.s_high:
        return "too_static"
    if scores[0] < rule.s_low or scores[1] < rule.s_low:
        return "too_distorted"
    return "kept"


def dynamic_filter(
    probes: tuple[np.ndarray, np.ndarray, np.ndarray],
    rule: CurationRule,
    params: SsimParams = DEFAULT_SSIM,
) -> tuple[bool, str, tuple[float, float]]:
    """Score probe 0 against probes 1 and 2; returns (keep, reason, scores)."""
    scores = (ssim(probes[0], probes[1], params), ssim(probes[0], probes[2], params))
    reason = classify_scores(scores, rule)
    return reason == "kept", reason, scores


def boundary_check(video: OrbitalVideo, margin: int) -> bool:
    """True when any frame has coverage within `margin` pixels of a border."""
    H, W = video.frames[0].shape
    if not 0 <= margin < min(H, W) // 2:
        raise InvalidArgument(f"margin {margin} out of range for {H}x{W} frames")
    if margin == 0:
        return False
    for frame in video.frames:
        a = frame.alpha
        if (
            a[:margin, :].any()
            or a[-margin:, :].any()
            or a[:, :margin].any()
            or a[:, -margin:].any()
        ):
            return True
    return False


def render_probes(
    asset: DynamicAsset,
    trajectory: OrbitTrajectory,
    rule: CurationRule,
    settings: RenderSettings,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Three frames from the fixed front view at the probe timestamps."""
    head = trajectory.poses[0]
    front = CameraPose(0.0, head.elevation, head.distance, head.target)
    taus = [trajectory.timestamps[i] for i in rule.probe_indices]
    return tuple(render_frame(asset, front, tau, settings).rgb for tau in taus)


def curate_asset(
    asset_id: str,
    asset: DynamicAsset,
    trajectory: OrbitTrajectory,
    rule: CurationRule,
    params: SsimParams = DEFAULT_SSIM,
    settings: RenderSettings = RenderSettings(),
) -> CurationVerdict:
    probes = render_probes(asset, trajectory, rule, settings)
    keep, reason, scores = dynamic_filter(probes, rule, params)
    dynamic = render_orbital(asset, trajectory, animate=True, settings=settings)
    static = render_orbital(asset, trajectory, animate=False, settings=settings)
    magnitude = motion_magnitude(dynamic, static)
    if keep and boundary_check(dynamic, rule.boundary_margin):
        keep, reason = False, "out_of_boundary"
    return CurationVerdict(
        asset_id=asset_id,
        kept=keep,
        reason=reason,
        ssim_scores=scores,
        motion_magnitude=magnitude,
    )


def curate(
    assets: dict[str, DynamicAsset] | list[tuple[str, DynamicAsset]],
    trajectory: OrbitTrajectory,
    rule: CurationRule,
    params: SsimParams = DEFAULT_SSIM,
    settings: RenderSettings = RenderSettings(),
) -> CurationReport:
    """Filter a corpus; per-asset failures are recorded without aborting."""
    items = assets.items() if isinstance(assets, dict) else assets
    report = CurationReport(rule=rule)
    for asset_id, asset in items:
        try:
            report.verdicts.append(
                curate_asset(asset_id, asset, trajectory, rule, params, settings)
            )
        except Exception as exc:  # per-asset isolation: record and keep going
            report.errors.append({"asset_id": asset_id, "error": str(exc)})
    return report
