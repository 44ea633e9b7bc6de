"""Quantitative evaluation: PSNR/SSIM against ground truth, rank statistics,
and deterministic JSON/CSV reports.

Slots for metrics that need pretrained networks (CLIP, LPIPS, FVD) are kept
in the report schema as nulls so downstream tables keep their columns.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvalidArgument
from .curation import motion_magnitude
from .scene import OrbitalVideo, RgbVideo
from .ssim import DEFAULT_SSIM, SsimParams, ssim

PSNR_CAP_DB = 99.0

# Column order follows the quantitative-comparison table layout.
CSV_COLUMNS = ("clip_f", "clip_o", "generation_time", "ssim", "psnr", "lpips", "fvd")


def psnr(a: np.ndarray, b: np.ndarray, cap_db: float = PSNR_CAP_DB) -> float:
    """10 log10(1 / MSE) for [0, 1] images; zero MSE returns the cap."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise InvalidArgument(f"psnr inputs differ in shape: {a.shape} vs {b.shape}")
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return cap_db
    return 10.0 * math.log10(1.0 / mse)


def _rank(values: np.ndarray) -> np.ndarray:
    """Average ranks (1-based) with ties sharing their mean rank."""
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values), dtype=np.float64)
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and values[order[j + 1]] == values[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def spearman(x, y) -> float:
    """Spearman rank correlation; exact closed form when neither side ties."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise InvalidArgument("spearman needs two equal-length 1-d sequences")
    n = len(x)
    if n < 2:
        raise InvalidArgument("spearman needs at least two points")
    rx, ry = _rank(x), _rank(y)
    if len(np.unique(x)) == n and len(np.unique(y)) == n:
        d2 = float(((rx - ry) ** 2).sum())
        return 1.0 - 6.0 * d2 / (n * (n * n - 1))
    sx, sy = rx.std(), ry.std()
    if sx == 0.0 or sy == 0.0:
        return float("nan")
    return float(((rx - rx.mean()) * (ry - ry.mean())).mean() / (sx * sy))


def motion_monotonicity(samples: list[tuple[float, float]]) -> float:
    """Rank correlation between conditioned and measured motion magnitudes."""
    if len({round(c, 12) for c, _ in samples}) < 3:
        raise InvalidArgument("need at least 3 distinct conditioning levels")
    cond = [c for c, _ in samples]
    meas = [m for _, m in samples]
    return spearman(cond, meas)


@dataclass
class MetricReport:
    name: str
    per_view_psnr: list[float]
    per_view_ssim: list[float]
    motion_magnitude_target: float | None = None
    motion_magnitude_reference: float | None = None
    metadata: dict = field(default_factory=dict)

    @property
    def mean_psnr(self) -> float:
        return float(np.mean(self.per_view_psnr))

    @property
    def mean_ssim(self) -> float:
        return float(np.mean(self.per_view_ssim))

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "per_view_psnr": self.per_view_psnr,
            "per_view_ssim": self.per_view_ssim,
            "mean_psnr": self.mean_psnr,
            "mean_ssim": self.mean_ssim,
            "motion_magnitude_target": self.motion_magnitude_target,
            "motion_magnitude_reference": self.motion_magnitude_reference,
            "clip_f": None,
            "clip_o": None,
            "lpips": None,
            "fvd": None,
            "metadata": self.metadata,
        }


def evaluate_pair(
    target: OrbitalVideo | RgbVideo,
    reference: OrbitalVideo | RgbVideo,
    name: str = "pair",
    params: SsimParams = DEFAULT_SSIM,
    target_static: OrbitalVideo | RgbVideo | None = None,
    reference_static: OrbitalVideo | RgbVideo | None = None,
    metadata: dict | None = None,
) -> MetricReport:
    """Per-view PSNR/SSIM at matching poses, plus optional motion magnitudes."""
    ta = getattr(target, "trajectory", None)
    tb = getattr(reference, "trajectory", None)
    if ta is not None and tb is not None and ta.to_dict() != tb.to_dict():
        raise InvalidArgument("evaluate_pair needs matching trajectories")
    a = target.rgb_stack()
    b = reference.rgb_stack()
    if a.shape != b.shape:
        raise InvalidArgument(f"frame stacks differ: {a.shape} vs {b.shape}")
    report = MetricReport(
        name=name,
        per_view_psnr=[psnr(a[i], b[i]) for i in range(a.shape[0])],
        per_view_ssim=[ssim(a[i], b[i], params) for i in range(a.shape[0])],
        metadata=metadata or {},
    )
    if target_static is not None:
        report.motion_magnitude_target = motion_magnitude(target, target_static)
    if reference_static is not None:
        report.motion_magnitude_reference = motion_magnitude(reference, reference_static)
    return report


def report_json(payload: dict) -> str:
    """Canonical serialization: sorted keys, newline-terminated."""
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def report_hash(payload: dict) -> str:
    return hashlib.sha256(report_json(payload).encode()).hexdigest()


def write_csv(path: str | Path, rows: list[dict]) -> None:
    """Rows of per-run metrics in the fixed column order; missing slots stay empty."""
    lines = ["name," + ",".join(CSV_COLUMNS)]
    for row in rows:
        cells = [str(row.get("name", ""))]
        for col in CSV_COLUMNS:
            value = row.get(col)
            cells.append("" if value is None else f"{value:.6g}")
        lines.append(",".join(cells))
    Path(path).write_text("\n".join(lines) + "\n")
