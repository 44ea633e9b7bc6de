"""Cloud checkpoints: one raw tensor per parameter plus a JSON header."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import torch

from ..tensor_io import read_tensor, write_tensor
from .gaussians import GaussianCloud4D, MOTION_BASIS_SIZE

_FIELDS = ("positions", "log_scales", "rotations", "opacity_logits", "colors", "motion_coeffs")


def save_cloud(directory: str | Path, cloud: GaussianCloud4D, meta: dict | None = None) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for name in _FIELDS:
        write_tensor(
            directory / f"{name}.orb",
            getattr(cloud, name).detach().cpu().numpy().astype(np.float32),
        )
    header = {
        "format_version": 1,
        "count": len(cloud),
        "motion_basis_size": MOTION_BASIS_SIZE,
        "background": cloud.background,
    }
    header.update(meta or {})
    with open(directory / "header.json", "w") as f:
        json.dump(header, f, indent=2, sort_keys=True)
        f.write("\n")


def load_cloud(directory: str | Path) -> tuple[GaussianCloud4D, dict]:
    directory = Path(directory)
    with open(directory / "header.json") as f:
        header = json.load(f)
    tensors = {name: torch.from_numpy(read_tensor(directory / f"{name}.orb")) for name in _FIELDS}
    cloud = GaussianCloud4D(**tensors, background=header["background"])
    return cloud, header
