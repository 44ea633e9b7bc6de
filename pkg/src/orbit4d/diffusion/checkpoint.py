"""Denoiser checkpoints: raw tensor files plus a JSON header."""

from __future__ import annotations

import json
from dataclasses import asdict
from pathlib import Path

import numpy as np
import torch

from ..errors import InvalidArgument
from ..tensor_io import read_tensor, write_tensor
from .model import Denoiser, DenoiserConfig
from .schedule import NoiseSchedule


def save_denoiser(
    directory: str | Path,
    denoiser: Denoiser,
    schedule: NoiseSchedule,
    meta: dict | None = None,
) -> None:
    directory = Path(directory)
    params_dir = directory / "params"
    params_dir.mkdir(parents=True, exist_ok=True)
    names = []
    for name, tensor in denoiser.state_dict().items():
        fname = name.replace(".", "__") + ".orb"
        write_tensor(params_dir / fname, tensor.detach().cpu().numpy().astype(np.float32))
        names.append(name)
    header = {
        "format_version": 1,
        "architecture": asdict(denoiser.config),
        "architecture_hash": denoiser.config.architecture_hash(),
        "schedule": schedule.to_dict(),
        "trained": bool(denoiser.trained),
        "parameters": sorted(names),
    }
    header.update(meta or {})
    with open(directory / "header.json", "w") as f:
        json.dump(header, f, indent=2, sort_keys=True)
        f.write("\n")


def load_denoiser(directory: str | Path) -> tuple[Denoiser, NoiseSchedule, dict]:
    directory = Path(directory)
    with open(directory / "header.json") as f:
        header = json.load(f)
    config = DenoiserConfig(**header["architecture"])
    if config.architecture_hash() != header["architecture_hash"]:
        raise InvalidArgument(f"{directory}: architecture hash mismatch")
    denoiser = Denoiser(config)
    state = {}
    for name in header["parameters"]:
        arr = read_tensor(directory / "params" / (name.replace(".", "__") + ".orb"))
        ref = denoiser.state_dict()[name]
        state[name] = torch.from_numpy(arr).to(ref.dtype).reshape(ref.shape)
    denoiser.load_state_dict(state)
    denoiser.trained = header["trained"]
    denoiser.eval()
    schedule = NoiseSchedule.from_dict(header["schedule"])
    return denoiser, schedule, header
