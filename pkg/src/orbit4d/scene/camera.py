"""Orbital camera poses and the uniform-azimuth trajectory."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import InvalidArgument

WORLD_UP = np.array([0.0, 0.0, 1.0])


@dataclass(frozen=True)
class CameraPose:
    """Look-at camera on a sphere around `target`, z-up world."""

    azimuth: float          # degrees in [0, 360)
    elevation: float        # degrees, |elevation| < 90
    distance: float         # scene units, > 0
    target: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if not self.distance > 0:
            raise InvalidArgument(f"camera distance must be > 0, got {self.distance}")
        if abs(self.elevation) >= 90.0:
            raise InvalidArgument(f"|elevation| must be < 90 degrees, got {self.elevation}")

    def position(self) -> np.ndarray:
        az = np.deg2rad(self.azimuth)
        el = np.deg2rad(self.elevation)
        offset = self.distance * np.array(
            [np.cos(el) * np.cos(az), np.cos(el) * np.sin(az), np.sin(el)]
        )
        return np.asarray(self.target, dtype=float) + offset

    def basis(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Orthonormal (forward, right, up), forward pointing at the target."""
        pos = self.position()
        forward = np.asarray(self.target, dtype=float) - pos
        forward /= np.linalg.norm(forward)
        right = np.cross(forward, WORLD_UP)
        right /= np.linalg.norm(right)
        up = np.cross(right, forward)
        return forward, right, up

    def to_dict(self) -> dict:
        return {
            "azimuth": self.azimuth,
            "elevation": self.elevation,
            "distance": self.distance,
            "target": list(self.target),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CameraPose":
        return cls(d["azimuth"], d["elevation"], d["distance"], tuple(d["target"]))


@dataclass(frozen=True)
class OrbitTrajectory:
    """T poses sweeping azimuth uniformly over a full turn; timestamps i/T."""

    poses: tuple[CameraPose, ...]
    timestamps: tuple[float, ...]
    start_azimuth: float

    def __len__(self) -> int:
        return len(self.poses)

    def to_dict(self) -> dict:
        head = self.poses[0]
        return {
            "T": len(self.poses),
            "elevation": head.elevation,
            "distance": head.distance,
            "start_azimuth": self.start_azimuth,
            "target": list(head.target),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "OrbitTrajectory":
        return build_trajectory(
            d["T"], d["elevation"], d["distance"], d["start_azimuth"],
            target=tuple(d.get("target", (0.0, 0.0, 0.0))),
        )


def build_trajectory(
    T: int,
    elevation: float,
    distance: float,
    start_azimuth: float = 0.0,
    target: tuple[float, float, float] = (0.0, 0.0, 0.0),
) -> OrbitTrajectory:
    """Uniform 360-degree sweep: pose i at (start + i*360/T) mod 360, tau_i = i/T."""
    if T < 2:
        raise InvalidArgument(f"trajectory needs T >= 2 poses, got {T}")
    if not distance > 0:
        raise InvalidArgument(f"camera distance must be > 0, got {distance}")
    step = 360.0 / T
    poses = tuple(
        CameraPose((start_azimuth + i * step) % 360.0, elevation, distance, target)
        for i in range(T)
    )
    timestamps = tuple(i / T for i in range(T))
    return OrbitTrajectory(poses=poses, timestamps=timestamps, start_azimuth=start_azimuth)
