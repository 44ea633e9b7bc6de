from .camera import CameraPose, OrbitTrajectory, build_trajectory
from .assets import AnimatedPrimitive, DynamicAsset, MotionProgram, sample_asset
from .render import (
    FrameImage,
    OrbitalVideo,
    RgbVideo,
    RenderSettings,
    render_frame,
    render_orbital,
    load_video,
    save_video,
)

__all__ = [
    "AnimatedPrimitive",
    "CameraPose",
    "DynamicAsset",
    "FrameImage",
    "MotionProgram",
    "OrbitTrajectory",
    "OrbitalVideo",
    "RenderSettings",
    "RgbVideo",
    "build_trajectory",
    "load_video",
    "render_frame",
    "render_orbital",
    "sample_asset",
    "save_video",
]
