from .gaussians import GaussianCloud4D, MOTION_BASIS_SIZE, deform, motion_basis
from .project import Intrinsics, camera_matrices, project
from .rasterize import RasterSettings, SplatRender, rasterize
from .losses import SplatLossWeights, splat_loss
from .optimize import OptimizeConfig, optimize
from .construct import ConstructConfig, construct, initialize_cloud
from .checkpoint import load_cloud, save_cloud

__all__ = [
    "ConstructConfig",
    "GaussianCloud4D",
    "Intrinsics",
    "MOTION_BASIS_SIZE",
    "OptimizeConfig",
    "RasterSettings",
    "SplatLossWeights",
    "SplatRender",
    "camera_matrices",
    "construct",
    "deform",
    "initialize_cloud",
    "load_cloud",
    "motion_basis",
    "optimize",
    "project",
    "rasterize",
    "save_cloud",
]
