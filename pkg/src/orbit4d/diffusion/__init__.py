from .latents import LatentVideo, decode, encode
from .schedule import NoiseSchedule, ddim_step, ddim_timesteps, forward_diffuse, predict_x0
from .model import ConditionSignal, Denoiser, DenoiserConfig, MotionEmbedding
from .losses import (
    GuidanceWeights,
    cfg_combine,
    latent_motion_magnitude,
    loss_ldm,
    loss_mr,
    total_loss,
)
from .sampler import sample
from .training import TrainConfig, TrainResult, TrainingExample, motion_reconstruction_error, train
from .checkpoint import load_denoiser, save_denoiser

__all__ = [
    "ConditionSignal",
    "Denoiser",
    "DenoiserConfig",
    "GuidanceWeights",
    "LatentVideo",
    "MotionEmbedding",
    "NoiseSchedule",
    "TrainConfig",
    "TrainResult",
    "TrainingExample",
    "cfg_combine",
    "ddim_step",
    "ddim_timesteps",
    "decode",
    "encode",
    "forward_diffuse",
    "latent_motion_magnitude",
    "load_denoiser",
    "loss_ldm",
    "loss_mr",
    "motion_reconstruction_error",
    "predict_x0",
    "sample",
    "save_denoiser",
    "total_loss",
    "train",
]
