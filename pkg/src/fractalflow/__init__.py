"""Unsupervised optical flow from two grayscale frames.

A U-Net-style Fractal Deformation Network maps a frame pair to a dense
displacement field and is trained, without ground truth, against a
linearized brightness-constancy energy with L1/L2 data terms and
anisotropic total variation.
"""

from .energy import EnergyBreakdown, EnergyWeights, anisotropic_tv, data_residual, image_gradient, total_energy
from .errors import FormatError, TrainingDivergedError
from .metrics import MetricReport, angular_error, endpoint_error, evaluate
from .model import FdnConfig, ModelParameters, fdn_forward, init_model, pad_to_grid, predict_flow
from .runner import ExperimentConfig, EpochRecord, RunSummary, Trainer, run_experiment, sweep

__version__ = "0.1.0"

__all__ = [
    "EnergyBreakdown",
    "EnergyWeights",
    "EpochRecord",
    "ExperimentConfig",
    "FdnConfig",
    "FormatError",
    "MetricReport",
    "ModelParameters",
    "RunSummary",
    "Trainer",
    "TrainingDivergedError",
    "angular_error",
    "anisotropic_tv",
    "data_residual",
    "endpoint_error",
    "evaluate",
    "fdn_forward",
    "image_gradient",
    "init_model",
    "pad_to_grid",
    "predict_flow",
    "run_experiment",
    "sweep",
    "total_energy",
]
