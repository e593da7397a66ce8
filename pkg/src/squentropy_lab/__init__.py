"""Train small fully-connected classifiers with squentropy, cross-entropy or
rescaled square loss, and measure accuracy and calibration."""

from .calibration import CalibrationReport, compute_ece
from .data import Dataset, generate_spiral, load_csv
from .losses import LossSpec, cross_entropy, rescaled_square, softmax, squentropy
from .mlp import Architecture, MlpParameters, backward, forward, init_params
from .trainer import RunSummary, TrainConfig, evaluate, sweep, train

__version__ = "0.1.0"

__all__ = [
    "Architecture",
    "CalibrationReport",
    "Dataset",
    "LossSpec",
    "MlpParameters",
    "RunSummary",
    "TrainConfig",
    "backward",
    "compute_ece",
    "cross_entropy",
    "evaluate",
    "forward",
    "generate_spiral",
    "init_params",
    "load_csv",
    "rescaled_square",
    "softmax",
    "squentropy",
    "sweep",
    "train",
]
