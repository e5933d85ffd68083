"""Quaternion recurrent neural networks with online training under MSE and correntropy losses."""

from .quaternion import Quaternion, qmul, conj, modulus, inverse, rotate, matvec, hermitian, hadamard
from .activations import SplitActivation
from .losses import KernelConfig, mse_loss, mcc_loss, quat_gauss_kernel, real_gauss_kernel
from .qrnn import LossKind, TrainConfig, QrnnParams, init_params, forward_window, train_online, predict_horizon
from .forecasters import HyperParams, make_forecaster
from .checkpoint import save_checkpoint, load_checkpoint

__version__ = "0.1.0"

__all__ = [
    "Quaternion", "qmul", "conj", "modulus", "inverse", "rotate", "matvec", "hermitian", "hadamard",
    "SplitActivation",
    "KernelConfig", "mse_loss", "mcc_loss", "quat_gauss_kernel", "real_gauss_kernel",
    "LossKind", "TrainConfig", "QrnnParams", "init_params", "forward_window", "train_online", "predict_horizon",
    "HyperParams", "make_forecaster",
    "save_checkpoint", "load_checkpoint",
]
