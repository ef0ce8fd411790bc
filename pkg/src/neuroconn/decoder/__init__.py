"""Differentiable-tensor core and compact convolutional decoders."""

from .autodiff import (
    Tensor,
    avg_pool_w,
    batch_norm,
    conv2d,
    cross_entropy,
    dropout,
    elu,
    log_clamped,
    mae_loss,
    softmax,
    variance,
)
from .checkpoint import load_checkpoint, save_checkpoint
from .models import (
    Architecture,
    DecoderSpec,
    InputLayout,
    Model,
    Task,
    build_model,
)
from .optim import AdamState, TrainConfig, adam_step, init_adam

__all__ = [
    "AdamState",
    "Architecture",
    "DecoderSpec",
    "InputLayout",
    "Model",
    "Task",
    "Tensor",
    "TrainConfig",
    "adam_step",
    "avg_pool_w",
    "batch_norm",
    "build_model",
    "conv2d",
    "cross_entropy",
    "dropout",
    "elu",
    "init_adam",
    "load_checkpoint",
    "log_clamped",
    "mae_loss",
    "save_checkpoint",
    "softmax",
    "variance",
]
