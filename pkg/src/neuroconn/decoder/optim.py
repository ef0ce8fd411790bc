"""Adam with decoupled weight decay.

Weight decay is applied directly to the parameter (param -= lr * wd * param)
before the bias-corrected Adam update, so decay strength does not get
rescaled by the adaptive step size.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .autodiff import Tensor

BETA1 = 0.9
BETA2 = 0.999
EPS = 1e-8


@dataclass(frozen=True)
class TrainConfig:
    """Training protocol: lr 1e-5 / 100 epochs for classification by default;
    regression conventionally runs 50 epochs at lr 1e-3."""

    learning_rate: float = 1e-5
    epochs: int = 100
    weight_decay: float = 5e-4
    seed: int = 123
    batch_size: int = 32

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")


REGRESSION_LEARNING_RATE = 1e-3
REGRESSION_EPOCHS = 50


@dataclass
class AdamState:
    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)


def init_adam(params: dict[str, Tensor]) -> AdamState:
    return AdamState(
        step=0,
        m={name: np.zeros_like(p.value) for name, p in params.items()},
        v={name: np.zeros_like(p.value) for name, p in params.items()},
    )


def adam_step(
    params: dict[str, Tensor],
    grads: dict[str, np.ndarray],
    state: AdamState,
    lr: float,
    weight_decay: float = 0.0,
) -> AdamState:
    """One in-place update of every parameter; returns the advanced state."""
    state.step += 1
    t = state.step
    bc1 = 1.0 - BETA1**t
    bc2 = 1.0 - BETA2**t
    for name, p in params.items():
        g = grads.get(name)
        if g is None:
            raise ValueError(f"missing gradient for parameter {name!r}")
        g = np.asarray(g, dtype=np.float64)
        if not np.isfinite(g).all():
            raise ValueError(f"non-finite gradient for parameter {name!r}")
        if weight_decay:
            p.value -= lr * weight_decay * p.value
        m = state.m[name]
        v = state.v[name]
        m *= BETA1
        m += (1.0 - BETA1) * g
        v *= BETA2
        v += (1.0 - BETA2) * g * g
        p.value -= lr * (m / bc1) / (np.sqrt(v / bc2) + EPS)
    return state
