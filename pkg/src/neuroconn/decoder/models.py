"""Compact convolutional decoder architectures over connectivity/band-power inputs.

Inputs are [N, n_bands, n_channels, n_cols] stacks: connectivity matrices
(n_cols = n_channels) or band-power maps (n_cols = n_windows). Kernel widths
scale with n_cols so the same recipes work on short feature axes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor


class Architecture(str, Enum):
    EEGNET_LIKE = "eegnet_like"
    SHALLOW_LIKE = "shallow_like"
    FBCNET_LIKE = "fbcnet_like"


class Task(str, Enum):
    CLASSIFICATION = "classification"
    REGRESSION = "regression"


@dataclass(frozen=True)
class InputLayout:
    n_bands: int
    n_channels: int
    n_cols: int

    def __post_init__(self):
        if min(self.n_bands, self.n_channels, self.n_cols) < 1:
            raise ValueError(f"input layout dimensions must be >= 1, got {self}")


@dataclass(frozen=True)
class DecoderSpec:
    architecture: Architecture
    n_classes: int
    input_layout: InputLayout
    hidden_dim: int = 64
    dropout_p: float = 0.5
    task: Task = Task.CLASSIFICATION

    def __post_init__(self):
        object.__setattr__(self, "architecture", Architecture(self.architecture))
        object.__setattr__(self, "task", Task(self.task))
        if self.task is Task.CLASSIFICATION and self.n_classes < 2:
            raise ValueError(f"classification needs n_classes >= 2, got {self.n_classes}")
        if self.hidden_dim < 1:
            raise ValueError(f"hidden_dim must be >= 1, got {self.hidden_dim}")
        if not (0 <= self.dropout_p < 1):
            raise ValueError(f"dropout_p must be in [0, 1), got {self.dropout_p}")

    @property
    def out_dim(self) -> int:
        return self.n_classes if self.task is Task.CLASSIFICATION else 1


def _glorot(rng: np.random.Generator, shape, fan_in: int, fan_out: int) -> Tensor:
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return Tensor(rng.uniform(-limit, limit, size=shape), requires_grad=True)


def _zeros(shape) -> Tensor:
    return Tensor(np.zeros(shape), requires_grad=True)


def _ones(shape) -> Tensor:
    return Tensor(np.ones(shape), requires_grad=True)


@dataclass
class Model:
    """Parameter set plus a forward function for one DecoderSpec.

    Parameters are float64 tensors keyed by stable names; buffers hold
    batch-norm running statistics. forward() is pure in evaluation mode;
    training mode consumes `rng` for dropout masks and mutates buffers.
    """

    spec: DecoderSpec
    seed: int
    params: dict[str, Tensor] = field(default_factory=dict)
    buffers: dict[str, np.ndarray] = field(default_factory=dict)

    def forward(self, x: np.ndarray, train: bool = False,
                rng: np.random.Generator | None = None) -> Tensor:
        x = np.asarray(x, dtype=np.float64)
        lay = self.spec.input_layout
        expected = (lay.n_bands, lay.n_channels, lay.n_cols)
        if x.ndim != 4 or x.shape[1:] != expected:
            raise ValueError(f"input shape {x.shape} does not match layout [N, {expected}]")
        return self._forward(Tensor(x), train, rng)

    def zero_grad(self):
        for p in self.params.values():
            p.grad = None

    def param_values(self) -> dict[str, np.ndarray]:
        return {name: p.value.copy() for name, p in self.params.items()}

    def load_param_values(self, values: dict[str, np.ndarray]):
        for name, p in self.params.items():
            p.value = np.asarray(values[name], dtype=np.float64).reshape(p.value.shape).copy()

    def buffer_values(self) -> dict[str, np.ndarray]:
        return {name: b.copy() for name, b in self.buffers.items()}

    def load_buffer_values(self, values: dict[str, np.ndarray]):
        for name, b in self.buffers.items():
            b[...] = np.asarray(values[name], dtype=np.float64).reshape(b.shape)


def build_model(spec: DecoderSpec, rng_seed: int) -> Model:
    """Instantiate an architecture with seeded Glorot-uniform initialization."""
    rng = np.random.default_rng(rng_seed)
    model = Model(spec=spec, seed=rng_seed)
    builder = {
        Architecture.EEGNET_LIKE: _build_eegnet_like,
        Architecture.SHALLOW_LIKE: _build_shallow_like,
        Architecture.FBCNET_LIKE: _build_fbcnet_like,
    }[spec.architecture]
    builder(model, rng)
    return model


def _add_dense_head(model: Model, rng: np.random.Generator, features_fn) -> None:
    """Infer the flat feature size with a dummy pass, then attach the head."""
    lay = model.spec.input_layout
    dummy = Tensor(np.zeros((1, lay.n_bands, lay.n_channels, lay.n_cols)))
    flat = int(np.prod(features_fn(model, dummy, False, None).value.shape[1:]))
    out_dim = model.spec.out_dim
    model.params["fc_w"] = _glorot(rng, (flat, out_dim), flat, out_dim)
    model.params["fc_b"] = _zeros((1, out_dim))

    def forward(x: Tensor, train: bool, rng_run) -> Tensor:
        feats = features_fn(model, x, train, rng_run)
        flat_t = ad.reshape(feats, (feats.value.shape[0], -1))
        return ad.add(ad.matmul(flat_t, model.params["fc_w"]), model.params["fc_b"])

    model._forward = forward


def _build_eegnet_like(model: Model, rng: np.random.Generator) -> None:
    """Temporal conv -> BN -> depthwise spatial conv -> ELU/pool/dropout ->
    separable conv -> ELU/pool/dropout -> dense."""
    spec = model.spec
    lay = spec.input_layout
    f1 = spec.hidden_dim // 4
    if f1 < 1:
        raise ValueError(
            f"hidden_dim {spec.hidden_dim} leaves eegnet_like with no temporal filters"
        )
    f2 = 2 * f1  # depth multiplier 2
    kt = math.ceil(lay.n_cols / 2)
    ks = math.ceil(lay.n_cols / 8)
    p = model.params
    p["temporal_w"] = _glorot(rng, (f1, lay.n_bands, 1, kt), lay.n_bands * kt, f1 * kt)
    p["bn1_gamma"] = _ones((f1,))
    p["bn1_beta"] = _zeros((f1,))
    model.buffers["bn1_mean"] = np.zeros(f1)
    model.buffers["bn1_var"] = np.ones(f1)
    p["depthwise_w"] = _glorot(rng, (f2, 1, lay.n_channels, 1), lay.n_channels, 2 * lay.n_channels)
    p["sep_depth_w"] = _glorot(rng, (f2, 1, 1, ks), ks, ks)
    p["sep_point_w"] = _glorot(rng, (f2, f2, 1, 1), f2, f2)

    def features(m: Model, x: Tensor, train: bool, rng_run) -> Tensor:
        q = m.params
        h = ad.conv2d(x, q["temporal_w"], padding=(0, (kt - 1) // 2))
        h = ad.batch_norm(h, q["bn1_gamma"], q["bn1_beta"],
                          m.buffers["bn1_mean"], m.buffers["bn1_var"], train)
        h = ad.conv2d(h, q["depthwise_w"], groups=f1)
        h = ad.elu(h)
        h = ad.avg_pool_w(h, 2)
        h = ad.dropout(h, m.spec.dropout_p, rng_run, train)
        h = ad.conv2d(h, q["sep_depth_w"], padding=(0, (ks - 1) // 2), groups=f2)
        h = ad.conv2d(h, q["sep_point_w"])
        h = ad.elu(h)
        h = ad.avg_pool_w(h, 2)
        return ad.dropout(h, m.spec.dropout_p, rng_run, train)

    _add_dense_head(model, rng, features)


def _build_shallow_like(model: Model, rng: np.random.Generator) -> None:
    """Temporal conv -> spatial conv -> square -> pool -> log -> dropout -> dense."""
    spec = model.spec
    lay = spec.input_layout
    f = spec.hidden_dim // 2
    if f < 1:
        raise ValueError(
            f"hidden_dim {spec.hidden_dim} leaves shallow_like with no temporal filters"
        )
    kt = math.ceil(lay.n_cols / 4)
    pool_w = math.ceil(lay.n_cols / 8)
    pool_s = max(1, pool_w // 2)
    p = model.params
    p["temporal_w"] = _glorot(rng, (f, lay.n_bands, 1, kt), lay.n_bands * kt, f * kt)
    p["spatial_w"] = _glorot(rng, (f, f, lay.n_channels, 1), f * lay.n_channels, f)

    def features(m: Model, x: Tensor, train: bool, rng_run) -> Tensor:
        q = m.params
        h = ad.conv2d(x, q["temporal_w"])
        h = ad.conv2d(h, q["spatial_w"])
        h = ad.square(h)
        h = ad.avg_pool_w(h, pool_w, pool_s)
        h = ad.log_clamped(h)
        return ad.dropout(h, m.spec.dropout_p, rng_run, train)

    _add_dense_head(model, rng, features)


FBCNET_MAPS_PER_BAND = 8


def _build_fbcnet_like(model: Model, rng: np.random.Generator) -> None:
    """Per-band depthwise spatial conv -> BN -> variance over columns -> log ->
    dropout -> dense."""
    spec = model.spec
    lay = spec.input_layout
    m_maps = FBCNET_MAPS_PER_BAND
    f = m_maps * lay.n_bands
    p = model.params
    p["spatial_w"] = _glorot(rng, (f, 1, lay.n_channels, 1), lay.n_channels,
                             m_maps * lay.n_channels)
    p["bn_gamma"] = _ones((f,))
    p["bn_beta"] = _zeros((f,))
    model.buffers["bn_mean"] = np.zeros(f)
    model.buffers["bn_var"] = np.ones(f)

    def features(m: Model, x: Tensor, train: bool, rng_run) -> Tensor:
        q = m.params
        h = ad.conv2d(x, q["spatial_w"], groups=m.spec.input_layout.n_bands)
        h = ad.batch_norm(h, q["bn_gamma"], q["bn_beta"],
                          m.buffers["bn_mean"], m.buffers["bn_var"], train)
        h = ad.variance(h, axis=3)
        h = ad.log_clamped(h)
        return ad.dropout(h, m.spec.dropout_p, rng_run, train)

    _add_dense_head(model, rng, features)
