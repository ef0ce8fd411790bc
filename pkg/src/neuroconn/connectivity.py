"""Phase-synchronization connectivity: PLV and PLI matrices per frequency band.

PLV of two phase series is the modulus of the mean unit phasor of their
difference; PLI is the modulus of the mean sign of the wrapped difference
(insensitive to zero-lag coupling). Both live in [0, 1]. Matrices are built
pair by pair with no shared accumulators, so channel-pair evaluation order
cannot change the result.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from . import backend
from .dsp import DEFAULT_EDGE_FRACTION, analytic_phase, bandpass, trim_edges
from .signal_core import BAND_BY_NAME, EpochSet, FrequencyBand

STACK_SUFFIX = ".conn.f32"
STACK_SIDECAR_SUFFIX = ".conn.json"


class Metric(str, Enum):
    PLV = "plv"
    PLI = "pli"


@dataclass(frozen=True)
class ConnectivityMatrix:
    """Per-band channels x channels synchronization values.

    Symmetric; diagonal is 1 for PLV and 0 for PLI. n_samples_used is the
    phase-series length after edge trimming.
    """

    metric: Metric
    band: FrequencyBand
    values: np.ndarray
    n_samples_used: int
    signed: bool = False

    def __post_init__(self):
        object.__setattr__(self, "metric", Metric(self.metric))
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2 or values.shape[0] != values.shape[1]:
            raise ValueError(f"values must be square, got shape {values.shape}")
        if not np.array_equal(values, values.T):
            raise ValueError("connectivity matrix must be symmetric")
        lo = -1.0 if self.signed else 0.0
        if values.size and (values.min() < lo or values.max() > 1.0):
            raise ValueError(f"connectivity values outside [{lo}, 1]")
        object.__setattr__(self, "values", values)

    @property
    def n_channels(self) -> int:
        return self.values.shape[0]


def _check_pair(phase_a: np.ndarray, phase_b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(phase_a, dtype=np.float64)
    b = np.asarray(phase_b, dtype=np.float64)
    if a.ndim != 1 or b.ndim != 1:
        raise ValueError("phase series must be 1-D")
    if a.shape[0] != b.shape[0]:
        raise ValueError(f"phase series length mismatch: {a.shape[0]} vs {b.shape[0]}")
    if a.shape[0] == 0:
        raise ValueError("phase series are empty")
    if not (np.isfinite(a).all() and np.isfinite(b).all()):
        raise ValueError("phase series contain non-finite values")
    return a, b


def plv_pair(phase_a: np.ndarray, phase_b: np.ndarray) -> float:
    """Phase-locking value of two equal-length phase series, in [0, 1]."""
    a, b = _check_pair(phase_a, phase_b)
    d = a - b
    s = complex(np.cos(d).sum(), np.sin(d).sum())
    return abs(s) / a.shape[0]


def wrap_phase(d: np.ndarray) -> np.ndarray:
    """Wrap phase differences to (-pi, pi]."""
    d = np.remainder(d, 2.0 * np.pi)
    return np.where(d > np.pi, d - 2.0 * np.pi, d)


def pli_pair(phase_a: np.ndarray, phase_b: np.ndarray, signed: bool = False) -> float:
    """Phase-lag index of two equal-length phase series.

    Differences are wrapped to (-pi, pi] before the sign function. The
    canonical value is the modulus of the mean sign; signed=True returns the
    raw mean (debug mode).
    """
    a, b = _check_pair(phase_a, phase_b)
    v = float(np.sign(wrap_phase(a - b)).sum()) / a.shape[0]
    return v if signed else abs(v)


def phase_series(
    epoch: np.ndarray,
    rate: float,
    band: FrequencyBand,
    edge_fraction: float = DEFAULT_EDGE_FRACTION,
) -> np.ndarray:
    """Band-limited instantaneous phase per channel, edges trimmed.

    epoch: [n_channels, n_samples] -> [n_channels, n_samples_used].
    """
    epoch = np.asarray(epoch, dtype=np.float64)
    if epoch.ndim != 2:
        raise ValueError(f"epoch must be [channels, samples], got shape {epoch.shape}")
    filtered = bandpass(epoch, rate, band.lo_hz, band.hi_hz)
    phases = np.stack([analytic_phase(filtered[c]) for c in range(filtered.shape[0])])
    return np.ascontiguousarray(trim_edges(phases, edge_fraction))


def connectivity_matrix(
    epoch: np.ndarray,
    rate: float,
    band: FrequencyBand,
    metric: Metric | str,
    edge_fraction: float = DEFAULT_EDGE_FRACTION,
    signed_pli: bool = False,
) -> ConnectivityMatrix:
    """Pairwise PLV or PLI over all channel pairs of one epoch."""
    metric = Metric(metric)
    epoch = np.asarray(epoch, dtype=np.float64)
    if epoch.ndim != 2 or epoch.shape[0] < 2:
        raise ValueError(f"epoch must have >= 2 channels, got shape {epoch.shape}")
    phases = phase_series(epoch, rate, band, edge_fraction)
    if metric is Metric.PLV:
        values = backend.plv_matrix(phases)
        signed = False
    else:
        values = backend.pli_matrix(phases, signed=signed_pli)
        signed = signed_pli
    lo = -1.0 if signed else 0.0
    assert values.min() >= lo - 1e-12 and values.max() <= 1.0 + 1e-12, \
        "internal error: connectivity value outside range"
    return ConnectivityMatrix(
        metric=metric,
        band=band,
        values=np.clip(values, lo, 1.0),
        n_samples_used=phases.shape[1],
        signed=signed,
    )


def trial_connectivity(
    epochs: EpochSet,
    band: FrequencyBand,
    metric: Metric | str,
    edge_fraction: float = DEFAULT_EDGE_FRACTION,
    signed_pli: bool = False,
    jobs: int = 1,
) -> np.ndarray:
    """Per-trial connectivity stack [n_trials, n_channels, n_channels].

    Trials are independent; with jobs > 1 they are computed in a thread pool
    and reassembled by index, so the result does not depend on jobs.
    """
    def one(t: int) -> np.ndarray:
        return connectivity_matrix(
            epochs.data[t], epochs.sampling_rate_hz, band, metric,
            edge_fraction=edge_fraction, signed_pli=signed_pli,
        ).values

    n = epochs.n_trials
    out = np.empty((n, epochs.n_channels, epochs.n_channels))
    if jobs > 1 and n > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=jobs) as pool:
            for t, values in enumerate(pool.map(one, range(n))):
                out[t] = values
    else:
        for t in range(n):
            out[t] = one(t)
    return out


def save_matrix_csv(matrix: ConnectivityMatrix, path: str | Path,
                    channel_names: tuple[str, ...] | None = None) -> Path:
    """CSV export with a channel-names header row."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    names = channel_names or tuple(f"ch{i}" for i in range(matrix.n_channels))
    if len(names) != matrix.n_channels:
        raise ValueError(f"{len(names)} names for {matrix.n_channels} channels")
    lines = [",".join(names)]
    for row in matrix.values:
        lines.append(",".join(repr(float(v)) for v in row))
    path.write_text("\n".join(lines) + "\n")
    return path


def save_matrix(matrix: ConnectivityMatrix, path: str | Path) -> Path:
    """Flat float32 binary + JSON sidecar {metric, band, n_channels, M}."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    matrix.values.astype("<f4").tofile(path)
    sidecar = path.with_name(path.name + ".json")
    sidecar.write_text(json.dumps({
        "metric": matrix.metric.value,
        "band": matrix.band.name.value,
        "band_lo_hz": matrix.band.lo_hz,
        "band_hi_hz": matrix.band.hi_hz,
        "n_channels": matrix.n_channels,
        "M": matrix.n_samples_used,
        "signed": matrix.signed,
    }, indent=2, sort_keys=True) + "\n")
    return path


def load_matrix(path: str | Path) -> ConnectivityMatrix:
    path = Path(path)
    sidecar = path.with_name(path.name + ".json")
    if not sidecar.exists():
        raise FileNotFoundError(f"missing sidecar: {sidecar}")
    meta = json.loads(sidecar.read_text())
    n = int(meta["n_channels"])
    values = np.fromfile(path, dtype="<f4").astype(np.float64).reshape(n, n)
    band = FrequencyBand(meta["band"], float(meta["band_lo_hz"]), float(meta["band_hi_hz"]))
    return ConnectivityMatrix(
        metric=Metric(meta["metric"]),
        band=band,
        values=values,
        n_samples_used=int(meta["M"]),
        signed=bool(meta.get("signed", False)),
    )


def save_trial_stack(
    stack: np.ndarray,
    epochs: EpochSet,
    metric: Metric | str,
    band: FrequencyBand,
    n_samples_used: int,
    out_dir: str | Path,
    signed: bool = False,
) -> Path:
    """Write a per-trial matrix stack for one (metric, band) cell.

    Layout: <metric>_<band>.conn.f32 (float32 [n_trials, C, C]) plus a JSON
    sidecar carrying shapes, M, and the per-trial labels.
    """
    metric = Metric(metric)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = f"{metric.value}_{band.name.value}"
    bin_path = out_dir / (stem + STACK_SUFFIX)
    np.asarray(stack, dtype=np.float64).astype("<f4").tofile(bin_path)
    sidecar = out_dir / (stem + STACK_SIDECAR_SUFFIX)
    sidecar.write_text(json.dumps({
        "metric": metric.value,
        "band": band.name.value,
        "band_lo_hz": band.lo_hz,
        "band_hi_hz": band.hi_hz,
        "n_trials": int(stack.shape[0]),
        "n_channels": int(stack.shape[1]),
        "M": int(n_samples_used),
        "signed": signed,
        "class_labels": [int(c) for c in epochs.class_labels],
        "paradigm_labels": [str(p) for p in epochs.paradigm_labels],
        "sampling_rate_hz": epochs.sampling_rate_hz,
    }, indent=2, sort_keys=True) + "\n")
    return bin_path


def load_trial_stack(path: str | Path) -> tuple[np.ndarray, dict]:
    """Read a trial stack written by save_trial_stack; returns (stack, meta)."""
    path = Path(path)
    sidecar = path.with_name(path.name[: -len(STACK_SUFFIX)] + STACK_SIDECAR_SUFFIX)
    if not sidecar.exists():
        raise FileNotFoundError(f"missing sidecar: {sidecar}")
    meta = json.loads(sidecar.read_text())
    n_trials, n = int(meta["n_trials"]), int(meta["n_channels"])
    stack = np.fromfile(path, dtype="<f4").astype(np.float64).reshape(n_trials, n, n)
    return stack, meta


def find_trial_stacks(directory: str | Path) -> list[Path]:
    """All trial-stack binaries under a directory, sorted by name."""
    return sorted(Path(directory).glob("*" + STACK_SUFFIX))


def band_from_name(name: str) -> FrequencyBand:
    try:
        return BAND_BY_NAME[name.lower()]
    except KeyError:
        raise ValueError(
            f"unknown band {name!r}; expected one of {sorted(BAND_BY_NAME)}"
        ) from None
