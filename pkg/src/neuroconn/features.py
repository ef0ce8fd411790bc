"""Band-power feature extraction from spectrograms.

Per trial and channel, the short-time spectrum is reduced to one power value
per (window, band): the sum over bins whose frequency falls in [lo_hz, hi_hz).
Half-open intervals keep adjacent bands from double-counting a boundary bin.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dsp import Spectrogram, stft
from .signal_core import CANONICAL_BANDS, EpochSet, FrequencyBand


@dataclass(frozen=True)
class BandPowerFeatures:
    """values[n_trials, n_channels, n_windows, n_bands], band axis delta -> gamma."""

    values: np.ndarray
    band_table: tuple[FrequencyBand, ...]
    window_seconds: float
    hop_seconds: float
    log_transformed: bool = False

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 4:
            raise ValueError(
                f"values must be [trials, channels, windows, bands], got shape {values.shape}"
            )
        if values.shape[3] != len(self.band_table):
            raise ValueError(
                f"band axis {values.shape[3]} does not match band table of {len(self.band_table)}"
            )
        if values.size and values.min() < 0:
            raise ValueError("band powers must be nonnegative")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "band_table", tuple(self.band_table))

    @property
    def n_trials(self) -> int:
        return self.values.shape[0]


def band_power(spec: Spectrogram, bands: tuple[FrequencyBand, ...] = CANONICAL_BANDS) -> np.ndarray:
    """Per-window band powers [n_windows, n_bands] from one spectrogram slice."""
    nyq = spec.bin_hz * (spec.n_fft / 2.0)
    freqs = spec.bin_frequencies
    out = np.empty((spec.n_windows, len(bands)))
    for b, band in enumerate(bands):
        if band.hi_hz > nyq * (1 + 1e-12):
            raise ValueError(
                f"band {band.name.value} [{band.lo_hz}, {band.hi_hz}) Hz outside "
                f"spectrogram range [0, {nyq}] Hz"
            )
        mask = (freqs >= band.lo_hz) & (freqs < band.hi_hz)
        out[:, b] = spec.values[:, mask].sum(axis=1)
    return out


def epoch_features(
    epochs: EpochSet,
    bands: tuple[FrequencyBand, ...] = CANONICAL_BANDS,
    window_seconds: float = 1.0,
    hop_seconds: float | None = None,
    log_transform: bool = False,
) -> BandPowerFeatures:
    """STFT + band power for every (trial, channel).

    Returns values of shape [n_trials, n_channels, n_windows, n_bands];
    log_transform applies log(1 + x) to the powers.
    """
    if epochs.n_trials == 0:
        raise ValueError("epoch set is empty")
    rows = None
    values = None
    for t in range(epochs.n_trials):
        for c in range(epochs.n_channels):
            try:
                spec = stft(epochs.data[t, c], epochs.sampling_rate_hz, window_seconds, hop_seconds)
                rows = band_power(spec, bands)
            except ValueError as exc:
                raise ValueError(f"trial {t}, channel {c}: {exc}") from exc
            if values is None:
                values = np.empty((epochs.n_trials, epochs.n_channels) + rows.shape)
                hop = spec.hop_seconds
            values[t, c] = rows
    if log_transform:
        values = np.log1p(values)
    return BandPowerFeatures(
        values=values,
        band_table=tuple(bands),
        window_seconds=window_seconds,
        hop_seconds=hop,
        log_transformed=log_transform,
    )


def export_csv(features: BandPowerFeatures, epochs: EpochSet, path: str | Path) -> Path:
    """One row per (trial, channel, window): band columns plus label columns."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    band_cols = [band.name.value for band in features.band_table]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["trial", "channel", "window", *band_cols, "class", "paradigm"])
        n_trials, n_channels, n_windows, _ = features.values.shape
        for t in range(n_trials):
            for c in range(n_channels):
                for w in range(n_windows):
                    writer.writerow(
                        [t, c, w]
                        + [repr(float(v)) for v in features.values[t, c, w]]
                        + [int(epochs.class_labels[t]), str(epochs.paradigm_labels[t])]
                    )
    return path
