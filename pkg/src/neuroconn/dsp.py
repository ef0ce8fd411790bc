"""Filtering, spectral transforms, and analytic-signal phase extraction.

All operations are pure functions over float64 arrays and deterministic, so
callers may parallelize across channels or epochs freely. Filters are applied
forward-backward (zero phase): phase-based connectivity downstream must not
be corrupted by filter delay.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import signal as _sig

# Fraction of samples discarded at each end by phase consumers (analytic
# signal edge effects).
DEFAULT_EDGE_FRACTION = 0.1

DEFAULT_BANDPASS_ORDER = 4
DEFAULT_NOTCH_QUALITY = 30.0


class FilterKind(str, Enum):
    BANDPASS = "bandpass"
    NOTCH = "notch"


@dataclass(frozen=True)
class FilterSpec:
    """Declarative filter description for configs and manifests."""

    kind: FilterKind
    lo_hz: float | None = None
    hi_hz: float | None = None
    center_hz: float | None = None
    quality: float = DEFAULT_NOTCH_QUALITY
    order: int = DEFAULT_BANDPASS_ORDER

    def __post_init__(self):
        object.__setattr__(self, "kind", FilterKind(self.kind))
        if self.order < 1:
            raise ValueError(f"filter order must be >= 1, got {self.order}")
        if self.kind is FilterKind.BANDPASS:
            if self.lo_hz is None or self.hi_hz is None or not (0 < self.lo_hz < self.hi_hz):
                raise ValueError(f"bandpass needs 0 < lo_hz < hi_hz, got {self.lo_hz}, {self.hi_hz}")
        else:
            if self.center_hz is None or self.center_hz <= 0 or self.quality <= 0:
                raise ValueError("notch needs center_hz > 0 and quality > 0")

    def apply(self, x: np.ndarray, rate: float) -> np.ndarray:
        if self.kind is FilterKind.BANDPASS:
            return bandpass(x, rate, self.lo_hz, self.hi_hz, order=self.order)
        return notch(x, rate, self.center_hz, quality=self.quality)


@dataclass(frozen=True)
class Spectrogram:
    """Windowed one-sided power spectrum of a single channel.

    values[n_windows, n_freq_bins] holds Hann-windowed periodogram power,
    normalized so that the per-window sum over bins equals the windowed
    time-domain power sum(w*x)^2 (Parseval). bin_hz = 1 / window_seconds.
    """

    values: np.ndarray
    window_seconds: float
    hop_seconds: float
    bin_hz: float
    n_fft: int

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise ValueError(f"values must be [n_windows, n_freq_bins], got shape {values.shape}")
        if values.size and values.min() < 0:
            raise ValueError("spectrogram power must be nonnegative")
        if values.shape[1] != self.n_fft // 2 + 1:
            raise ValueError(
                f"n_freq_bins {values.shape[1]} inconsistent with window of {self.n_fft} samples"
            )
        object.__setattr__(self, "values", values)

    @property
    def n_windows(self) -> int:
        return self.values.shape[0]

    @property
    def bin_frequencies(self) -> np.ndarray:
        return np.arange(self.values.shape[1]) * self.bin_hz


def _as_channel_major(x: np.ndarray) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        return x[np.newaxis, :], True
    if x.ndim == 2:
        return x, False
    raise ValueError(f"expected 1-D signal or [channels, samples] matrix, got shape {x.shape}")


def _check_length(n: int, padlen: int, what: str):
    if n <= padlen:
        raise ValueError(
            f"signal of {n} samples is too short for zero-phase {what} "
            f"(needs more than {padlen} samples)"
        )


def bandpass(x: np.ndarray, rate: float, lo: float, hi: float,
             order: int = DEFAULT_BANDPASS_ORDER) -> np.ndarray:
    """Zero-phase Butterworth band-pass (order `order` per pass).

    Accepts a single channel or a channel-major matrix; output has the same
    shape and length as the input.
    """
    nyq = rate / 2.0
    if not (0 < lo < hi):
        raise ValueError(f"need 0 < lo < hi, got lo={lo}, hi={hi}")
    if hi >= nyq:
        raise ValueError(f"high cutoff {hi} Hz must be below Nyquist {nyq} Hz")
    mat, squeeze = _as_channel_major(x)
    sos = _sig.butter(order, [lo, hi], btype="bandpass", fs=rate, output="sos")
    padlen = 3 * (2 * sos.shape[0] + 1)
    _check_length(mat.shape[1], max(padlen, 3 * order), "band-pass")
    out = _sig.sosfiltfilt(sos, mat, axis=1)
    return out[0] if squeeze else out


def notch(x: np.ndarray, rate: float, center: float,
          quality: float = DEFAULT_NOTCH_QUALITY) -> np.ndarray:
    """Zero-phase second-order IIR notch at `center` Hz."""
    nyq = rate / 2.0
    if not (0 < center < nyq):
        raise ValueError(f"notch center {center} Hz must be in (0, {nyq}) Hz")
    mat, squeeze = _as_channel_major(x)
    b, a = _sig.iirnotch(center, quality, fs=rate)
    padlen = 3 * max(len(a), len(b))
    _check_length(mat.shape[1], padlen, "notch")
    out = _sig.filtfilt(b, a, mat, axis=1)
    return out[0] if squeeze else out


def _hann_periodic(n: int) -> np.ndarray:
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)


def stft(x: np.ndarray, rate: float, window_seconds: float,
         hop_seconds: float | None = None) -> Spectrogram:
    """Hann-windowed short-time power spectrum of one channel.

    hop defaults to half the window. Power is |coefficient|^2 normalized so
    the per-window sum over bins equals the windowed time-domain power.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError(f"stft expects a single channel, got shape {x.shape}")
    if hop_seconds is None:
        hop_seconds = window_seconds / 2.0
    n_fft = int(round(window_seconds * rate))
    hop = int(round(hop_seconds * rate))
    if n_fft < 2 or hop < 1:
        raise ValueError(f"window of {n_fft} samples / hop of {hop} samples is too small")
    if n_fft > x.shape[0]:
        raise ValueError(f"window of {n_fft} samples longer than signal of {x.shape[0]}")
    window = _hann_periodic(n_fft)
    n_windows = (x.shape[0] - n_fft) // hop + 1
    n_bins = n_fft // 2 + 1
    # one-sided fold: double interior bins so the bin sum preserves power
    scale = np.full(n_bins, 2.0 / n_fft)
    scale[0] = 1.0 / n_fft
    if n_fft % 2 == 0:
        scale[-1] = 1.0 / n_fft
    values = np.empty((n_windows, n_bins))
    for w in range(n_windows):
        seg = x[w * hop : w * hop + n_fft] * window
        coef = np.fft.rfft(seg)
        values[w] = (coef.real**2 + coef.imag**2) * scale
    return Spectrogram(
        values=values,
        window_seconds=n_fft / rate,
        hop_seconds=hop / rate,
        bin_hz=rate / n_fft,
        n_fft=n_fft,
    )


def analytic_phase(x: np.ndarray) -> np.ndarray:
    """Instantaneous phase of the FFT-based analytic signal, in (-pi, pi].

    Positive frequencies are doubled, negative zeroed; DC (and Nyquist for
    even length) kept as-is.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError(f"analytic_phase expects a single channel, got shape {x.shape}")
    n = x.shape[0]
    if n < 16:
        raise ValueError(f"signal of {n} samples is too short for phase extraction (need >= 16)")
    if not np.any(x):
        raise ValueError("phase undefined for all-zero signal")
    spec = np.fft.fft(x)
    mult = np.zeros(n)
    if n % 2 == 0:
        mult[0] = 1.0
        mult[n // 2] = 1.0
        mult[1 : n // 2] = 2.0
    else:
        mult[0] = 1.0
        mult[1 : (n + 1) // 2] = 2.0
    analytic = np.fft.ifft(spec * mult)
    phase = np.arctan2(analytic.imag, analytic.real)
    phase[phase == -np.pi] = np.pi
    return phase


def trim_edges(x: np.ndarray, fraction: float = DEFAULT_EDGE_FRACTION) -> np.ndarray:
    """Drop floor(fraction * length) samples from each end of the last axis."""
    if not (0 <= fraction < 0.5):
        raise ValueError(f"edge fraction must be in [0, 0.5), got {fraction}")
    n = x.shape[-1]
    k = int(fraction * n)
    return x[..., k : n - k] if k else x
