"""Domain types, validation, and file I/O for recordings, epochs, and bands.

On-disk recording format: flat little-endian float32 channel-major binary
(`<stem>.eeg.f32`) plus a JSON sidecar (`<stem>.meta.json`) with keys
`sampling_rate_hz`, `channel_names`, and `markers` (list of
`{sample, class, paradigm}`).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

BINARY_SUFFIX = ".eeg.f32"
SIDECAR_SUFFIX = ".meta.json"


class Paradigm(str, Enum):
    PERCEIVED = "perceived"
    OVERT = "overt"
    WHISPERED = "whispered"
    IMAGINED = "imagined"


class BandName(str, Enum):
    DELTA = "delta"
    THETA = "theta"
    ALPHA = "alpha"
    BETA = "beta"
    GAMMA = "gamma"


@dataclass(frozen=True)
class FrequencyBand:
    """A named frequency band with [lo_hz, hi_hz) edges."""

    name: BandName
    lo_hz: float
    hi_hz: float

    def __post_init__(self):
        object.__setattr__(self, "name", BandName(self.name))
        if not (0 < self.lo_hz < self.hi_hz):
            raise ValueError(
                f"band {self.name.value}: need 0 < lo_hz < hi_hz, got [{self.lo_hz}, {self.hi_hz}]"
            )

    @property
    def center_hz(self) -> float:
        return 0.5 * (self.lo_hz + self.hi_hz)


# Canonical analysis bands, ordered delta -> gamma.
CANONICAL_BANDS: tuple[FrequencyBand, ...] = (
    FrequencyBand(BandName.DELTA, 1.0, 4.0),
    FrequencyBand(BandName.THETA, 4.0, 8.0),
    FrequencyBand(BandName.ALPHA, 8.0, 12.0),
    FrequencyBand(BandName.BETA, 12.0, 30.0),
    FrequencyBand(BandName.GAMMA, 30.0, 45.0),
)

BAND_BY_NAME: dict[str, FrequencyBand] = {b.name.value: b for b in CANONICAL_BANDS}


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class Marker:
    """Stimulus marker: epoch start sample plus its class/paradigm labels."""

    sample: int
    class_id: int
    paradigm: Paradigm

    def __post_init__(self):
        object.__setattr__(self, "paradigm", Paradigm(self.paradigm))
        if self.sample < 0:
            raise ValueError(f"marker sample must be >= 0, got {self.sample}")


@dataclass(frozen=True)
class Recording:
    """Continuous multichannel time series in microvolts.

    samples is channel-major float32 [n_channels, n_samples]; immutable after
    construction and therefore safe to share across threads.
    """

    samples: np.ndarray
    sampling_rate_hz: float
    channel_names: tuple[str, ...]
    markers: tuple[Marker, ...] = ()

    def __post_init__(self):
        samples = np.ascontiguousarray(self.samples, dtype=np.float32)
        if samples.ndim != 2:
            raise ValueError(f"samples must be 2-D [channels, samples], got shape {samples.shape}")
        object.__setattr__(self, "samples", _freeze(samples))
        object.__setattr__(self, "channel_names", tuple(self.channel_names))
        object.__setattr__(self, "markers", tuple(self.markers))
        if self.sampling_rate_hz <= 0:
            raise ValueError(f"sampling_rate_hz must be > 0, got {self.sampling_rate_hz}")
        if len(self.channel_names) != samples.shape[0]:
            raise ValueError(
                f"channel count mismatch: {len(self.channel_names)} names for "
                f"{samples.shape[0]} sample rows"
            )
        if len(set(self.channel_names)) != len(self.channel_names):
            raise ValueError("channel_names must be unique")
        bad = ~np.isfinite(samples)
        if bad.any():
            ch = int(np.argwhere(bad.any(axis=1))[0][0])
            raise ValueError(f"non-finite values in channel {ch} ({self.channel_names[ch]})")
        for mk in self.markers:
            if mk.sample >= samples.shape[1]:
                raise ValueError(
                    f"marker at sample {mk.sample} outside recording of length {samples.shape[1]}"
                )

    @property
    def n_channels(self) -> int:
        return self.samples.shape[0]

    @property
    def n_samples(self) -> int:
        return self.samples.shape[1]


@dataclass(frozen=True)
class EpochSet:
    """Trials x channels x time tensor with per-trial class/paradigm labels."""

    data: np.ndarray
    class_labels: np.ndarray
    paradigm_labels: np.ndarray
    sampling_rate_hz: float

    def __post_init__(self):
        data = np.ascontiguousarray(self.data, dtype=np.float64)
        if data.ndim != 3:
            raise ValueError(f"data must be [trials, channels, samples], got shape {data.shape}")
        labels = np.asarray(self.class_labels, dtype=np.int64)
        paradigms = np.asarray(
            [Paradigm(p).value for p in np.asarray(self.paradigm_labels).ravel()]
        )
        n = data.shape[0]
        if labels.shape != (n,) or paradigms.shape != (n,):
            raise ValueError(
                f"label lengths ({labels.shape[0]}, {paradigms.shape[0]}) must equal n_trials ({n})"
            )
        if n and labels.min() < 0:
            raise ValueError("class labels must be >= 0")
        if self.sampling_rate_hz <= 0:
            raise ValueError(f"sampling_rate_hz must be > 0, got {self.sampling_rate_hz}")
        object.__setattr__(self, "data", _freeze(data))
        object.__setattr__(self, "class_labels", _freeze(labels))
        object.__setattr__(self, "paradigm_labels", _freeze(paradigms))

    @property
    def n_trials(self) -> int:
        return self.data.shape[0]

    @property
    def n_channels(self) -> int:
        return self.data.shape[1]

    @property
    def n_samples(self) -> int:
        return self.data.shape[2]

    @property
    def epoch_seconds(self) -> float:
        return self.data.shape[2] / self.sampling_rate_hz

    @property
    def n_classes(self) -> int:
        return int(self.class_labels.max()) + 1 if self.n_trials else 0


# Default 20-word vocabulary: 5 categories x 4 words.
DEFAULT_WORD_CATEGORIES: dict[str, tuple[str, ...]] = {
    "emotions": ("Sad", "Amused", "Positive", "Disappointed"),
    "natural_objects": ("Peach", "Mango", "Strawberry", "Watermelon"),
    "animals": ("Horse", "Tiger", "Buffalo", "Alligator"),
    "artificial_objects": ("House", "Notebook", "Apartment", "Television"),
    "abstract_nouns": ("Death", "Weather", "January", "Conversation"),
}


@dataclass(frozen=True)
class SpeechWordVocabulary:
    """Word vocabulary: 5 named categories of 4 words each, 20 unique words."""

    categories: dict[str, tuple[str, ...]] = field(
        default_factory=lambda: dict(DEFAULT_WORD_CATEGORIES)
    )

    def __post_init__(self):
        cats = {name: tuple(words) for name, words in self.categories.items()}
        object.__setattr__(self, "categories", cats)
        if len(cats) != 5 or any(len(words) != 4 for words in cats.values()):
            raise ValueError("vocabulary must have 5 categories of 4 words each")
        if len(set(self.words)) != 20:
            raise ValueError("vocabulary must contain exactly 20 unique words")

    @property
    def words(self) -> tuple[str, ...]:
        return tuple(w for words in self.categories.values() for w in words)

    def class_id(self, word: str) -> int:
        return self.words.index(word)


def _paths(path: str | Path) -> tuple[Path, Path]:
    """Binary and sidecar paths for a recording, from either one or a stem."""
    p = Path(path)
    name = p.name
    if name.endswith(BINARY_SUFFIX):
        stem = name[: -len(BINARY_SUFFIX)]
    elif name.endswith(SIDECAR_SUFFIX):
        stem = name[: -len(SIDECAR_SUFFIX)]
    else:
        stem = name
    return p.with_name(stem + BINARY_SUFFIX), p.with_name(stem + SIDECAR_SUFFIX)


def save_recording(rec: Recording, path: str | Path) -> Path:
    """Write the float32 binary and JSON sidecar; returns the binary path."""
    bin_path, meta_path = _paths(path)
    bin_path.parent.mkdir(parents=True, exist_ok=True)
    rec.samples.astype("<f4").tofile(bin_path)
    meta = {
        "sampling_rate_hz": rec.sampling_rate_hz,
        "channel_names": list(rec.channel_names),
        "markers": [
            {"sample": mk.sample, "class": mk.class_id, "paradigm": mk.paradigm.value}
            for mk in rec.markers
        ],
    }
    meta_path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return bin_path


def load_recording(path: str | Path) -> Recording:
    """Load a recording from its binary (or stem) path; sidecar is required."""
    bin_path, meta_path = _paths(path)
    if not bin_path.exists():
        raise FileNotFoundError(f"recording binary not found: {bin_path}")
    if not meta_path.exists():
        raise FileNotFoundError(f"missing sidecar: {meta_path}")
    meta = json.loads(meta_path.read_text())
    for key in ("sampling_rate_hz", "channel_names", "markers"):
        if key not in meta:
            raise ValueError(f"sidecar {meta_path} missing key {key!r}")
    channel_names = [str(c) for c in meta["channel_names"]]
    n_channels = len(channel_names)
    if n_channels == 0:
        raise ValueError(f"sidecar {meta_path} lists no channels")
    n_bytes = bin_path.stat().st_size
    if n_bytes % (4 * n_channels) != 0:
        raise ValueError(
            f"channel count mismatch: {n_bytes} bytes is not divisible by "
            f"4 x {n_channels} channels"
        )
    raw = np.fromfile(bin_path, dtype="<f4")
    samples = raw.reshape(n_channels, n_bytes // (4 * n_channels))
    markers = tuple(
        Marker(int(m["sample"]), int(m["class"]), Paradigm(m["paradigm"]))
        for m in meta["markers"]
    )
    return Recording(
        samples=samples,
        sampling_rate_hz=float(meta["sampling_rate_hz"]),
        channel_names=tuple(channel_names),
        markers=markers,
    )


def segment_epochs(rec: Recording, epoch_seconds: float) -> EpochSet:
    """Cut one fixed-length epoch per marker, starting at the marker sample.

    Epoch length is round(epoch_seconds * sampling_rate); markers that leave
    no room for a full window are an error.
    """
    if epoch_seconds <= 0:
        raise ValueError(f"epoch_seconds must be > 0, got {epoch_seconds}")
    n_win = int(round(epoch_seconds * rec.sampling_rate_hz))
    if n_win < 1:
        raise ValueError(f"epoch of {epoch_seconds} s is shorter than one sample")
    epochs = []
    classes = []
    paradigms = []
    for k, mk in enumerate(rec.markers):
        if mk.sample + n_win > rec.n_samples:
            raise ValueError(
                f"marker {k} at sample {mk.sample} leaves no room for a "
                f"{n_win}-sample epoch (recording has {rec.n_samples} samples)"
            )
        epochs.append(rec.samples[:, mk.sample : mk.sample + n_win].astype(np.float64))
        classes.append(mk.class_id)
        paradigms.append(mk.paradigm.value)
    data = np.stack(epochs) if epochs else np.zeros((0, rec.n_channels, n_win))
    return EpochSet(
        data=data,
        class_labels=np.asarray(classes, dtype=np.int64),
        paradigm_labels=np.asarray(paradigms, dtype="<U9"),
        sampling_rate_hz=rec.sampling_rate_hz,
    )
