"""Dataset splitting, the (metric x model x band) experiment grid, and the
synthetic phase-coupled EEG generator.

The generator exists because decoding behavior must be verifiable at desk
scale: trials of a class share band-limited oscillations on chosen channel
sets with a controlled phase lag, so connectivity-based decoders have a
known ground truth to recover.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .connectivity import Metric, trial_connectivity
from .decoder import (
    DecoderSpec,
    InputLayout,
    Model,
    Task,
    TrainConfig,
    adam_step,
    build_model,
    cross_entropy,
    init_adam,
    mae_loss,
)
from .dsp import DEFAULT_EDGE_FRACTION, bandpass
from .signal_core import (
    BAND_BY_NAME,
    CANONICAL_BANDS,
    EpochSet,
    FrequencyBand,
    Marker,
    Paradigm,
    Recording,
)

DEFAULT_FRACTIONS = (0.7, 0.1, 0.2)  # train, val, test
GRID_METRICS = ("plv", "pli")
GRID_MODELS = ("eegnet_like", "shallow_like", "fbcnet_like")
GRID_BANDS = ("delta", "theta", "alpha", "beta", "gamma", "total")
BAND_COLUMN_TITLES = {
    "delta": "Delta", "theta": "Theta", "alpha": "Alpha",
    "beta": "Beta", "gamma": "Gamma", "total": "Total",
}
MODEL_TITLES = {
    "eegnet_like": "EEGNet-like",
    "shallow_like": "ShallowConvNet-like",
    "fbcnet_like": "FBCNet-like",
}

# Phase-jitter ceiling: terminal random-walk std, in radians, as strength -> 0.
JITTER_MAX_RAD = np.pi
SYNTH_NOISE_BAND = (1.0, 45.0)


@dataclass(frozen=True)
class SplitPlan:
    """Disjoint, exhaustive, per-class stratified index partition."""

    train: tuple[int, ...]
    val: tuple[int, ...]
    test: tuple[int, ...]
    seed: int
    fractions: tuple[float, float, float]

    def __post_init__(self):
        parts = (set(self.train), set(self.val), set(self.test))
        total = len(self.train) + len(self.val) + len(self.test)
        if len(parts[0] | parts[1] | parts[2]) != total:
            raise ValueError("split partitions overlap")


def stratified_split(
    labels,
    fractions: tuple[float, float, float] = DEFAULT_FRACTIONS,
    seed: int = 123,
) -> SplitPlan:
    """Per class: seeded shuffle, floor(f*n) per partition, remainders to train."""
    labels = np.asarray(labels, dtype=np.int64)
    if labels.ndim != 1 or labels.size == 0:
        raise ValueError("labels must be a nonempty 1-D array")
    if any(f < 0 for f in fractions) or abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError(f"fractions must be nonnegative and sum to 1, got {fractions}")
    rng = np.random.default_rng(seed)
    train: list[int] = []
    val: list[int] = []
    test: list[int] = []
    for cls in np.unique(labels):
        idx = np.flatnonzero(labels == cls)
        n = idx.size
        counts = [int(f * n) for f in fractions]
        for f, count, part in zip(fractions, counts, ("train", "val", "test")):
            if f > 0 and count == 0:
                raise ValueError(
                    f"class {cls} with {n} trials is too small for a "
                    f"{part} fraction of {f}"
                )
        perm = idx[rng.permutation(n)]
        train.extend(perm[: counts[0]])
        val.extend(perm[counts[0] : counts[0] + counts[1]])
        test.extend(perm[counts[0] + counts[1] : counts[0] + counts[1] + counts[2]])
        train.extend(perm[counts[0] + counts[1] + counts[2] :])  # remainders
    return SplitPlan(
        train=tuple(int(i) for i in train),
        val=tuple(int(i) for i in val),
        test=tuple(int(i) for i in test),
        seed=seed,
        fractions=tuple(fractions),
    )


@dataclass(frozen=True)
class CouplingSpec:
    """One coupled channel set: shared carrier in `band` with a fixed lag.

    The first listed channel carries lag 0; the rest lead by phase_lag_rad.
    Per-channel phase jitter scales with (1 - strength); strength 0 means the
    channels are generated as independent noise.
    """

    channels: tuple[int, ...]
    band: FrequencyBand
    phase_lag_rad: float = 0.0
    strength: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "channels", tuple(self.channels))
        if len(self.channels) < 2:
            raise ValueError(f"coupling needs >= 2 channels, got {self.channels}")
        if len(set(self.channels)) != len(self.channels):
            raise ValueError(f"coupled channels must be distinct, got {self.channels}")
        if not (0.0 <= self.strength <= 1.0):
            raise ValueError(f"coupling strength must be in [0, 1], got {self.strength}")


@dataclass(frozen=True)
class SynthSpec:
    """Synthetic phase-coupled EEG description; defaults match a 128-channel,
    1 kHz, 1.5 s, 20-class recording session."""

    n_classes: int = 20
    n_channels: int = 128
    rate_hz: float = 1000.0
    epoch_seconds: float = 1.5
    trials_per_class: int = 60
    coupling_plan: tuple[tuple[CouplingSpec, ...], ...] = ()
    noise_snr_db: float = 10.0
    seed: int = 123
    paradigm: Paradigm = Paradigm.IMAGINED

    def __post_init__(self):
        object.__setattr__(self, "paradigm", Paradigm(self.paradigm))
        object.__setattr__(
            self, "coupling_plan", tuple(tuple(items) for items in self.coupling_plan)
        )
        if self.n_classes < 1 or self.n_channels < 1 or self.trials_per_class < 1:
            raise ValueError("n_classes, n_channels, trials_per_class must be >= 1")
        if self.rate_hz <= 0 or self.epoch_seconds <= 0:
            raise ValueError("rate_hz and epoch_seconds must be > 0")
        if self.coupling_plan and len(self.coupling_plan) != self.n_classes:
            raise ValueError(
                f"coupling_plan has {len(self.coupling_plan)} entries for "
                f"{self.n_classes} classes"
            )
        for cls_plan in self.coupling_plan:
            for cp in cls_plan:
                bad = [c for c in cp.channels if not (0 <= c < self.n_channels)]
                if bad:
                    raise ValueError(
                        f"coupling references invalid channels {bad} "
                        f"(n_channels={self.n_channels})"
                    )
                if cp.band.center_hz >= self.rate_hz / 2:
                    raise ValueError(
                        f"carrier {cp.band.center_hz} Hz is not below Nyquist "
                        f"{self.rate_hz / 2} Hz"
                    )


def default_coupling_plan(
    n_classes: int,
    n_channels: int,
    band: FrequencyBand,
    strength: float = 0.9,
    phase_lag_rad: float = np.pi / 4,
) -> tuple[tuple[CouplingSpec, ...], ...]:
    """Disjoint channel pair per class: class c couples channels (2c, 2c+1)."""
    if 2 * n_classes > n_channels:
        raise ValueError(
            f"{n_classes} classes need {2 * n_classes} channels for disjoint pairs, "
            f"got {n_channels}"
        )
    return tuple(
        (CouplingSpec((2 * c, 2 * c + 1), band, phase_lag_rad, strength),)
        for c in range(n_classes)
    )


def _pink_noise(rng: np.random.Generator, n: int) -> np.ndarray:
    """Unit-power noise with a 1/f power spectrum."""
    spec = np.fft.rfft(rng.standard_normal(n))
    f = np.fft.rfftfreq(n)
    scale = np.zeros_like(f)
    scale[1:] = 1.0 / np.sqrt(f[1:])
    x = np.fft.irfft(spec * scale, n)
    return x / x.std()


def _band_noise(rng: np.random.Generator, n: int, rate: float) -> np.ndarray:
    """Band-limited unit-power noise covering the canonical analysis range."""
    lo, hi = SYNTH_NOISE_BAND
    hi = min(hi, 0.45 * rate)
    x = bandpass(rng.standard_normal(n), rate, lo, hi)
    return x / x.std()


def synth_generate(spec: SynthSpec) -> EpochSet:
    """Generate phase-coupled trials; see SynthSpec/CouplingSpec for semantics.

    Coupled channels: sin(2*pi*f_center*t + theta0 + lag + jitter) with a
    fresh carrier phase per trial and random-walk jitter whose terminal std is
    (1 - strength) * JITTER_MAX_RAD. Everything else is band-limited noise;
    broadband pink noise is added at noise_snr_db relative to the mean
    channel power.
    """
    rng = np.random.default_rng(spec.seed)
    n = int(round(spec.epoch_seconds * spec.rate_hz))
    t = np.arange(n) / spec.rate_hz
    n_trials = spec.n_classes * spec.trials_per_class
    data = np.empty((n_trials, spec.n_channels, n))
    labels = np.empty(n_trials, dtype=np.int64)
    sine_power = 0.5  # power of a unit-amplitude sinusoid

    trial = 0
    for cls in range(spec.n_classes):
        plan = spec.coupling_plan[cls] if spec.coupling_plan else ()
        for _ in range(spec.trials_per_class):
            x = np.zeros((spec.n_channels, n))
            driven: set[int] = set()
            for cp in plan:
                if cp.strength == 0.0:
                    continue  # no coupling: channels fall through to noise
                theta0 = rng.uniform(0.0, 2.0 * np.pi)
                omega = 2.0 * np.pi * cp.band.center_hz
                sigma = (1.0 - cp.strength) * JITTER_MAX_RAD
                for k, ch in enumerate(cp.channels):
                    jitter = sigma * np.cumsum(rng.standard_normal(n)) / np.sqrt(n)
                    lag = 0.0 if k == 0 else cp.phase_lag_rad
                    x[ch] += np.sin(omega * t + theta0 + lag + jitter)
                    driven.add(ch)
            for ch in range(spec.n_channels):
                if ch not in driven:
                    x[ch] = _band_noise(rng, n, spec.rate_hz) * np.sqrt(sine_power)
            signal_power = float(np.mean(x**2))
            noise_power = signal_power / 10.0 ** (spec.noise_snr_db / 10.0)
            for ch in range(spec.n_channels):
                x[ch] += _pink_noise(rng, n) * np.sqrt(noise_power)
            data[trial] = x
            labels[trial] = cls
            trial += 1
    return EpochSet(
        data=data,
        class_labels=labels,
        paradigm_labels=np.full(n_trials, spec.paradigm.value, dtype="<U9"),
        sampling_rate_hz=spec.rate_hz,
    )


def epochs_to_recording(epochs: EpochSet, channel_names: tuple[str, ...] | None = None) -> Recording:
    """Concatenate trials into one continuous recording with trial markers."""
    names = channel_names or tuple(f"ch{i:03d}" for i in range(epochs.n_channels))
    samples = epochs.data.transpose(1, 0, 2).reshape(epochs.n_channels, -1)
    markers = tuple(
        Marker(
            sample=t * epochs.n_samples,
            class_id=int(epochs.class_labels[t]),
            paradigm=Paradigm(str(epochs.paradigm_labels[t])),
        )
        for t in range(epochs.n_trials)
    )
    return Recording(
        samples=samples,
        sampling_rate_hz=epochs.sampling_rate_hz,
        channel_names=names,
        markers=markers,
    )


def connectivity_features(
    epochs: EpochSet,
    metric: Metric | str,
    band: str,
    edge_fraction: float = DEFAULT_EDGE_FRACTION,
    jobs: int = 1,
) -> np.ndarray:
    """Decoder input stack [n_trials, n_bands, C, C] for one grid cell.

    band is a canonical band name or 'total' (all five bands stacked).
    """
    if band == "total":
        bands = CANONICAL_BANDS
    else:
        bands = (BAND_BY_NAME[band],)
    stacks = [
        trial_connectivity(epochs, b, metric, edge_fraction=edge_fraction, jobs=jobs)
        for b in bands
    ]
    return np.stack(stacks, axis=1)


def bandpower_tensor(values: np.ndarray) -> np.ndarray:
    """Reorder band-power features [N, C, W, B] to decoder layout [N, B, C, W]."""
    if values.ndim != 4:
        raise ValueError(f"expected [trials, channels, windows, bands], got {values.shape}")
    return np.ascontiguousarray(values.transpose(0, 3, 1, 2))


@dataclass
class RunResult:
    """One trained model: loss curves, best-epoch params, test predictions."""

    model_seed: int
    loss_curve: list[float]
    val_loss_curve: list[float]
    test_accuracy_pct: float | None
    test_mae: float | None
    predictions: list[int] | list[float]
    true_labels: list[int] | list[float]
    best_epoch: int
    model: Model | None = None  # trained model (best epoch); not serialized


def train_model(model: Model, x: np.ndarray, y: np.ndarray, plan: SplitPlan,
                cfg: TrainConfig) -> RunResult:
    """Train with Adam + decoupled weight decay; keep the best-val-loss epoch.

    Deterministic given (model seed, data order): shuffling and dropout draw
    from one generator seeded with the model seed.
    """
    rng = np.random.default_rng(model.seed)
    task = model.spec.task
    loss_fn = cross_entropy if task is Task.CLASSIFICATION else mae_loss
    y = np.asarray(y)
    state = init_adam(model.params)
    train_idx = np.asarray(plan.train, dtype=np.int64)
    val_idx = np.asarray(plan.val, dtype=np.int64)
    test_idx = np.asarray(plan.test, dtype=np.int64)

    def eval_loss(idx: np.ndarray) -> float:
        out = model.forward(x[idx], train=False)
        return float(loss_fn(out, y[idx]).value)

    loss_curve: list[float] = []
    val_curve: list[float] = []
    best = (np.inf, -1, model.param_values(), model.buffer_values())
    for epoch in range(cfg.epochs):
        order = train_idx[rng.permutation(train_idx.size)]
        total = 0.0
        for start in range(0, order.size, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            model.zero_grad()
            loss = loss_fn(model.forward(x[idx], train=True, rng=rng), y[idx])
            loss.backward()
            adam_step(
                model.params,
                {name: p.grad for name, p in model.params.items()},
                state,
                cfg.learning_rate,
                cfg.weight_decay,
            )
            total += float(loss.value) * idx.size
        loss_curve.append(total / order.size)
        if val_idx.size:
            val_loss = eval_loss(val_idx)
            val_curve.append(val_loss)
            if val_loss < best[0]:
                best = (val_loss, epoch, model.param_values(), model.buffer_values())
    if val_idx.size and best[1] >= 0:
        model.load_param_values(best[2])
        model.load_buffer_values(best[3])
    out = model.forward(x[test_idx], train=False)
    if task is Task.CLASSIFICATION:
        pred = out.value.argmax(axis=1)
        acc = float((pred == y[test_idx]).mean()) * 100.0
        return RunResult(
            model_seed=model.seed,
            loss_curve=loss_curve,
            val_loss_curve=val_curve,
            test_accuracy_pct=acc,
            test_mae=None,
            predictions=[int(v) for v in pred],
            true_labels=[int(v) for v in y[test_idx]],
            best_epoch=best[1],
            model=model,
        )
    pred = out.value.reshape(-1)
    mae = float(np.abs(pred - y[test_idx].reshape(-1)).mean())
    return RunResult(
        model_seed=model.seed,
        loss_curve=loss_curve,
        val_loss_curve=val_curve,
        test_accuracy_pct=None,
        test_mae=mae,
        predictions=[float(v) for v in pred],
        true_labels=[float(v) for v in y[test_idx].reshape(-1)],
        best_epoch=best[1],
        model=model,
    )


@dataclass
class CellResult:
    metric: str
    model: str
    band: str
    accuracy_mean_pct: float
    accuracy_std_pct: float
    n_runs: int
    runs: list[RunResult]


@dataclass
class ExperimentReport:
    """Accuracy grid keyed by (metric, model, band), mean +/- std over runs."""

    cells: dict[tuple[str, str, str], CellResult] = field(default_factory=dict)
    n_runs: int = 0
    train_config: TrainConfig | None = None

    def to_json_dict(self) -> dict:
        cfg = self.train_config
        return {
            "n_runs": self.n_runs,
            "train_config": None if cfg is None else {
                "learning_rate": cfg.learning_rate,
                "epochs": cfg.epochs,
                "weight_decay": cfg.weight_decay,
                "seed": cfg.seed,
                "batch_size": cfg.batch_size,
            },
            "cells": [
                {
                    "metric": cell.metric,
                    "model": cell.model,
                    "band": cell.band,
                    "accuracy_mean_pct": cell.accuracy_mean_pct,
                    "accuracy_std_pct": cell.accuracy_std_pct,
                    "n_runs": cell.n_runs,
                    "runs": [
                        {
                            "model_seed": run.model_seed,
                            "test_accuracy_pct": run.test_accuracy_pct,
                            "test_mae": run.test_mae,
                            "best_epoch": run.best_epoch,
                            "loss_curve": run.loss_curve,
                            "val_loss_curve": run.val_loss_curve,
                            "predictions": run.predictions,
                            "true_labels": run.true_labels,
                        }
                        for run in cell.runs
                    ],
                }
                for cell in self._ordered_cells()
            ],
        }

    def _ordered_cells(self) -> list[CellResult]:
        def key(item):
            (metric, model, band) = item
            return (
                GRID_METRICS.index(metric) if metric in GRID_METRICS else len(GRID_METRICS),
                GRID_MODELS.index(model) if model in GRID_MODELS else len(GRID_MODELS),
                GRID_BANDS.index(band) if band in GRID_BANDS else len(GRID_BANDS),
                item,
            )

        return [self.cells[k] for k in sorted(self.cells, key=key)]

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2, sort_keys=True)

    def to_markdown(self) -> str:
        """Accuracy table: one row per (metric, model), one column per band."""
        bands = [b for b in GRID_BANDS if any(k[2] == b for k in self.cells)]
        header = "| Feature | Model | " + " | ".join(BAND_COLUMN_TITLES[b] for b in bands) + " |"
        sep = "|" + " --- |" * (2 + len(bands))
        lines = [header, sep]
        row_keys = sorted(
            {(metric, model) for metric, model, _ in self.cells},
            key=lambda mk: (
                GRID_METRICS.index(mk[0]) if mk[0] in GRID_METRICS else len(GRID_METRICS),
                GRID_MODELS.index(mk[1]) if mk[1] in GRID_MODELS else len(GRID_MODELS),
            ),
        )
        for metric, model in row_keys:
            cols = []
            for band in bands:
                cell = self.cells.get((metric, model, band))
                if cell is None:
                    cols.append("-")
                else:
                    cols.append(f"{cell.accuracy_mean_pct:.2f} ± {cell.accuracy_std_pct:.2f}")
            lines.append(
                f"| {metric.upper()} | {MODEL_TITLES.get(model, model)} | " + " | ".join(cols) + " |"
            )
        return "\n".join(lines) + "\n"


def run_cell(
    x: np.ndarray,
    labels: np.ndarray,
    architecture: str,
    cfg: TrainConfig,
    n_runs: int = 5,
    hidden_dim: int = 64,
    dropout_p: float = 0.5,
    fractions: tuple[float, float, float] = DEFAULT_FRACTIONS,
) -> list[RunResult]:
    """Train one architecture n_runs times on a fixed stratified split.

    The split always uses cfg.seed; run r seeds model init (and its dropout
    stream) with cfg.seed + r.
    """
    labels = np.asarray(labels, dtype=np.int64)
    n_classes = int(labels.max()) + 1
    layout = InputLayout(x.shape[1], x.shape[2], x.shape[3])
    plan = stratified_split(labels, fractions, cfg.seed)
    runs = []
    for r in range(n_runs):
        spec = DecoderSpec(
            architecture=architecture,
            n_classes=n_classes,
            input_layout=layout,
            hidden_dim=hidden_dim,
            dropout_p=dropout_p,
        )
        model = build_model(spec, cfg.seed + r)
        runs.append(train_model(model, x, labels, plan, cfg))
    return runs


def _cell_from_runs(metric: str, model: str, band: str, runs: list[RunResult]) -> CellResult:
    accs = np.array([run.test_accuracy_pct for run in runs])
    return CellResult(
        metric=metric,
        model=model,
        band=band,
        accuracy_mean_pct=float(accs.mean()),
        accuracy_std_pct=float(accs.std()),  # population std over runs
        n_runs=len(runs),
        runs=runs,
    )


def run_grid(
    epochs: EpochSet,
    cfg: TrainConfig,
    metrics: tuple[str, ...] = GRID_METRICS,
    models: tuple[str, ...] = GRID_MODELS,
    bands: tuple[str, ...] = GRID_BANDS,
    n_runs: int = 5,
    hidden_dim: int = 64,
    dropout_p: float = 0.5,
    edge_fraction: float = DEFAULT_EDGE_FRACTION,
    shuffle_labels: bool = False,
    jobs: int = 1,
) -> ExperimentReport:
    """Extract features and train every (metric, model, band) cell.

    shuffle_labels permutes class labels (seeded with cfg.seed) before
    splitting: a leakage control that must score at chance. Cells are
    independent; jobs > 1 runs them in a thread pool with results merged by
    key, so the report does not depend on jobs.
    """
    if n_runs < 1:
        raise ValueError(f"n_runs must be >= 1, got {n_runs}")
    labels = epochs.class_labels.copy()
    if shuffle_labels:
        labels = np.random.default_rng(cfg.seed).permutation(labels)

    # extract each (metric, single band) stack once; "total" reuses all five
    features: dict[tuple[str, str], np.ndarray] = {}
    for metric in metrics:
        single = [b for b in bands if b != "total"]
        if "total" in bands:
            single = [b.name.value for b in CANONICAL_BANDS]
        for band in dict.fromkeys(single + [b for b in bands if b != "total"]):
            try:
                features[(metric, band)] = connectivity_features(
                    epochs, metric, band, edge_fraction=edge_fraction, jobs=jobs
                )
            except Exception as exc:
                raise RuntimeError(f"feature extraction failed for cell "
                                   f"({metric}, {band}): {exc}") from exc
        if "total" in bands:
            features[(metric, "total")] = np.concatenate(
                [features[(metric, b.name.value)] for b in CANONICAL_BANDS], axis=1
            )

    cell_keys = [(metric, model, band) for metric in metrics for model in models
                 for band in bands]

    def one(key: tuple[str, str, str]) -> CellResult:
        metric, model, band = key
        try:
            runs = run_cell(features[(metric, band)], labels, model, cfg,
                            n_runs=n_runs, hidden_dim=hidden_dim, dropout_p=dropout_p)
        except Exception as exc:
            raise RuntimeError(f"training failed for cell {key}: {exc}") from exc
        return _cell_from_runs(metric, model, band, runs)

    report = ExperimentReport(n_runs=n_runs, train_config=cfg)
    if jobs > 1 and len(cell_keys) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            for key, cell in zip(cell_keys, pool.map(one, cell_keys)):
                report.cells[key] = cell
    else:
        for key in cell_keys:
            report.cells[key] = one(key)
    return report
