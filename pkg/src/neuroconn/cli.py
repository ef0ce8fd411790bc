"""Command-line front end chaining the pipeline stages with reproducible configs.

Subcommands: synth, preprocess, features, connectivity, train, evaluate,
stats, report. Every stage resolves its configuration (defaults <- --config
file <- flags), writes a run-manifest.json capturing the resolved values, and
exits 0 on success, 2 on usage errors, 1 on runtime errors. A manifest can be
passed back via --config to reproduce a run bitwise (timestamps aside).
"""

from __future__ import annotations

import argparse
import copy
import csv
import json
import math
import os
import sys
import time
from itertools import combinations
from pathlib import Path

import numpy as np

from . import __version__
from .connectivity import (
    Metric,
    band_from_name,
    find_trial_stacks,
    load_trial_stack,
    save_trial_stack,
    trial_connectivity,
)
from .decoder import TrainConfig, load_checkpoint, save_checkpoint
from .dsp import bandpass, notch
from .experiment import (
    CANONICAL_BANDS,
    CouplingSpec,
    ExperimentReport,
    SynthSpec,
    _cell_from_runs,
    default_coupling_plan,
    epochs_to_recording,
    run_cell,
    synth_generate,
)
from .features import epoch_features, export_csv
from .signal_core import (
    BAND_BY_NAME,
    BINARY_SUFFIX,
    EpochSet,
    Recording,
    load_recording,
    save_recording,
    segment_epochs,
)
from .stats import bh_fdr, paired_ttest

SEED_ENV_VAR = "NEUROCONN_SEED"
MANIFEST_NAME = "run-manifest.json"
FALLBACK_SEED = 123


class ConfigError(ValueError):
    pass


DEFAULT_CONFIG: dict = {
    "preprocess": {
        "bandpass": {"lo_hz": 0.5, "hi_hz": 125.0, "order": 4},
        "notch": [
            {"center_hz": 60.0, "quality": 30.0},
            {"center_hz": 120.0, "quality": 30.0},
        ],
        "epoch_seconds": 1.5,
        "exclude_channels": [],
    },
    "features": {"window_seconds": 1.0, "hop_seconds": 0.5, "log_transform": False},
    "connectivity": {
        "metric": "plv",
        "bands": ["delta", "theta", "alpha", "beta", "gamma"],
        "edge_fraction": 0.1,
        "signed_pli": False,
    },
    "train": {
        "architecture": ["eegnet_like", "shallow_like", "fbcnet_like"],
        "metrics": None,
        "bands": None,
        "lr": 1e-5,
        "epochs": 100,
        "weight_decay": 5e-4,
        "dropout": 0.5,
        "hidden_dim": 64,
        "seed": None,
        "n_runs": 5,
        "batch_size": 32,
        "label_shuffle": False,
    },
    "synth": {
        "n_classes": 20,
        "n_channels": 128,
        "rate_hz": 1000.0,
        "epoch_seconds": 1.5,
        "trials_per_class": 60,
        "noise_snr_db": 10.0,
        "seed": None,
        "paradigm": "imagined",
        "coupling": {
            "band": "gamma",
            "strength": 0.9,
            "phase_lag_rad": math.pi / 4,
        },
        "coupling_plan": None,
    },
}


def _check_keys(section: dict, allowed, path: str):
    unknown = sorted(set(section) - set(allowed))
    if unknown:
        raise ConfigError(
            f"unknown config key '{path}.{unknown[0]}'; allowed keys: {sorted(allowed)}"
        )


def _merge(defaults, user, path: str):
    """Deep-merge user config over defaults, rejecting unknown keys."""
    if isinstance(defaults, dict):
        if not isinstance(user, dict):
            raise ConfigError(f"config section '{path}' must be an object")
        _check_keys(user, defaults.keys(), path)
        merged = {}
        for key, default in defaults.items():
            if key in user and isinstance(default, dict) and user[key] is not None:
                merged[key] = _merge(default, user[key], f"{path}.{key}")
            elif key in user:
                merged[key] = copy.deepcopy(user[key])
            else:
                merged[key] = copy.deepcopy(default)
        return merged
    return copy.deepcopy(user)


def load_config(path: str | None) -> dict:
    """Resolve a config file (or manifest) over the defaults."""
    if path is None:
        return copy.deepcopy(DEFAULT_CONFIG)
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {p}")
    try:
        user = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {p} is not valid JSON: {exc}") from exc
    if not isinstance(user, dict):
        raise ConfigError(f"config file {p} must hold a JSON object")
    if "command" in user and "config" in user:  # a run manifest
        user = user["config"]
    _check_keys(user, DEFAULT_CONFIG.keys(), "config")
    merged = copy.deepcopy(DEFAULT_CONFIG)
    for key in user:
        merged[key] = _merge(DEFAULT_CONFIG[key], user[key], key)
    return merged


def _resolve_seed(flag_seed, config_seed) -> int:
    """Priority: explicit flag > config value > NEUROCONN_SEED env > 123."""
    if flag_seed is not None:
        return int(flag_seed)
    if config_seed is not None:
        return int(config_seed)
    env = os.environ.get(SEED_ENV_VAR)
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ConfigError(f"{SEED_ENV_VAR} must be an integer, got {env!r}") from None
    return FALLBACK_SEED


def _write_manifest(out_dir: Path, command: str, config: dict,
                    inputs: list[str], outputs: list[str]):
    manifest = {
        "command": command,
        "config": config,
        "inputs": sorted(inputs),
        "outputs": sorted(outputs),
        "package_version": __version__,
        "created_at": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
    }
    (out_dir / MANIFEST_NAME).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _dry_run(config: dict) -> int:
    print(json.dumps(config, indent=2, sort_keys=True))
    return 0


def _find_recording(path: Path) -> Path:
    """Locate the recording binary: explicit file, or unique match in a dir.

    Preprocessed recordings (*.preproc.eeg.f32) win over raw ones when both
    are present.
    """
    if path.is_file():
        return path
    if not path.is_dir():
        raise FileNotFoundError(f"input not found: {path}")
    candidates = sorted(path.glob("*" + BINARY_SUFFIX))
    preprocessed = [p for p in candidates if p.name.endswith(".preproc" + BINARY_SUFFIX)]
    pool = preprocessed or candidates
    if not pool:
        raise FileNotFoundError(f"no recording (*{BINARY_SUFFIX}) found in {path}")
    if len(pool) > 1:
        names = ", ".join(p.name for p in pool)
        raise ValueError(f"multiple recordings in {path} ({names}); pass the file explicitly")
    return pool[0]


def _load_epochs(input_path: Path, epoch_seconds: float) -> EpochSet:
    rec = load_recording(_find_recording(input_path))
    if not rec.markers:
        raise ValueError(f"recording {input_path} has no markers to epoch")
    return segment_epochs(rec, epoch_seconds)


def _coupling_plan_from_config(synth_cfg: dict):
    n_classes = int(synth_cfg["n_classes"])
    n_channels = int(synth_cfg["n_channels"])
    if synth_cfg.get("coupling_plan"):
        plan = []
        for cls_items in synth_cfg["coupling_plan"]:
            specs = []
            for item in cls_items:
                _check_keys(item, {"channels", "band", "phase_lag_rad", "strength"},
                            "synth.coupling_plan[]")
                specs.append(CouplingSpec(
                    channels=tuple(int(c) for c in item["channels"]),
                    band=band_from_name(item["band"]),
                    phase_lag_rad=float(item.get("phase_lag_rad", 0.0)),
                    strength=float(item.get("strength", 1.0)),
                ))
            plan.append(tuple(specs))
        return tuple(plan)
    coupling = synth_cfg["coupling"]
    if coupling is None:
        return ()
    return default_coupling_plan(
        n_classes,
        n_channels,
        band_from_name(coupling["band"]),
        strength=float(coupling["strength"]),
        phase_lag_rad=float(coupling["phase_lag_rad"]),
    )


def cmd_synth(args) -> int:
    config = load_config(args.config)
    synth_cfg = config["synth"]
    for flag, key in (
        ("classes", "n_classes"), ("channels", "n_channels"), ("rate", "rate_hz"),
        ("epoch_seconds", "epoch_seconds"), ("trials_per_class", "trials_per_class"),
        ("snr_db", "noise_snr_db"),
    ):
        value = getattr(args, flag)
        if value is not None:
            synth_cfg[key] = value
    if args.band is not None:
        synth_cfg["coupling"]["band"] = args.band
    if args.strength is not None:
        synth_cfg["coupling"]["strength"] = args.strength
    synth_cfg["seed"] = _resolve_seed(args.seed, synth_cfg["seed"])
    if args.dry_run:
        return _dry_run(config)
    spec = SynthSpec(
        n_classes=int(synth_cfg["n_classes"]),
        n_channels=int(synth_cfg["n_channels"]),
        rate_hz=float(synth_cfg["rate_hz"]),
        epoch_seconds=float(synth_cfg["epoch_seconds"]),
        trials_per_class=int(synth_cfg["trials_per_class"]),
        coupling_plan=_coupling_plan_from_config(synth_cfg),
        noise_snr_db=float(synth_cfg["noise_snr_db"]),
        seed=int(synth_cfg["seed"]),
        paradigm=synth_cfg["paradigm"],
    )
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    epochs = synth_generate(spec)
    rec = epochs_to_recording(epochs)
    bin_path = save_recording(rec, out_dir / "synthetic")
    _write_manifest(out_dir, "synth", config, [], [bin_path.name])
    print(f"wrote {epochs.n_trials} trials x {epochs.n_channels} channels to {bin_path}")
    return 0


def cmd_preprocess(args) -> int:
    config = load_config(args.config)
    pre = config["preprocess"]
    if args.dry_run:
        return _dry_run(config)
    in_path = _find_recording(Path(args.input))
    rec = load_recording(in_path)
    excluded = set(pre["exclude_channels"] or [])
    if excluded:
        missing = excluded - set(rec.channel_names)
        if missing:
            raise ValueError(f"exclude_channels not in recording: {sorted(missing)}")
        keep = [i for i, name in enumerate(rec.channel_names) if name not in excluded]
        rec = Recording(
            samples=rec.samples[keep],
            sampling_rate_hz=rec.sampling_rate_hz,
            channel_names=tuple(rec.channel_names[i] for i in keep),
            markers=rec.markers,
        )
    data = rec.samples.astype(np.float64)
    bp = pre["bandpass"]
    if bp is not None:
        data = bandpass(data, rec.sampling_rate_hz, float(bp["lo_hz"]), float(bp["hi_hz"]),
                        order=int(bp["order"]))
    for nt in pre["notch"] or []:
        data = notch(data, rec.sampling_rate_hz, float(nt["center_hz"]),
                     quality=float(nt["quality"]))
    out_dir = Path(args.out) if args.out else in_path.parent
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = in_path.name[: -len(BINARY_SUFFIX)]
    if stem.endswith(".preproc"):
        stem = stem[: -len(".preproc")]
    out_rec = Recording(
        samples=data,
        sampling_rate_hz=rec.sampling_rate_hz,
        channel_names=rec.channel_names,
        markers=rec.markers,
    )
    bin_path = save_recording(out_rec, out_dir / (stem + ".preproc"))
    _write_manifest(out_dir, "preprocess", config, [in_path.name], [bin_path.name])
    print(f"wrote {bin_path}")
    return 0


def cmd_features(args) -> int:
    config = load_config(args.config)
    feat = config["features"]
    if args.dry_run:
        return _dry_run(config)
    in_path = Path(args.input)
    epochs = _load_epochs(in_path, float(config["preprocess"]["epoch_seconds"]))
    features = epoch_features(
        epochs,
        window_seconds=float(feat["window_seconds"]),
        hop_seconds=float(feat["hop_seconds"]),
        log_transform=bool(feat["log_transform"]),
    )
    out_dir = Path(args.out) if args.out else (in_path if in_path.is_dir() else in_path.parent)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = export_csv(features, epochs, out_dir / "band_power.csv")
    _write_manifest(out_dir, "features", config, [str(in_path)], [csv_path.name])
    print(f"wrote {csv_path} ({features.values.shape[0]} trials, "
          f"{features.values.shape[2]} windows)")
    return 0


def cmd_connectivity(args) -> int:
    config = load_config(args.config)
    conn = config["connectivity"]
    if args.metric is not None:
        conn["metric"] = args.metric
    if args.band:
        conn["bands"] = list(args.band)
    if args.signed_pli:
        conn["signed_pli"] = True
    if args.dry_run:
        return _dry_run(config)
    in_path = Path(args.input)
    epochs = _load_epochs(in_path, float(config["preprocess"]["epoch_seconds"]))
    metric = Metric(conn["metric"])
    out_dir = Path(args.out) if args.out else (in_path if in_path.is_dir() else in_path.parent)
    out_dir.mkdir(parents=True, exist_ok=True)
    outputs = []
    for band_name in conn["bands"]:
        band = band_from_name(band_name)
        stack = trial_connectivity(
            epochs, band, metric,
            edge_fraction=float(conn["edge_fraction"]),
            signed_pli=bool(conn["signed_pli"]),
            jobs=args.jobs,
        )
        trim = int(float(conn["edge_fraction"]) * epochs.n_samples)
        m_used = epochs.n_samples - 2 * trim
        path = save_trial_stack(stack, epochs, metric, band, m_used, out_dir,
                                signed=bool(conn["signed_pli"]))
        outputs.append(path.name)
    _write_manifest(out_dir, "connectivity", config, [str(in_path)], outputs)
    print(f"wrote {len(outputs)} {metric.value} stack(s) to {out_dir}")
    return 0


def _available_cells(stack_dir: Path) -> dict[tuple[str, str], tuple[np.ndarray, dict]]:
    stacks = find_trial_stacks(stack_dir)
    available: dict[tuple[str, str], tuple[np.ndarray, dict]] = {}
    labels_ref = None
    for path in stacks:
        stack, meta = load_trial_stack(path)
        key = (meta["metric"], meta["band"])
        labels = meta["class_labels"]
        if labels_ref is None:
            labels_ref = labels
        elif labels != labels_ref:
            raise ValueError(f"trial labels in {path.name} disagree with other stacks")
        available[key] = (stack, meta)
    return available


def cmd_train(args) -> int:
    config = load_config(args.config)
    tr = config["train"]
    if args.arch:
        tr["architecture"] = list(args.arch)
    for flag, key in (("lr", "lr"), ("epochs", "epochs"), ("n_runs", "n_runs"),
                      ("batch_size", "batch_size")):
        value = getattr(args, flag)
        if value is not None:
            tr[key] = value
    if args.label_shuffle:
        tr["label_shuffle"] = True
    tr["seed"] = _resolve_seed(args.seed, tr["seed"])
    if args.dry_run:
        return _dry_run(config)

    stack_dir = Path(args.input)
    if not stack_dir.exists():
        raise FileNotFoundError(f"input directory not found: {stack_dir}")
    available = _available_cells(stack_dir)
    if not available:
        has_recording = bool(sorted(stack_dir.glob("*" + BINARY_SUFFIX)))
        if has_recording:
            raise ValueError(
                f"no connectivity features in {stack_dir}; run the connectivity stage first"
            )
        raise ValueError(f"no epochs found in {stack_dir}")

    metrics = tr["metrics"] or sorted({metric for metric, _ in available})
    canonical = [b.name.value for b in CANONICAL_BANDS]
    cells: list[tuple[str, str]] = []  # (metric, band) feature cells
    for metric in metrics:
        have = {band for m, band in available if m == metric}
        if not have:
            raise ValueError(f"no {metric} stacks in {stack_dir}")
        bands = tr["bands"] or (sorted(have, key=canonical.index) +
                                (["total"] if set(canonical) <= have else []))
        for band in bands:
            if band == "total":
                if not set(canonical) <= have:
                    raise ValueError(
                        f"band 'total' needs all five bands for metric {metric}; have {sorted(have)}"
                    )
            elif band not in have:
                raise ValueError(f"no {metric}/{band} stack in {stack_dir}")
            cells.append((metric, band))

    archs = tr["architecture"]
    if isinstance(archs, str):
        archs = [archs]
    cfg = TrainConfig(
        learning_rate=float(tr["lr"]),
        epochs=int(tr["epochs"]),
        weight_decay=float(tr["weight_decay"]),
        seed=int(tr["seed"]),
        batch_size=int(tr["batch_size"]),
    )

    def features_for(metric: str, band: str) -> np.ndarray:
        if band == "total":
            return np.stack([available[(metric, b)][0] for b in canonical], axis=1)
        return available[(metric, band)][0][:, np.newaxis]

    any_meta = next(iter(available.values()))[1]
    labels = np.asarray(any_meta["class_labels"], dtype=np.int64)
    if tr["label_shuffle"]:
        labels = np.random.default_rng(cfg.seed).permutation(labels)

    grid_keys = [(metric, arch, band) for metric, band in cells for arch in archs]

    def run_one(key):
        metric, arch, band = key
        runs = run_cell(
            features_for(metric, band), labels, arch, cfg,
            n_runs=int(tr["n_runs"]), hidden_dim=int(tr["hidden_dim"]),
            dropout_p=float(tr["dropout"]),
        )
        return _cell_from_runs(metric, arch, band, runs)

    report = ExperimentReport(n_runs=int(tr["n_runs"]), train_config=cfg)
    if args.jobs > 1 and len(grid_keys) > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            for key, cell in zip(grid_keys, pool.map(run_one, grid_keys)):
                report.cells[key] = cell
    else:
        for key in grid_keys:
            report.cells[key] = run_one(key)

    out_dir = Path(args.out) if args.out else stack_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    report_path = out_dir / "report.json"
    report_path.write_text(report.to_json() + "\n")
    md_path = out_dir / "report.md"
    md_path.write_text(report.to_markdown())
    outputs = [report_path.name, md_path.name]
    ckpt_dir = out_dir / "checkpoints"
    for (metric, arch, band), cell in report.cells.items():
        model = cell.runs[0].model
        if model is not None:
            path = save_checkpoint(model, ckpt_dir / f"{metric}_{arch}_{band}")
            outputs.append(f"checkpoints/{path.name}")
    _write_manifest(out_dir, "train", config, [str(stack_dir)], outputs)
    for cell in report.cells.values():
        print(f"{cell.metric}/{cell.model}/{cell.band}: "
              f"{cell.accuracy_mean_pct:.2f} ± {cell.accuracy_std_pct:.2f} % "
              f"({cell.n_runs} runs)")
    print(f"wrote {report_path}")
    return 0


def cmd_evaluate(args) -> int:
    config = load_config(args.config)
    if args.dry_run:
        return _dry_run(config)
    stack_dir = Path(args.input)
    available = _available_cells(stack_dir)
    if not available:
        raise ValueError(f"no epochs found in {stack_dir}")
    model = load_checkpoint(args.checkpoint)
    metric, band = args.metric, args.band
    canonical = [b.name.value for b in CANONICAL_BANDS]
    if band == "total":
        x = np.stack([available[(metric, b)][0] for b in canonical], axis=1)
        meta = available[(metric, canonical[0])][1]
    else:
        if (metric, band) not in available:
            raise ValueError(f"no {metric}/{band} stack in {stack_dir}")
        stack, meta = available[(metric, band)]
        x = stack[:, np.newaxis]
    labels = np.asarray(meta["class_labels"], dtype=np.int64)
    logits = model.forward(x, train=False)
    pred = logits.value.argmax(axis=1)
    accuracy = float((pred == labels).mean()) * 100.0
    result = {
        "checkpoint": str(args.checkpoint),
        "metric": metric,
        "band": band,
        "n_trials": int(labels.size),
        "accuracy_pct": accuracy,
    }
    print(json.dumps(result, indent=2, sort_keys=True))
    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "evaluation.json").write_text(
            json.dumps(result, indent=2, sort_keys=True) + "\n")
        _write_manifest(out_dir, "evaluate", config, [str(stack_dir)], ["evaluation.json"])
    return 0


def cmd_stats(args) -> int:
    config = load_config(args.config)
    if args.dry_run:
        return _dry_run(config)
    csv_path = Path(args.input)
    if not csv_path.exists():
        raise FileNotFoundError(f"input CSV not found: {csv_path}")
    with open(csv_path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or len(header) < 2:
            raise ValueError("stats CSV needs a header row with >= 2 condition columns")
        rows = [[float(v) for v in row] for row in reader if row]
    if len(rows) < 2:
        raise ValueError("stats CSV needs >= 2 subject rows")
    data = {name: np.array([row[i] for row in rows]) for i, name in enumerate(header)}
    comparisons = []
    for a, b in combinations(header, 2):
        res = paired_ttest(data[a], data[b])
        comparisons.append({
            "a": a, "b": b, "t": res.t, "df": res.df, "p_two_tailed": res.p_two_tailed,
        })
    fdr = bh_fdr([c["p_two_tailed"] for c in comparisons], q=args.q)
    result = {
        "conditions": header,
        "n_subjects": len(rows),
        "q": args.q,
        "comparisons": comparisons,
        "fdr": {
            "adjusted_p": list(fdr.adjusted_p),
            "rejected": list(fdr.rejected),
        },
    }
    print(json.dumps(result, indent=2, sort_keys=True))
    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "stats.json").write_text(json.dumps(result, indent=2, sort_keys=True) + "\n")
        _write_manifest(out_dir, "stats", config, [str(csv_path)], ["stats.json"])
    return 0


def cmd_report(args) -> int:
    config = load_config(args.config)
    if args.dry_run:
        return _dry_run(config)
    report_path = Path(args.input)
    if report_path.is_dir():
        report_path = report_path / "report.json"
    if not report_path.exists():
        raise FileNotFoundError(f"report not found: {report_path}")
    payload = json.loads(report_path.read_text())
    report = ExperimentReport(n_runs=int(payload.get("n_runs", 0)))
    for cell in payload["cells"]:
        key = (cell["metric"], cell["model"], cell["band"])
        from .experiment import CellResult

        report.cells[key] = CellResult(
            metric=cell["metric"], model=cell["model"], band=cell["band"],
            accuracy_mean_pct=cell["accuracy_mean_pct"],
            accuracy_std_pct=cell["accuracy_std_pct"],
            n_runs=cell["n_runs"], runs=[],
        )
    markdown = report.to_markdown()
    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        md_path = out_dir / "report.md"
        md_path.write_text(markdown)
        _write_manifest(out_dir, "report", config, [str(report_path)], [md_path.name])
        print(f"wrote {md_path}")
    else:
        print(markdown, end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="neuroconn",
        description="Phase-connectivity EEG decoding pipeline",
    )
    parser.add_argument("--version", action="version", version=f"neuroconn {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser):
        p.add_argument("--config", help="JSON config file (or a run-manifest.json)")
        p.add_argument("--dry-run", action="store_true",
                       help="validate and print the resolved config, then exit")

    p = sub.add_parser("synth", help="generate a synthetic phase-coupled recording")
    common(p)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--classes", type=int, help="number of word classes")
    p.add_argument("--channels", type=int, help="number of channels")
    p.add_argument("--rate", type=float, help="sampling rate in Hz")
    p.add_argument("--epoch-seconds", dest="epoch_seconds", type=float)
    p.add_argument("--trials-per-class", dest="trials_per_class", type=int)
    p.add_argument("--snr-db", dest="snr_db", type=float, help="broadband noise SNR")
    p.add_argument("--band", help="coupling band name")
    p.add_argument("--strength", type=float, help="coupling strength in [0, 1]")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("preprocess", help="band-pass + notch filter a recording")
    common(p)
    p.add_argument("input", help="recording file or directory")
    p.add_argument("--out", help="output directory (default: alongside input)")
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("features", help="export band-power features to CSV")
    common(p)
    p.add_argument("input", help="recording file or directory")
    p.add_argument("--out", help="output directory (default: alongside input)")
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("connectivity", help="compute per-trial PLV/PLI stacks")
    common(p)
    p.add_argument("input", help="recording file or directory")
    p.add_argument("--out", help="output directory (default: alongside input)")
    p.add_argument("--metric", choices=["plv", "pli"])
    p.add_argument("--band", action="append",
                   help="band name (repeatable; default: all five)")
    p.add_argument("--signed-pli", dest="signed_pli", action="store_true",
                   help="debug: keep the sign of the PLI average")
    p.add_argument("--jobs", type=int, default=1, help="parallel trials")
    p.set_defaults(func=cmd_connectivity)

    p = sub.add_parser("train", help="train decoders over available feature cells")
    common(p)
    p.add_argument("input", help="directory with *.conn.f32 stacks")
    p.add_argument("--out", help="output directory (default: input dir)")
    p.add_argument("--arch", action="append",
                   choices=["eegnet_like", "shallow_like", "fbcnet_like"],
                   help="architecture (repeatable; default: all three)")
    p.add_argument("--lr", type=float)
    p.add_argument("--epochs", type=int)
    p.add_argument("--n-runs", dest="n_runs", type=int)
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--label-shuffle", dest="label_shuffle", action="store_true",
                   help="chance-level control: permute labels before splitting")
    p.add_argument("--jobs", type=int, default=1, help="parallel grid cells")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="evaluate a checkpoint on a feature stack")
    common(p)
    p.add_argument("input", help="directory with *.conn.f32 stacks")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--metric", required=True, choices=["plv", "pli"])
    p.add_argument("--band", required=True)
    p.add_argument("--out", help="optional output directory for evaluation.json")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("stats", help="paired t-tests + BH-FDR over a conditions CSV")
    common(p)
    p.add_argument("input", help="CSV: header = condition names, one row per subject")
    p.add_argument("--q", type=float, default=0.05, help="FDR level (default 0.05)")
    p.add_argument("--out", help="optional output directory for stats.json")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("report", help="render a report.json as a markdown table")
    common(p)
    p.add_argument("input", help="report.json (or directory containing it)")
    p.add_argument("--out", help="optional output directory for report.md")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ConfigError, ValueError, FileNotFoundError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entrypoint():
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
