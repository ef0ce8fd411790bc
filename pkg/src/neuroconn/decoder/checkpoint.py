"""Parameter checkpoints: flat float32 binary + JSON manifest.

The manifest records the decoder spec, the init seed, and for every
parameter and buffer its offset (in float32 elements) and shape inside the
binary, so a checkpoint is self-describing.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .models import Architecture, DecoderSpec, InputLayout, Model, Task, build_model

CHECKPOINT_SUFFIX = ".ckpt.f32"
MANIFEST_SUFFIX = ".ckpt.json"


def _paths(path: str | Path) -> tuple[Path, Path]:
    p = Path(path)
    name = p.name
    for suffix in (CHECKPOINT_SUFFIX, MANIFEST_SUFFIX):
        if name.endswith(suffix):
            name = name[: -len(suffix)]
            break
    return p.with_name(name + CHECKPOINT_SUFFIX), p.with_name(name + MANIFEST_SUFFIX)


def save_checkpoint(model: Model, path: str | Path) -> Path:
    bin_path, man_path = _paths(path)
    bin_path.parent.mkdir(parents=True, exist_ok=True)
    entries: dict[str, dict] = {}
    chunks: list[np.ndarray] = []
    offset = 0

    def push(section: str, name: str, value: np.ndarray):
        nonlocal offset
        entries.setdefault(section, {})[name] = {
            "offset": offset,
            "shape": list(value.shape),
        }
        flat = np.ascontiguousarray(value, dtype="<f4").reshape(-1)
        chunks.append(flat)
        offset += flat.size

    for name, p in model.params.items():
        push("parameters", name, p.value)
    for name, b in model.buffers.items():
        push("buffers", name, b)
    np.concatenate(chunks).tofile(bin_path)
    spec = model.spec
    manifest = {
        "architecture": spec.architecture.value,
        "n_classes": spec.n_classes,
        "input_layout": {
            "n_bands": spec.input_layout.n_bands,
            "n_channels": spec.input_layout.n_channels,
            "n_cols": spec.input_layout.n_cols,
        },
        "hidden_dim": spec.hidden_dim,
        "dropout_p": spec.dropout_p,
        "task": spec.task.value,
        "seed": model.seed,
        "parameters": entries.get("parameters", {}),
        "buffers": entries.get("buffers", {}),
    }
    man_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return bin_path


def load_checkpoint(path: str | Path) -> Model:
    bin_path, man_path = _paths(path)
    if not man_path.exists():
        raise FileNotFoundError(f"missing checkpoint manifest: {man_path}")
    manifest = json.loads(man_path.read_text())
    spec = DecoderSpec(
        architecture=Architecture(manifest["architecture"]),
        n_classes=int(manifest["n_classes"]),
        input_layout=InputLayout(**manifest["input_layout"]),
        hidden_dim=int(manifest["hidden_dim"]),
        dropout_p=float(manifest["dropout_p"]),
        task=Task(manifest["task"]),
    )
    model = build_model(spec, int(manifest["seed"]))
    flat = np.fromfile(bin_path, dtype="<f4").astype(np.float64)

    def pull(entry) -> np.ndarray:
        start = int(entry["offset"])
        size = int(np.prod(entry["shape"])) if entry["shape"] else 1
        return flat[start : start + size].reshape(entry["shape"])

    model.load_param_values({n: pull(e) for n, e in manifest["parameters"].items()})
    model.load_buffer_values({n: pull(e) for n, e in manifest["buffers"].items()})
    return model
