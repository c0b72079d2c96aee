"""Training and evaluation on fingerprint example files.

Training follows the primary experiments' protocol: a per-device stratified
90/10 split on the training locations, 30 epochs, and per-location
evaluation. Reports use the same JSON/CSV schema as the lightweight
evaluator (accuracy, n_classes, confusion, per_location), so downstream
plot tooling works unchanged.

Optimizer configuration is fixed (Adam, 1e-3, batch 32) and recorded in the
checkpoint header. Determinism is best effort: seeds are set and
deterministic kernels requested, which is stable on CPU.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np
import torch
from torch import nn

from cnnref.datafile import ExampleSet, load_examples
from cnnref.model import build_model, config_header

LEARNING_RATE = 1e-3
BATCH_SIZE = 32
DEFAULT_EPOCHS = 30
TRAIN_FRACTION = 0.9


def _seed_everything(seed: int) -> None:
    torch.manual_seed(seed)
    np.random.seed(seed % 2**32)
    torch.use_deterministic_algorithms(True, warn_only=True)


def _stratified_split(labels: np.ndarray, fraction: float, rng: np.random.Generator):
    train_idx, test_idx = [], []
    for device in np.unique(labels):
        idx = np.flatnonzero(labels == device)
        rng.shuffle(idx)
        cut = int(np.floor(fraction * idx.size + 0.5))
        train_idx.extend(idx[:cut])
        test_idx.extend(idx[cut:])
    return np.array(sorted(train_idx)), np.array(sorted(test_idx))


def _normalization(features: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # Per-row (I row / Q row) statistics over the training set.
    mean = features.mean(axis=(0, 2), keepdims=True)
    std = features.std(axis=(0, 2), keepdims=True)
    std[std == 0] = 1.0
    return mean, std


def _evaluate(model, features, labels, locations, n_classes, mean, std):
    model.eval()
    confusion = np.zeros((n_classes, n_classes), dtype=np.int64)
    preds = np.empty(labels.size, dtype=np.int64)
    with torch.no_grad():
        for start in range(0, labels.size, 256):
            stop = min(start + 256, labels.size)
            batch = torch.from_numpy((features[start:stop] - mean) / std)
            preds[start:stop] = model(batch).argmax(dim=1).numpy()
    np.add.at(confusion, (labels, preds), 1)
    per_location = {}
    loc_arr = np.array(locations)
    for loc in sorted(set(locations)):
        mask = loc_arr == loc
        per_location[loc] = float((preds[mask] == labels[mask]).mean())
    return {
        "accuracy": float(np.trace(confusion) / labels.size),
        "n_classes": int(n_classes),
        "confusion": confusion.tolist(),
        "per_location": per_location,
    }


def train_cnn(
    examples_path,
    out_dir,
    train_locations: tuple[str, ...] = ("loc1",),
    epochs: int = DEFAULT_EPOCHS,
    seed: int = 0,
) -> dict:
    """Train on the given locations' examples, evaluate everywhere.

    Writes `checkpoint.pt`, `report.json`, and `confusion.csv` under
    ``out_dir`` and returns the report payload (augmented with the held-out
    same-location and pooled cross-location accuracy).
    """
    _seed_everything(seed)
    data = load_examples(examples_path)
    n_classes = data.n_classes
    loc_arr = np.array(data.location_labels)
    in_train_loc = np.isin(loc_arr, train_locations)
    pool = data.subset(in_train_loc)

    rng = np.random.default_rng(seed)
    train_idx, held_idx = _stratified_split(pool.device_labels, TRAIN_FRACTION, rng)
    train_set = pool.subset(np.isin(np.arange(len(pool)), train_idx))
    held_set = pool.subset(np.isin(np.arange(len(pool)), held_idx))

    mean, std = _normalization(train_set.features)
    model = build_model(n_classes)
    optimizer = torch.optim.Adam(model.parameters(), lr=LEARNING_RATE)
    loss_fn = nn.CrossEntropyLoss()

    x_train = torch.from_numpy((train_set.features - mean) / std)
    y_train = torch.from_numpy(train_set.device_labels)
    n = len(train_set)
    model.train()
    for _ in range(epochs):
        order = torch.randperm(n)
        for start in range(0, n, BATCH_SIZE):
            batch = order[start : start + BATCH_SIZE]
            optimizer.zero_grad()
            loss = loss_fn(model(x_train[batch]), y_train[batch])
            loss.backward()
            optimizer.step()

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    # Held-out same-location rows plus every non-training location in full.
    eval_features = [held_set.features]
    eval_labels = [held_set.device_labels]
    eval_locs = list(held_set.location_labels)
    other = data.subset(~in_train_loc)
    if len(other):
        eval_features.append(other.features)
        eval_labels.append(other.device_labels)
        eval_locs.extend(other.location_labels)
    report = _evaluate(
        model,
        np.concatenate(eval_features),
        np.concatenate(eval_labels),
        eval_locs,
        n_classes,
        mean,
        std,
    )
    same = float(np.mean([report["per_location"][l] for l in train_locations]))
    cross_locs = [l for l in report["per_location"] if l not in train_locations]
    cross = float(np.mean([report["per_location"][l] for l in cross_locs])) if cross_locs else float("nan")
    report["same_location_accuracy"] = same
    report["cross_location_accuracy"] = cross
    report["train_locations"] = list(train_locations)
    report["representation"] = data.header.get("representation", "unknown")

    header = config_header(
        model,
        optimizer="adam", learning_rate=LEARNING_RATE, batch_size=BATCH_SIZE,
        epochs=epochs, seed=seed, train_fraction=TRAIN_FRACTION,
        train_locations=list(train_locations),
        normalization={"mean": mean.ravel().tolist(), "std": std.ravel().tolist()},
    )
    torch.save({"header": header, "state_dict": model.state_dict()},
               out_dir / "checkpoint.pt")
    (out_dir / "report.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    with (out_dir / "confusion.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["true\\pred"] + [str(c) for c in range(n_classes)])
        for c in range(n_classes):
            writer.writerow([str(c)] + [str(v) for v in report["confusion"][c]])
    return report
