"""Self-contained classifiers and metrics for the fingerprinting experiments.

Three desk-scale models stand in for heavyweight deep networks: a
nearest-centroid baseline, a softmax linear probe, and a one-hidden-layer
leaky-ReLU network, the latter two trained by mini-batch gradient descent on
flattened, per-dimension standardized features. The experiments here compare
*representations*, so a probe that exposes the separability gap is the right
instrument; exact deep architectures live elsewhere.

Analytic gradients are verified against central finite differences by
:func:`gradient_check`; training is deterministic given the seed.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from fractalrf.core import DomainError, RandomSource
from fractalrf.features import LabeledExample

LEAKY_SLOPE = 0.01
DEFAULT_HIDDEN = 128
DEFAULT_BATCH = 32
FD_STEP = 1e-5
# Central differences resolve the loss to roughly eps/(2*FD_STEP) ~ 5e-10;
# gradients below this floor are compared against the floor itself so
# roundoff on near-zero entries cannot dominate the relative error.
FD_DENOM_FLOOR = 1e-5
# Cap per-array finite-difference probes; each costs two full loss passes.
FD_MAX_PER_ARRAY = 512


class EmptyClassError(DomainError):
    """Some class index has no training examples."""


class NonFiniteLossError(DomainError):
    """Training diverged (loss became NaN/Inf); lower the learning rate."""


class ShapeMismatchError(DomainError):
    """Example feature size does not match the model's input dimension."""


class EmptyTestSetError(DomainError):
    """Evaluation needs at least one example."""


class ModelKind(Enum):
    NEAREST_CENTROID = "nearest_centroid"
    SOFTMAX = "softmax"
    MLP1 = "mlp1"


@dataclass(frozen=True)
class TrainingMeta:
    epochs: int
    learning_rate: float
    seed: int
    batch_size: int
    hidden_units: int


@dataclass
class ClassifierModel:
    kind: ModelKind
    n_classes: int
    input_dim: int
    weights: dict[str, np.ndarray]
    feature_mean: np.ndarray
    feature_scale: np.ndarray
    training_meta: TrainingMeta

    def standardize(self, flat: np.ndarray) -> np.ndarray:
        return (flat - self.feature_mean) / self.feature_scale


def _flatten(examples: list[LabeledExample]) -> tuple[np.ndarray, np.ndarray, list[str]]:
    x = np.stack([ex.features.reshape(-1) for ex in examples])
    y = np.array([ex.device_label for ex in examples], dtype=np.int64)
    locs = [ex.location_label for ex in examples]
    return x, y, locs


def _standardization(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mean = x.mean(axis=0)
    std = x.std(axis=0)
    # Constant dimensions (e.g. idle-signal rows) standardize to zero
    # rather than exploding; a unit scale does exactly that.
    scale = np.where(std == 0.0, 1.0, std)
    return mean, scale


def _leaky(z: np.ndarray) -> np.ndarray:
    return np.where(z > 0, z, LEAKY_SLOPE * z)


def _leaky_grad(z: np.ndarray) -> np.ndarray:
    return np.where(z > 0, 1.0, LEAKY_SLOPE)


def _logits(model: ClassifierModel, xs: np.ndarray) -> np.ndarray:
    w = model.weights
    if model.kind is ModelKind.SOFTMAX:
        return xs @ w["w"] + w["b"]
    if model.kind is ModelKind.MLP1:
        hidden = _leaky(xs @ w["w1"] + w["b1"])
        return hidden @ w["w2"] + w["b2"]
    raise ValueError(f"{model.kind} has no logits")


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def batch_loss(model: ClassifierModel, xs: np.ndarray, y: np.ndarray) -> float:
    """Mean cross-entropy of a standardized batch."""
    return float(-_log_softmax(_logits(model, xs))[np.arange(y.size), y].mean())


def _loss_and_grads(
    model: ClassifierModel, xs: np.ndarray, y: np.ndarray
) -> tuple[float, dict[str, np.ndarray]]:
    n = y.size
    w = model.weights
    onehot_rows = np.arange(n)
    if model.kind is ModelKind.SOFTMAX:
        logits = xs @ w["w"] + w["b"]
        logp = _log_softmax(logits)
        p = np.exp(logp)
        p[onehot_rows, y] -= 1.0
        p /= n
        return float(-logp[onehot_rows, y].mean()), {
            "w": xs.T @ p,
            "b": p.sum(axis=0),
        }
    if model.kind is ModelKind.MLP1:
        z1 = xs @ w["w1"] + w["b1"]
        h = _leaky(z1)
        logits = h @ w["w2"] + w["b2"]
        logp = _log_softmax(logits)
        p = np.exp(logp)
        p[onehot_rows, y] -= 1.0
        p /= n
        dh = p @ w["w2"].T
        dz1 = dh * _leaky_grad(z1)
        return float(-logp[onehot_rows, y].mean()), {
            "w1": xs.T @ dz1,
            "b1": dz1.sum(axis=0),
            "w2": h.T @ p,
            "b2": p.sum(axis=0),
        }
    raise ValueError(f"{model.kind} is not trained by gradient descent")


def _init_weights(
    kind: ModelKind, input_dim: int, n_classes: int, hidden: int, rng: RandomSource
) -> dict[str, np.ndarray]:
    if kind is ModelKind.SOFTMAX:
        return {"w": np.zeros((input_dim, n_classes)), "b": np.zeros(n_classes)}
    gen = rng.generator()
    # First layer gets small random weights to break symmetry; the zero
    # output layer keeps the initial loss at exactly log(n_classes).
    return {
        "w1": gen.standard_normal((input_dim, hidden)) / math.sqrt(input_dim),
        "b1": np.zeros(hidden),
        "w2": np.zeros((hidden, n_classes)),
        "b2": np.zeros(n_classes),
    }


def train(
    kind: ModelKind,
    train_set: list[LabeledExample],
    epochs: int = 30,
    learning_rate: float = 0.1,
    rng: RandomSource = RandomSource(0),
    batch_size: int = DEFAULT_BATCH,
    hidden_units: int = DEFAULT_HIDDEN,
    n_classes: int | None = None,
) -> ClassifierModel:
    """Fit a model; deterministic given the RandomSource.

    Nearest-centroid stores per-class raw-feature means. The gradient models
    minimize cross-entropy over standardized features with plain mini-batch
    gradient descent.

    Raises:
        EmptyClassError: a class index in range has no examples.
        NonFiniteLossError: divergence (learning rate too high).
    """
    if epochs < 1:
        raise ValueError(f"epochs must be >= 1, got {epochs}")
    if learning_rate <= 0:
        raise ValueError(f"learning_rate must be > 0, got {learning_rate}")
    if not train_set:
        raise EmptyClassError("empty training set")
    x, y, _ = _flatten(train_set)
    input_dim = x.shape[1]
    if n_classes is None:
        n_classes = int(y.max()) + 1
    if n_classes < 2:
        raise ValueError(f"need >= 2 classes, got {n_classes}")
    counts = np.bincount(y, minlength=n_classes)
    missing = np.flatnonzero(counts == 0)
    if missing.size:
        raise EmptyClassError(f"no training examples for classes {missing.tolist()}")

    meta = TrainingMeta(epochs, learning_rate, rng.seed, batch_size, hidden_units)

    if kind is ModelKind.NEAREST_CENTROID:
        centroids = np.stack([x[y == c].mean(axis=0) for c in range(n_classes)])
        return ClassifierModel(
            kind, n_classes, input_dim,
            {"centroids": centroids},
            feature_mean=np.zeros(input_dim), feature_scale=np.ones(input_dim),
            training_meta=meta,
        )

    mean, scale = _standardization(x)
    xs = (x - mean) / scale
    model = ClassifierModel(
        kind, n_classes, input_dim,
        _init_weights(kind, input_dim, n_classes, hidden_units, rng.child(0)),
        feature_mean=mean, feature_scale=scale, training_meta=meta,
    )
    gen = rng.child(1).generator()
    n = y.size
    for epoch in range(epochs):
        order = gen.permutation(n)
        for start in range(0, n, batch_size):
            batch = order[start : start + batch_size]
            loss, grads = _loss_and_grads(model, xs[batch], y[batch])
            if not math.isfinite(loss):
                raise NonFiniteLossError(
                    f"loss became {loss} in epoch {epoch}; reduce learning_rate"
                )
            for name, g in grads.items():
                model.weights[name] -= learning_rate * g
    final = batch_loss(model, xs, y)
    if not math.isfinite(final):
        raise NonFiniteLossError("final loss is not finite; reduce learning_rate")
    return model


def _scores(model: ClassifierModel, flat: np.ndarray) -> np.ndarray:
    if flat.shape[1] != model.input_dim:
        raise ShapeMismatchError(
            f"model expects {model.input_dim} features, got {flat.shape[1]}"
        )
    if model.kind is ModelKind.NEAREST_CENTROID:
        diff = flat[:, None, :] - model.weights["centroids"][None, :, :]
        return -np.sqrt((diff**2).sum(axis=2))
    return _logits(model, model.standardize(flat))


def predict(model: ClassifierModel, example: LabeledExample) -> int:
    """Class index with the highest score; ties go to the lowest index."""
    flat = example.features.reshape(1, -1)
    return int(np.argmax(_scores(model, flat), axis=1)[0])


@dataclass(frozen=True)
class EvalReport:
    accuracy: float
    confusion: np.ndarray
    per_location: dict[str, float]

    def __post_init__(self):
        object.__setattr__(self, "confusion", np.asarray(self.confusion, dtype=np.int64))


def evaluate(model: ClassifierModel, test_set: list[LabeledExample]) -> EvalReport:
    """Accuracy, confusion matrix (rows=true, cols=predicted), per-location accuracy.

    Raises:
        EmptyTestSetError: nothing to evaluate.
    """
    if not test_set:
        raise EmptyTestSetError("empty test set")
    flat, y, locs = _flatten(test_set)
    pred = np.argmax(_scores(model, flat), axis=1)
    confusion = np.zeros((model.n_classes, model.n_classes), dtype=np.int64)
    np.add.at(confusion, (y, pred), 1)
    accuracy = float(np.trace(confusion) / y.size)
    per_location: dict[str, float] = {}
    for loc in sorted(set(locs)):
        mask = np.array([l == loc for l in locs])
        per_location[loc] = float((pred[mask] == y[mask]).mean())
    return EvalReport(accuracy, confusion, per_location)


@dataclass(frozen=True)
class GradientCheckReport:
    kind: ModelKind
    n_checked: int
    max_relative_error: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_relative_error < self.tolerance


def gradient_check(
    kind: ModelKind,
    batch: list[LabeledExample],
    tolerance: float = 1e-4,
    rng: RandomSource = RandomSource(0),
    hidden_units: int = DEFAULT_HIDDEN,
) -> GradientCheckReport:
    """Analytic gradients versus central finite differences.

    Initializes a model with random nonzero weights, computes analytic
    gradients on the standardized batch, then perturbs a random 1% subsample
    of individual weights (at least 50 and at most 512 per array) by
    +/-1e-5 and compares.
    """
    if kind is ModelKind.NEAREST_CENTROID:
        raise ValueError("nearest centroid has no gradients to check")
    x, y, _ = _flatten(batch)
    n_classes = int(y.max()) + 1
    input_dim = x.shape[1]
    mean, scale = _standardization(x)
    xs = (x - mean) / scale
    gen = rng.generator()
    weights = _init_weights(kind, input_dim, n_classes, hidden_units, rng.child(0))
    for name in weights:
        weights[name] = gen.standard_normal(weights[name].shape) * 0.1
    model = ClassifierModel(
        kind, n_classes, input_dim, weights,
        feature_mean=mean, feature_scale=scale,
        training_meta=TrainingMeta(0, 0.0, rng.seed, 0, hidden_units),
    )
    _, grads = _loss_and_grads(model, xs, y)
    max_rel = 0.0
    n_checked = 0
    for name in sorted(weights):
        arr = weights[name]
        k = min(max(50, int(0.01 * arr.size)), FD_MAX_PER_ARRAY, arr.size)
        flat_idx = gen.choice(arr.size, size=k, replace=False)
        for idx in flat_idx:
            pos = np.unravel_index(idx, arr.shape)
            orig = arr[pos]
            arr[pos] = orig + FD_STEP
            up = batch_loss(model, xs, y)
            arr[pos] = orig - FD_STEP
            down = batch_loss(model, xs, y)
            arr[pos] = orig
            numeric = (up - down) / (2 * FD_STEP)
            analytic = grads[name][pos]
            denom = max(abs(numeric), abs(analytic), FD_DENOM_FLOOR)
            max_rel = max(max_rel, abs(numeric - analytic) / denom)
            n_checked += 1
    return GradientCheckReport(kind, n_checked, max_rel, tolerance)


# --- persistence -----------------------------------------------------------

_ARRAY_ORDER = {
    ModelKind.NEAREST_CENTROID: ["centroids"],
    ModelKind.SOFTMAX: ["w", "b"],
    ModelKind.MLP1: ["w1", "b1", "w2", "b2"],
}


def save_checkpoint(model: ClassifierModel, path) -> None:
    """JSON header line + little-endian float32 payload of all arrays."""
    arrays = [("feature_mean", model.feature_mean), ("feature_scale", model.feature_scale)]
    arrays += [(n, model.weights[n]) for n in _ARRAY_ORDER[model.kind]]
    header = {
        "kind": model.kind.value,
        "n_classes": model.n_classes,
        "input_dim": model.input_dim,
        "training_meta": asdict(model.training_meta),
        "arrays": [{"name": n, "shape": list(a.shape)} for n, a in arrays],
        "dtype": "float32-le",
    }
    with Path(path).open("wb") as fh:
        fh.write((json.dumps(header, sort_keys=True) + "\n").encode())
        for _, a in arrays:
            fh.write(a.astype("<f4").tobytes())


def load_checkpoint(path) -> ClassifierModel:
    with Path(path).open("rb") as fh:
        header = json.loads(fh.readline().decode())
        blob = fh.read()
    kind = ModelKind(header["kind"])
    cursor = 0
    loaded: dict[str, np.ndarray] = {}
    for spec in header["arrays"]:
        count = int(np.prod(spec["shape"]))
        arr = np.frombuffer(blob, dtype="<f4", count=count, offset=cursor)
        loaded[spec["name"]] = arr.reshape(spec["shape"]).astype(np.float64)
        cursor += count * 4
    meta = TrainingMeta(**header["training_meta"])
    weights = {n: loaded[n] for n in _ARRAY_ORDER[kind]}
    return ClassifierModel(
        kind, header["n_classes"], header["input_dim"], weights,
        feature_mean=loaded["feature_mean"], feature_scale=loaded["feature_scale"],
        training_meta=meta,
    )


def report_to_json(report: EvalReport, path) -> None:
    payload = {
        "accuracy": report.accuracy,
        "n_classes": int(report.confusion.shape[0]),
        "confusion": report.confusion.tolist(),
        "per_location": report.per_location,
    }
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def report_to_csv(report: EvalReport, path) -> None:
    """Confusion matrix as an n x n grid with true-class rows."""
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        n = report.confusion.shape[0]
        writer.writerow(["true\\pred"] + [str(c) for c in range(n)])
        for c in range(n):
            writer.writerow([str(c)] + [str(v) for v in report.confusion[c]])
