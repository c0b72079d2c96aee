"""Fixed-shape labeled examples for classifier experiments.

A recording becomes a run of 2x1024 feature blocks. In the trajectory
representation each block holds the rolling dimension values of the I stream
(row 0) and the Q stream (row 1) over one contiguous slice of the recording;
the raw representation keeps 1024 I/Q samples verbatim. Both produce the
same shape so the two representations can feed identical models.

Example files are a one-line JSON header (counts and config provenance)
followed by fixed-size binary records, consumable without this package.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from fractalrf.core import DomainError, IQSignal, RandomSource, WindowConfig
from fractalrf.vfdt import VarianceMode, vfdt_trajectory

TRAJECTORY_LEN = 1024
FEATURE_SHAPE = (2, TRAJECTORY_LEN)
_LOCATION_BYTES = 16
_RECORD_DTYPE = np.dtype(
    [
        ("features", "<f4", FEATURE_SHAPE),
        ("device_label", "<u2"),
        ("location_label", f"S{_LOCATION_BYTES}"),
    ]
)

FILE_MAGIC = "fractalrf-examples"


class RecordingTooShortError(DomainError):
    """Recording cannot yield even one complete example."""


class TooFewExamplesError(DomainError):
    """A dataset split needs at least two examples."""


class ExampleFileError(DomainError):
    """An example file is malformed or truncated."""


class Representation(Enum):
    VFDT = "vfdt"
    RAWIQ = "rawiq"


@dataclass(frozen=True)
class FeatureConfig:
    """Trajectory extraction geometry.

    ``trajectory_len`` is pinned at 1024 windows per example so trajectory
    and raw blocks are shape-identical. Window length and offset are
    deliberately tunable; useful values depend on sample rate and signal
    stationarity, so they are recorded in every output for provenance.
    """

    window_len: int = 256
    window_offset: int = 64
    mode: VarianceMode = VarianceMode.AMPLITUDE

    def __post_init__(self):
        WindowConfig(self.window_len, self.window_offset)  # reuse invariant checks

    @property
    def trajectory_len(self) -> int:
        return TRAJECTORY_LEN

    @property
    def window(self) -> WindowConfig:
        return WindowConfig(self.window_len, self.window_offset)

    @property
    def samples_per_example(self) -> int:
        """Stream samples consumed by one example slice."""
        return self.window_len + (TRAJECTORY_LEN - 1) * self.window_offset


@dataclass(frozen=True)
class LabeledExample:
    """One 2x1024 feature block with device and location labels."""

    features: np.ndarray
    device_label: int
    location_label: str
    representation: Representation

    def __post_init__(self):
        feats = np.asarray(self.features, dtype=np.float64)
        if feats.shape != FEATURE_SHAPE:
            raise ValueError(f"features must be {FEATURE_SHAPE}, got {feats.shape}")
        if not np.isfinite(feats).all():
            raise ValueError("features contain non-finite values")
        object.__setattr__(self, "features", feats)


def n_examples(source_len: int, cfg: FeatureConfig) -> int:
    """How many trajectory examples a stream of ``source_len`` samples yields."""
    return source_len // cfg.samples_per_example


def make_examples(
    sig: IQSignal,
    device_label: int,
    location_label: str,
    cfg: FeatureConfig = FeatureConfig(),
) -> list[LabeledExample]:
    """Trajectory examples from contiguous non-overlapping recording slices.

    Each slice spans exactly the samples needed for 1024 windows; the I and
    Q streams are analyzed with identical geometry and stacked as rows.

    Raises:
        RecordingTooShortError: fewer samples than one slice.
        DegenerateWindowError: a constant window inside some slice.
    """
    span = cfg.samples_per_example
    count = n_examples(sig.n_samples, cfg)
    if count == 0:
        raise RecordingTooShortError(
            f"recording of {sig.n_samples} samples is shorter than one "
            f"{span}-sample example slice"
        )
    out = []
    for e in range(count):
        sl = slice(e * span, (e + 1) * span)
        rows = np.empty(FEATURE_SHAPE)
        rows[0] = vfdt_trajectory(sig.i_samples[sl], cfg.window, cfg.mode).values
        rows[1] = vfdt_trajectory(sig.q_samples[sl], cfg.window, cfg.mode).values
        out.append(
            LabeledExample(rows, device_label, location_label, Representation.VFDT)
        )
    return out


def make_raw_examples(
    sig: IQSignal, device_label: int, location_label: str
) -> list[LabeledExample]:
    """Raw-sample examples: consecutive non-overlapping 1024-sample slices.

    Raises:
        RecordingTooShortError: fewer than 1024 samples.
    """
    count = sig.n_samples // TRAJECTORY_LEN
    if count == 0:
        raise RecordingTooShortError(
            f"recording of {sig.n_samples} samples is shorter than {TRAJECTORY_LEN}"
        )
    out = []
    for e in range(count):
        sl = slice(e * TRAJECTORY_LEN, (e + 1) * TRAJECTORY_LEN)
        rows = np.stack([sig.i_samples[sl], sig.q_samples[sl]])
        out.append(
            LabeledExample(rows, device_label, location_label, Representation.RAWIQ)
        )
    return out


def split_dataset(
    examples: list[LabeledExample], train_fraction: float, rng: RandomSource
) -> tuple[list[LabeledExample], list[LabeledExample]]:
    """Per-device stratified shuffle split into disjoint train/test sets.

    Every device's examples are shuffled and cut at
    ``round(train_fraction * n)``, so per-class ratios deviate from the
    target by at most one example.

    Raises:
        TooFewExamplesError: fewer than two examples in total.
    """
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train_fraction must be in (0, 1), got {train_fraction}")
    if len(examples) < 2:
        raise TooFewExamplesError(f"need >= 2 examples to split, got {len(examples)}")
    by_device: dict[int, list[int]] = {}
    for idx, ex in enumerate(examples):
        by_device.setdefault(ex.device_label, []).append(idx)
    gen = rng.generator()
    train_idx: list[int] = []
    test_idx: list[int] = []
    for device in sorted(by_device):
        idxs = np.array(by_device[device])
        gen.shuffle(idxs)
        # Round half up, so a 0.5 fraction of a lone pair gives one each.
        cut = int(math.floor(train_fraction * idxs.size + 0.5))
        train_idx.extend(idxs[:cut].tolist())
        test_idx.extend(idxs[cut:].tolist())
    return [examples[i] for i in sorted(train_idx)], [examples[i] for i in sorted(test_idx)]


def write_examples(examples: list[LabeledExample], path, cfg: FeatureConfig | None = None) -> None:
    """Write a header line plus fixed-size binary records.

    Record layout: 2048 LE float32 features, LE uint16 device label, then a
    16-byte NUL-padded location label.
    """
    if not examples:
        raise ValueError("refusing to write an empty example file")
    reps = {ex.representation for ex in examples}
    if len(reps) != 1:
        raise ValueError("example files hold exactly one representation")
    rep = reps.pop()
    header = {
        "magic": FILE_MAGIC,
        "format_version": 1,
        "n_examples": len(examples),
        "representation": rep.value,
        "feature_shape": list(FEATURE_SHAPE),
        "dtype": "float32-le",
        "record_bytes": _RECORD_DTYPE.itemsize,
        "location_bytes": _LOCATION_BYTES,
    }
    if cfg is not None:
        header["window_len"] = cfg.window_len
        header["window_offset"] = cfg.window_offset
        header["mode"] = cfg.mode.value
    records = np.empty(len(examples), dtype=_RECORD_DTYPE)
    for i, ex in enumerate(examples):
        if not 0 <= ex.device_label < 2**16:
            raise ValueError(f"device_label {ex.device_label} does not fit uint16")
        records[i]["features"] = ex.features.astype("<f4")
        records[i]["device_label"] = ex.device_label
        records[i]["location_label"] = ex.location_label.encode()[:_LOCATION_BYTES]
    path = Path(path)
    with path.open("wb") as fh:
        fh.write((json.dumps(header, sort_keys=True) + "\n").encode())
        fh.write(records.tobytes())


def read_examples(path) -> tuple[list[LabeledExample], dict]:
    """Read an example file back; returns (examples, header).

    Raises:
        ExampleFileError: bad header, wrong magic, or truncated records.
    """
    path = Path(path)
    with path.open("rb") as fh:
        header_line = fh.readline()
        blob = fh.read()
    try:
        header = json.loads(header_line.decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ExampleFileError(f"{path}: unreadable header: {exc}") from exc
    if header.get("magic") != FILE_MAGIC:
        raise ExampleFileError(f"{path}: not an example file (magic={header.get('magic')!r})")
    expected = header["n_examples"] * _RECORD_DTYPE.itemsize
    if len(blob) != expected:
        raise ExampleFileError(
            f"{path}: payload of {len(blob)} bytes, header promises {expected}"
        )
    records = np.frombuffer(blob, dtype=_RECORD_DTYPE)
    rep = Representation(header["representation"])
    examples = [
        LabeledExample(
            rec["features"].astype(np.float64),
            int(rec["device_label"]),
            rec["location_label"].decode().rstrip("\x00"),
            rep,
        )
        for rec in records
    ]
    return examples, header
