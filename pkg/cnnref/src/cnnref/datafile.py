"""Reader for the fingerprint example-file format.

The format is one UTF-8 JSON header line followed by fixed-size binary
records: 2048 little-endian float32 features (a 2x1024 block), a
little-endian uint16 device label, and a 16-byte NUL-padded location label.
This module implements the format from its published layout and shares no
code with the producer.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

EXPECTED_MAGIC = "fractalrf-examples"
FEATURE_SHAPE = (2, 1024)
LOCATION_BYTES = 16
RECORD_DTYPE = np.dtype(
    [
        ("features", "<f4", FEATURE_SHAPE),
        ("device_label", "<u2"),
        ("location_label", f"S{LOCATION_BYTES}"),
    ]
)


class FileFormatMismatchError(Exception):
    """The file does not follow the example-record layout."""


@dataclass(frozen=True)
class ExampleSet:
    """Features plus labels, ready to tensorize."""

    features: np.ndarray  # (n, 2, 1024) float32
    device_labels: np.ndarray  # (n,) int64
    location_labels: list[str]
    header: dict

    def __len__(self) -> int:
        return int(self.features.shape[0])

    @property
    def n_classes(self) -> int:
        return int(self.device_labels.max()) + 1

    def locations(self) -> list[str]:
        return sorted(set(self.location_labels))

    def subset(self, mask: np.ndarray) -> "ExampleSet":
        idx = np.flatnonzero(mask)
        return ExampleSet(
            self.features[idx],
            self.device_labels[idx],
            [self.location_labels[i] for i in idx],
            self.header,
        )


def load_examples(path) -> ExampleSet:
    """Parse an example file, validating the header against the payload.

    Raises:
        FileFormatMismatchError: missing/garbled header, wrong magic, or a
            payload that is not exactly the promised number of records.
    """
    path = Path(path)
    with path.open("rb") as fh:
        header_line = fh.readline()
        payload = fh.read()
    try:
        header = json.loads(header_line.decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FileFormatMismatchError(f"{path}: unreadable header: {exc}") from exc
    if header.get("magic") != EXPECTED_MAGIC:
        raise FileFormatMismatchError(
            f"{path}: magic {header.get('magic')!r}, expected {EXPECTED_MAGIC!r}"
        )
    if header.get("record_bytes") != RECORD_DTYPE.itemsize:
        raise FileFormatMismatchError(
            f"{path}: record size {header.get('record_bytes')} does not match "
            f"the {RECORD_DTYPE.itemsize}-byte layout this reader implements"
        )
    n = int(header.get("n_examples", -1))
    if n < 1 or len(payload) != n * RECORD_DTYPE.itemsize:
        raise FileFormatMismatchError(
            f"{path}: payload holds {len(payload)} bytes, header promises "
            f"{n} x {RECORD_DTYPE.itemsize}"
        )
    records = np.frombuffer(payload, dtype=RECORD_DTYPE)
    return ExampleSet(
        features=np.ascontiguousarray(records["features"], dtype=np.float32),
        device_labels=records["device_label"].astype(np.int64),
        location_labels=[s.decode().rstrip("\x00") for s in records["location_label"]],
        header=header,
    )
