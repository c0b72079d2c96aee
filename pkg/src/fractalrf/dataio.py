"""Raw IQ recordings on disk, SDR capture style, with JSON label sidecars.

The on-disk sample format is the de facto SDR interchange layout: interleaved
little-endian float32 pairs I0,Q0,I1,Q1,... with no header. Labels and
capture settings that the raw format cannot carry live in a versioned JSON
sidecar next to each recording; a manifest indexes a directory of pairs.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from fractalrf.core import DomainError, IQSignal

FORMAT_VERSION = 1
IQ_SUFFIX = ".iq"
SIDECAR_SUFFIX = ".iq.json"
MANIFEST_NAME = "manifest.json"

# Capture defaults applied when a sidecar is absent: 45 MS/s at 2.412 GHz,
# the common WiFi-band USRP configuration these files typically come from.
DEFAULT_SAMPLE_RATE_HZ = 45e6
DEFAULT_CENTER_FREQ_HZ = 2.412e9


class IoFailureError(DomainError):
    """Filesystem-level read/write failure."""


class OddFloatCountError(DomainError):
    """File size is not a whole number of float32 I/Q pairs."""


class BadSidecarError(DomainError):
    """Sidecar exists but is not valid JSON or lacks required fields."""


class DuplicatePairError(DomainError):
    """Two recordings claim the same (device_id, location_id)."""


class DanglingSidecarError(DomainError):
    """A sidecar has no matching .iq payload file."""


@dataclass(frozen=True)
class RecordingMeta:
    """Labels and capture settings for one recording."""

    device_id: str
    location_id: str
    sample_rate_hz: float = DEFAULT_SAMPLE_RATE_HZ
    center_freq_hz: float = DEFAULT_CENTER_FREQ_HZ
    capture_notes: str = ""
    format_version: int = FORMAT_VERSION

    def __post_init__(self):
        if not self.device_id:
            raise ValueError("device_id must be nonempty")
        if not self.location_id:
            raise ValueError("location_id must be nonempty")
        if self.sample_rate_hz <= 0:
            raise ValueError(f"sample_rate_hz must be > 0, got {self.sample_rate_hz}")


@dataclass(frozen=True)
class Corpus:
    """A validated directory of recordings plus the manifest that indexes it."""

    recordings: tuple[tuple[RecordingMeta, Path], ...]
    manifest_path: Path

    def __len__(self) -> int:
        return len(self.recordings)


def write_iq(sig: IQSignal, meta: RecordingMeta, path) -> None:
    """Write interleaved LE float32 I/Q pairs plus a `<path>.json` sidecar."""
    path = Path(path)
    interleaved = np.empty(2 * sig.n_samples, dtype="<f4")
    interleaved[0::2] = sig.i_samples
    interleaved[1::2] = sig.q_samples
    try:
        path.write_bytes(interleaved.tobytes())
        sidecar = dict(asdict(meta), sample_rate_hz=sig.sample_rate_hz)
        Path(str(path) + ".json").write_text(json.dumps(sidecar, indent=2) + "\n")
    except OSError as exc:
        raise IoFailureError(f"cannot write {path}: {exc}") from exc


def _read_sidecar(sidecar_path: Path) -> RecordingMeta:
    try:
        raw = json.loads(sidecar_path.read_text())
    except json.JSONDecodeError as exc:
        raise BadSidecarError(f"{sidecar_path} is not valid JSON: {exc}") from exc
    except OSError as exc:
        raise IoFailureError(f"cannot read {sidecar_path}: {exc}") from exc
    try:
        return RecordingMeta(
            device_id=raw["device_id"],
            location_id=raw["location_id"],
            sample_rate_hz=float(raw["sample_rate_hz"]),
            center_freq_hz=float(raw.get("center_freq_hz", DEFAULT_CENTER_FREQ_HZ)),
            capture_notes=str(raw.get("capture_notes", "")),
            format_version=int(raw.get("format_version", FORMAT_VERSION)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise BadSidecarError(f"{sidecar_path} is missing or mistypes fields: {exc}") from exc


def read_iq(path) -> tuple[IQSignal, RecordingMeta]:
    """Inverse of :func:`write_iq`.

    A missing sidecar is tolerated: the recording comes back with default
    capture settings, placeholder labels, and a warning.

    Raises:
        IoFailureError: file missing or unreadable.
        OddFloatCountError: payload is not whole float pairs.
        BadSidecarError: sidecar present but malformed.
    """
    path = Path(path)
    try:
        blob = path.read_bytes()
    except OSError as exc:
        raise IoFailureError(f"cannot read {path}: {exc}") from exc
    if len(blob) % 8 != 0:
        raise OddFloatCountError(
            f"{path}: {len(blob)} bytes is not a whole number of float32 I/Q pairs"
        )
    flat = np.frombuffer(blob, dtype="<f4")

    sidecar_path = Path(str(path) + ".json")
    if sidecar_path.exists():
        meta = _read_sidecar(sidecar_path)
    else:
        warnings.warn(f"no sidecar for {path}; applying capture defaults", stacklevel=2)
        meta = RecordingMeta(
            device_id="unknown",
            location_id="unknown",
            capture_notes="sidecar missing; defaults applied",
        )
    sig = IQSignal(flat[0::2], flat[1::2], meta.sample_rate_hz)
    return sig, meta


def build_manifest(directory) -> Corpus:
    """Scan a directory for `.iq` + sidecar pairs and write `manifest.json`.

    Entries are sorted by relative path so rebuilding an unchanged directory
    yields byte-identical output.

    Raises:
        DanglingSidecarError: a sidecar without its payload file.
        DuplicatePairError: two recordings with the same (device, location).
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise IoFailureError(f"{directory} is not a readable directory")

    for sidecar in sorted(directory.glob(f"*{SIDECAR_SUFFIX}")):
        payload = sidecar.with_name(sidecar.name[: -len(".json")])
        if not payload.exists():
            raise DanglingSidecarError(f"{sidecar} has no matching {payload.name}")

    entries = []
    recordings = []
    seen: dict[tuple[str, str], Path] = {}
    for iq_path in sorted(directory.glob(f"*{IQ_SUFFIX}")):
        sidecar_path = Path(str(iq_path) + ".json")
        if not sidecar_path.exists():
            continue
        meta = _read_sidecar(sidecar_path)
        if iq_path.stat().st_size % 8 != 0:
            raise OddFloatCountError(f"{iq_path} is not whole float32 I/Q pairs")
        key = (meta.device_id, meta.location_id)
        if key in seen:
            raise DuplicatePairError(
                f"{iq_path} duplicates (device={key[0]}, location={key[1]}) "
                f"already claimed by {seen[key]}"
            )
        seen[key] = iq_path
        entries.append(dict(asdict(meta), path=iq_path.name))
        recordings.append((meta, iq_path))

    manifest_path = directory / MANIFEST_NAME
    manifest_path.write_text(json.dumps(entries, indent=2, sort_keys=True) + "\n")
    return Corpus(recordings=tuple(recordings), manifest_path=manifest_path)


def load_manifest(directory) -> Corpus:
    """Load an existing manifest without rescanning the directory."""
    directory = Path(directory)
    manifest_path = directory / MANIFEST_NAME
    if not manifest_path.exists():
        raise IoFailureError(f"no {MANIFEST_NAME} in {directory}; run build_manifest first")
    entries = json.loads(manifest_path.read_text())
    recordings = []
    for entry in entries:
        meta = RecordingMeta(
            device_id=entry["device_id"],
            location_id=entry["location_id"],
            sample_rate_hz=float(entry["sample_rate_hz"]),
            center_freq_hz=float(entry.get("center_freq_hz", DEFAULT_CENTER_FREQ_HZ)),
            capture_notes=str(entry.get("capture_notes", "")),
            format_version=int(entry.get("format_version", FORMAT_VERSION)),
        )
        recordings.append((meta, directory / entry["path"]))
    return Corpus(recordings=tuple(recordings), manifest_path=manifest_path)
