"""Shared domain types: IQ recordings, window geometry, and seeded random streams.

Everything here is immutable after construction and safe to share across
threads. ``RandomSource`` is the single entry point for randomness; parallel
workers must derive independent children via :meth:`RandomSource.child`
instead of sharing one generator.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

PRNG_ALGORITHM = "philox4x64-seedseq-v1"


class DomainError(Exception):
    """Base class for all domain-rule violations raised by this package."""


class LengthMismatchError(DomainError):
    """I and Q sample streams have different lengths."""


class NonFiniteSampleError(DomainError):
    """A sample stream contains NaN or infinity."""


class BadSampleRateError(DomainError):
    """Sample rate is zero, negative, or non-finite."""


def _as_float_stream(values, name: str) -> np.ndarray:
    arr = np.ascontiguousarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class IQSignal:
    """A uniformly sampled complex baseband recording, kept as two real streams.

    The I and Q streams are stored separately (not interleaved) because all
    dimension analysis operates on one real stream at a time; interleaving
    exists only at the file boundary.
    """

    i_samples: np.ndarray
    q_samples: np.ndarray
    sample_rate_hz: float

    def __post_init__(self):
        object.__setattr__(self, "i_samples", _as_float_stream(self.i_samples, "i_samples"))
        object.__setattr__(self, "q_samples", _as_float_stream(self.q_samples, "q_samples"))
        object.__setattr__(self, "sample_rate_hz", float(self.sample_rate_hz))
        validate_signal(self)

    @classmethod
    def from_complex(cls, samples, sample_rate_hz: float) -> "IQSignal":
        z = np.asarray(samples, dtype=np.complex128)
        return cls(z.real.copy(), z.imag.copy(), sample_rate_hz)

    @property
    def n_samples(self) -> int:
        return int(self.i_samples.size)

    @property
    def complex_samples(self) -> np.ndarray:
        return self.i_samples + 1j * self.q_samples

    @property
    def magnitude(self) -> np.ndarray:
        return np.hypot(self.i_samples, self.q_samples)

    @property
    def unwrapped_phase(self) -> np.ndarray:
        return np.unwrap(np.arctan2(self.q_samples, self.i_samples))


def validate_signal(sig: IQSignal) -> None:
    """Check every IQSignal invariant, raising the matching error.

    Raises:
        LengthMismatchError: I and Q lengths differ.
        NonFiniteSampleError: any NaN/Inf sample.
        BadSampleRateError: sample rate not strictly positive and finite.
    """
    if sig.i_samples.size != sig.q_samples.size:
        raise LengthMismatchError(
            f"I has {sig.i_samples.size} samples, Q has {sig.q_samples.size}"
        )
    if sig.i_samples.size < 1:
        raise LengthMismatchError("signal must contain at least one sample")
    if not np.isfinite(sig.i_samples).all() or not np.isfinite(sig.q_samples).all():
        raise NonFiniteSampleError("signal contains NaN or infinite samples")
    if not np.isfinite(sig.sample_rate_hz) or sig.sample_rate_hz <= 0:
        raise BadSampleRateError(f"sample_rate_hz must be > 0, got {sig.sample_rate_hz}")


@dataclass(frozen=True)
class WindowConfig:
    """Sliding-window geometry: segment length and shift between segments.

    ``window_len`` doubles as the time interval of the dimension formula, so
    it must be at least 2 (its log must be positive). Offsets up to the
    window length are allowed; offsets below it overlap adjacent windows.
    """

    window_len: int
    window_offset: int

    def __post_init__(self):
        if self.window_len < 2:
            raise ValueError(f"window_len must be >= 2, got {self.window_len}")
        if not 1 <= self.window_offset <= self.window_len:
            raise ValueError(
                f"window_offset must be in [1, window_len], got {self.window_offset}"
            )


@dataclass(frozen=True)
class FractalDimension:
    """A variance fractal dimension D with its Euclidean reference dimension.

    The Hurst exponent is derived, not stored, so the identity
    ``d == euclidean_dim + 1 - h`` holds exactly by construction.
    """

    d: float
    euclidean_dim: int = 1

    def __post_init__(self):
        if not np.isfinite(self.d):
            raise ValueError(f"dimension must be finite, got {self.d}")

    @property
    def h(self) -> float:
        """Hurst exponent: H = E + 1 - D (H = 2 - D for one real stream)."""
        return self.euclidean_dim + 1 - self.d


@dataclass(frozen=True)
class RandomSource:
    """Deterministic, splittable randomness.

    A (seed, algorithm, path) triple pins the full output stream: equal
    triples give bit-identical draws on every platform and run. ``child``
    derives an independent stream, so parallel workers never overlap.
    """

    seed: int
    algorithm_id: str = PRNG_ALGORITHM
    path: tuple[int, ...] = field(default=())

    def __post_init__(self):
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.algorithm_id != PRNG_ALGORITHM:
            raise ValueError(
                f"unknown PRNG algorithm {self.algorithm_id!r}; "
                f"this build implements {PRNG_ALGORITHM!r}"
            )

    def generator(self) -> np.random.Generator:
        """A fresh Generator positioned at the start of this source's stream."""
        seq = np.random.SeedSequence(entropy=int(self.seed), spawn_key=self.path)
        return np.random.Generator(np.random.Philox(seq))

    def child(self, *keys: int) -> "RandomSource":
        """Derive an independent source addressed by integer keys."""
        return RandomSource(self.seed, self.algorithm_id, self.path + tuple(int(k) for k in keys))
