"""Variance fractal dimension of windowed real streams.

A windowed segment of length ``dw`` is assumed to follow the power law
``var(dx) ~ dt**(2H)`` with the window length standing in for the time
interval. Solving for H and converting through ``D = 2 - H`` gives the
single-scale estimate

    D = 2 - log(var) / (2 * log(dw))

computed per window, and a rolling trajectory of D values over a full
recording. ``multiscale_dimension`` estimates H instead from the regression
of log increment variance on log lag, as an independent cross-check on the
single-scale formula.

Two variance conventions coexist in practice and both are first class here:
``VarianceMode.AMPLITUDE`` takes the variance of the raw samples in the
window, ``VarianceMode.INCREMENT`` the variance of the lag-1 differences.
The chosen mode is recorded in every trajectory for provenance.

The log base cancels in the D formula (a ratio of two logs); natural log is
used internally. D is deliberately not clamped to [1, 2]: extreme variances
push the single-scale value outside that interval, and those excursions are
exactly what impairment fingerprinting exploits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from fractalrf.core import DomainError, FractalDimension, WindowConfig

# Windows per chunk when streaming a trajectory; bounds the materialized
# copy to a few MB regardless of recording length.
_CHUNK_WINDOWS = 8192


class WindowTooShortError(DomainError):
    """Window has too few samples for the requested variance mode."""


class StreamTooShortError(DomainError):
    """Stream is shorter than one full window."""


class DegenerateWindowError(DomainError):
    """A window (or lag) has zero sample variance, so its log is undefined."""

    def __init__(self, message: str, window_index: int | None = None):
        super().__init__(message)
        self.window_index = window_index


class InsufficientLagsError(DomainError):
    """Fewer than two distinct lags were supplied for the regression."""


class VarianceMode(Enum):
    """Which quantity's variance enters the dimension formula."""

    AMPLITUDE = "amplitude"
    INCREMENT = "increment"


@dataclass(frozen=True)
class VFDTTrajectory:
    """Rolling sequence of dimension values over a stream.

    ``values[i]`` is the dimension of the window starting at sample
    ``i * config.window_offset``; the trailing partial window is discarded.
    """

    values: np.ndarray
    config: WindowConfig
    source_len: int
    mode: VarianceMode

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float64))

    def __len__(self) -> int:
        return int(self.values.size)


def n_windows(source_len: int, cfg: WindowConfig) -> int:
    """Number of complete windows a stream of ``source_len`` samples yields."""
    if source_len < cfg.window_len:
        return 0
    return (source_len - cfg.window_len) // cfg.window_offset + 1


def _min_window_len(mode: VarianceMode) -> int:
    # Increment mode differences first, so it needs one extra sample to
    # leave two increments for an unbiased variance.
    return 3 if mode is VarianceMode.INCREMENT else 2


# Variances below (16*eps)^2 of the window's mean square are rounding
# artifacts of a constant stream, not measurements.
_DEGENERATE_REL_VAR = (16.0 * np.finfo(np.float64).eps) ** 2


def _window_variances(windows: np.ndarray, mode: VarianceMode) -> tuple[np.ndarray, np.ndarray]:
    """Unbiased per-row variance of a 2-D contiguous window block.

    Returns (variances, degenerate mask). A row is degenerate when its
    analyzed values are constant: tested as exact equality (ptp == 0), exact
    zero variance, or variance indistinguishable from float64 rounding noise
    on the window's own scale (a constant non-dyadic value, or a constant
    envelope after rotation, leaves subnormal-level jitter instead of an
    exact zero).

    Single-window and trajectory paths both route through here so their
    results are bit-identical.
    """
    scale_sq = np.mean(windows**2, axis=1)
    if mode is VarianceMode.INCREMENT:
        windows = np.diff(windows, axis=1)
    var = np.var(windows, axis=1, ddof=1)
    degenerate = (
        (var == 0.0)
        | (np.ptp(windows, axis=1) == 0.0)
        | (var <= _DEGENERATE_REL_VAR * scale_sq)
    )
    return var, degenerate


def _dimension_from_variance(var: float, window_len: int) -> float:
    return 2.0 - math.log(var) / (2.0 * math.log(window_len))


def variance_dimension(
    window, mode: VarianceMode = VarianceMode.AMPLITUDE
) -> FractalDimension:
    """Single-scale variance fractal dimension of one window.

    The window length is the time interval of the power law, so the same
    samples at a different nominal length are a different measurement.

    Raises:
        WindowTooShortError: fewer than 2 samples (3 for INCREMENT mode).
        DegenerateWindowError: zero variance (e.g. a constant window).
    """
    x = np.ascontiguousarray(window, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError(f"window must be one-dimensional, got shape {x.shape}")
    if not np.isfinite(x).all():
        raise ValueError("window contains non-finite samples")
    w = x.size
    if w < _min_window_len(mode):
        raise WindowTooShortError(
            f"{mode.value} mode needs >= {_min_window_len(mode)} samples, got {w}"
        )
    var, degenerate = _window_variances(x[np.newaxis, :], mode)
    if degenerate[0]:
        raise DegenerateWindowError("window variance is zero; log(var) undefined")
    return FractalDimension(_dimension_from_variance(float(var[0]), w))


def vfdt_trajectory(
    stream, cfg: WindowConfig, mode: VarianceMode = VarianceMode.AMPLITUDE
) -> VFDTTrajectory:
    """Rolling variance fractal dimension over a full stream.

    Windows advance by ``cfg.window_offset`` samples; each complete window
    contributes one value and the trailing partial window is dropped.
    Values match independent :func:`variance_dimension` calls on the same
    slices exactly.

    Raises:
        StreamTooShortError: stream shorter than one window.
        DegenerateWindowError: carries the index of the offending window.
    """
    x = np.ascontiguousarray(stream, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError(f"stream must be one-dimensional, got shape {x.shape}")
    if not np.isfinite(x).all():
        raise ValueError("stream contains non-finite samples")
    w, off = cfg.window_len, cfg.window_offset
    if w < _min_window_len(mode):
        raise WindowTooShortError(
            f"{mode.value} mode needs window_len >= {_min_window_len(mode)}, got {w}"
        )
    total = n_windows(x.size, cfg)
    if total == 0:
        raise StreamTooShortError(
            f"stream of {x.size} samples is shorter than one {w}-sample window"
        )

    strided = sliding_window_view(x, w)[::off]
    log_w = 2.0 * math.log(w)
    values = np.empty(total, dtype=np.float64)
    for start in range(0, total, _CHUNK_WINDOWS):
        stop = min(start + _CHUNK_WINDOWS, total)
        block = np.ascontiguousarray(strided[start:stop])
        var, degenerate = _window_variances(block, mode)
        bad = np.flatnonzero(degenerate)
        if bad.size:
            idx = int(start + bad[0])
            raise DegenerateWindowError(
                f"window {idx} (samples {idx * off}..{idx * off + w}) has zero variance",
                window_index=idx,
            )
        values[start:stop] = 2.0 - np.log(var) / log_w
    return VFDTTrajectory(values=values, config=cfg, source_len=int(x.size), mode=mode)


def default_lags(window_len: int) -> tuple[int, ...]:
    """Dyadic lags 1, 2, 4, ... up to window_len // 4.

    Stopping a factor of four below the window keeps at least a handful of
    increment pairs at the largest lag.
    """
    if window_len < 8:
        raise WindowTooShortError(f"need window_len >= 8 for dyadic lags, got {window_len}")
    return tuple(2**j for j in range(int(math.log2(window_len / 4)) + 1))


def hurst_from_lag_variances(lags, variances) -> float:
    """Half the least-squares slope of log variance against log lag."""
    lags = np.asarray(lags, dtype=np.float64)
    variances = np.asarray(variances, dtype=np.float64)
    if lags.size < 2:
        raise InsufficientLagsError(f"need >= 2 lags, got {lags.size}")
    slope = np.polyfit(np.log(lags), np.log(variances), 1)[0]
    return 0.5 * float(slope)


def multiscale_dimension(window, lags=None) -> FractalDimension:
    """Dimension via the power-law regression over several lags.

    Estimates H as half the least-squares slope of ``log var(x[j+k] - x[j])``
    versus ``log k`` over the given lags, then reports D = 2 - H. Unlike the
    single-scale formula this uses the scaling *across* intervals, making it
    an independent oracle for self-similar streams.

    Raises:
        InsufficientLagsError: fewer than 2 lags.
        WindowTooShortError: window shorter than twice the largest lag.
        DegenerateWindowError: some lag yields zero increment variance.
    """
    x = np.ascontiguousarray(window, dtype=np.float64)
    if lags is None:
        lags = default_lags(x.size)
    lag_list = sorted({int(k) for k in lags})
    if len(lag_list) < 2:
        raise InsufficientLagsError(f"need >= 2 distinct lags, got {len(lag_list)}")
    if min(lag_list) < 1:
        raise ValueError(f"lags must be >= 1, got {min(lag_list)}")
    if x.size < 2 * max(lag_list):
        raise WindowTooShortError(
            f"window of {x.size} samples cannot support lag {max(lag_list)}"
        )
    variances = np.empty(len(lag_list))
    for i, k in enumerate(lag_list):
        increments = x[k:] - x[:-k]
        v = float(np.var(increments, ddof=1))
        if v == 0.0 or np.ptp(increments) == 0.0:
            raise DegenerateWindowError(f"lag {k} increments have zero variance")
        variances[i] = v
    h = hurst_from_lag_variances(lag_list, variances)
    return FractalDimension(2.0 - h)
