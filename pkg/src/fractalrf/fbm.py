"""Exact-covariance fractional Brownian motion, used as dimension ground truth.

Generates fractional Gaussian noise by circulant embedding (Davies-Harte):
the target covariance is embedded in a circulant matrix whose eigenvalues
come from one FFT, and a structured complex Gaussian vector is colored by
the eigenvalue square roots. The resulting fGn has the exact fBm increment
covariance, so cumulative sums are true fBm paths with a known Hurst
exponent - the reference signal for validating dimension estimators.
"""

from __future__ import annotations

import numpy as np

from fractalrf.core import RandomSource

# Circulant eigenvalues are analytically nonnegative for 0 < H < 1; allow a
# whisker of FFT rounding before declaring the embedding invalid.
_EIGENVALUE_TOL = 1e-8


def fgn_autocovariance(hurst: float, max_lag: int) -> np.ndarray:
    """Autocovariance r(0..max_lag) of unit-variance fractional Gaussian noise."""
    k = np.arange(max_lag + 1, dtype=np.float64)
    h2 = 2.0 * hurst
    return 0.5 * (np.abs(k + 1) ** h2 + np.abs(k - 1) ** h2) - np.abs(k) ** h2


def fractional_gaussian_noise(n: int, hurst: float, rng: RandomSource) -> np.ndarray:
    """n samples of unit-variance fGn with the exact target covariance."""
    if not 0.0 < hurst < 1.0:
        raise ValueError(f"hurst must be in (0, 1), got {hurst}")
    if n < 1:
        raise ValueError(f"need n >= 1, got {n}")
    gen = rng.generator()
    if hurst == 0.5:
        return gen.standard_normal(n)

    r = fgn_autocovariance(hurst, n)
    # First row of the 2n circulant: r(0)..r(n), then mirrored r(n-1)..r(1).
    row = np.concatenate([r, r[-2:0:-1]])
    eigenvalues = np.fft.fft(row).real
    if eigenvalues.min() < -_EIGENVALUE_TOL * eigenvalues.max():
        raise ValueError(
            f"circulant embedding failed for n={n}, hurst={hurst}: "
            f"negative eigenvalue {eigenvalues.min():.3e}"
        )
    eigenvalues = np.clip(eigenvalues, 0.0, None)

    m = 2 * n
    z = np.empty(m, dtype=np.complex128)
    z[0] = gen.standard_normal()
    z[n] = gen.standard_normal()
    v = gen.standard_normal((n - 1, 2))
    z[1:n] = (v[:, 0] + 1j * v[:, 1]) / np.sqrt(2.0)
    z[n + 1 :] = np.conj(z[1:n][::-1])
    return np.sqrt(m) * np.fft.ifft(np.sqrt(eigenvalues) * z).real[:n]


def fractional_brownian_motion(n: int, hurst: float, rng: RandomSource) -> np.ndarray:
    """An n-sample fBm path: the running sum of exact-covariance fGn."""
    return np.cumsum(fractional_gaussian_noise(n, hurst, rng))
