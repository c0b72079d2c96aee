import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fractalrf.core import RandomSource, WindowConfig
from fractalrf.fbm import fractional_brownian_motion, fractional_gaussian_noise
from fractalrf.vfdt import (
    DegenerateWindowError,
    InsufficientLagsError,
    StreamTooShortError,
    VarianceMode,
    WindowTooShortError,
    default_lags,
    hurst_from_lag_variances,
    multiscale_dimension,
    n_windows,
    variance_dimension,
    vfdt_trajectory,
)


def unit_variance_window(n=1024, seed=0):
    x = RandomSource(seed).generator().standard_normal(n)
    return x / np.std(x, ddof=1)


class TestVarianceDimension:
    def test_unit_variance_gives_two(self):
        fd = variance_dimension(unit_variance_window())
        assert fd.d == pytest.approx(2.0, abs=1e-12)

    def test_window_len_squared_variance_gives_one(self):
        w = unit_variance_window() * 1024
        fd = variance_dimension(w)
        assert fd.d == pytest.approx(1.0, abs=1e-12)

    def test_constant_window_degenerate(self):
        with pytest.raises(DegenerateWindowError):
            variance_dimension(np.full(64, 0.5))

    def test_scaling_by_ten(self):
        w = unit_variance_window()
        base = variance_dimension(w).d
        shifted = variance_dimension(10.0 * w).d
        assert shifted - base == pytest.approx(-math.log(10) / math.log(1024), abs=1e-9)
        assert shifted - base == pytest.approx(-0.33219, abs=1e-4)

    @given(
        seed=st.integers(0, 2**32),
        c=st.floats(min_value=0.01, max_value=100.0),
        wlen=st.sampled_from([64, 256, 1024]),
    )
    @settings(max_examples=40, deadline=None)
    def test_amplitude_scaling_law(self, seed, c, wlen):
        x = RandomSource(seed).generator().standard_normal(wlen)
        base = variance_dimension(x).d
        scaled = variance_dimension(c * x).d
        assert scaled - base == pytest.approx(-math.log(c) / math.log(wlen), abs=1e-9)

    @given(seed=st.integers(0, 2**32), shift=st.floats(-1e3, 1e3))
    @settings(max_examples=40, deadline=None)
    def test_shift_invariance_amplitude_mode(self, seed, shift):
        x = RandomSource(seed).generator().standard_normal(512)
        assert variance_dimension(x + shift).d == pytest.approx(
            variance_dimension(x).d, abs=1e-12
        )

    def test_log_base_independence(self):
        x = unit_variance_window(seed=3) * 7.7
        var = float(np.var(x, ddof=1))
        base2 = 2.0 - math.log2(var) / (2.0 * math.log2(x.size))
        assert variance_dimension(x).d == pytest.approx(base2, abs=1e-12)

    def test_hurst_field(self):
        fd = variance_dimension(unit_variance_window() * 3.0)
        assert fd.h == 2.0 - fd.d

    def test_too_short(self):
        with pytest.raises(WindowTooShortError):
            variance_dimension([1.0])
        with pytest.raises(WindowTooShortError):
            variance_dimension([1.0, 2.0], VarianceMode.INCREMENT)
        variance_dimension([1.0, 2.0, 4.0], VarianceMode.INCREMENT)

    def test_increment_mode_uses_lag1_differences(self):
        x = np.array([0.0, 1.0, -1.0, 2.0, 0.5])
        expected = 2.0 - math.log(np.var(np.diff(x), ddof=1)) / (2 * math.log(5))
        assert variance_dimension(x, VarianceMode.INCREMENT).d == pytest.approx(expected)

    def test_white_noise_mode_gap(self):
        # For iid samples the increment variance doubles the amplitude
        # variance in expectation, shifting D by -ln(2)/(2 ln dw).
        gen = RandomSource(17).generator()
        w = 1024
        diffs = []
        for _ in range(1200):
            x = gen.standard_normal(w)
            diffs.append(
                variance_dimension(x, VarianceMode.INCREMENT).d
                - variance_dimension(x, VarianceMode.AMPLITUDE).d
            )
        expected = -math.log(2) / (2 * math.log(w))
        assert np.mean(diffs) == pytest.approx(expected, abs=4 * np.std(diffs) / math.sqrt(len(diffs)))


class TestTrajectory:
    def test_window_count_4096(self):
        stream = RandomSource(1).generator().standard_normal(4096)
        traj = vfdt_trajectory(stream, WindowConfig(1024, 256))
        assert len(traj) == 13

    def test_single_full_window(self):
        stream = RandomSource(2).generator().standard_normal(1024)
        traj = vfdt_trajectory(stream, WindowConfig(1024, 1))
        assert len(traj) == 1

    def test_matches_per_window_recomputation_exactly(self):
        stream = RandomSource(3).generator().standard_normal(20_000)
        cfg = WindowConfig(1024, 512)
        traj = vfdt_trajectory(stream, cfg)
        for i in range(len(traj)):
            window = stream[i * 512 : i * 512 + 1024]
            assert traj.values[i] == variance_dimension(window).d

    def test_matches_per_window_increment_mode(self):
        stream = RandomSource(4).generator().standard_normal(8000)
        cfg = WindowConfig(512, 128)
        traj = vfdt_trajectory(stream, cfg, VarianceMode.INCREMENT)
        for i in range(len(traj)):
            window = stream[i * 128 : i * 128 + 512]
            assert traj.values[i] == variance_dimension(window, VarianceMode.INCREMENT).d

    def test_stream_too_short(self):
        with pytest.raises(StreamTooShortError):
            vfdt_trajectory(np.zeros(100) + np.arange(100), WindowConfig(128, 16))

    def test_degenerate_window_reports_index(self):
        stream = RandomSource(5).generator().standard_normal(1024)
        stream[256:512] = 0.25
        with pytest.raises(DegenerateWindowError) as err:
            vfdt_trajectory(stream, WindowConfig(128, 128))
        assert err.value.window_index == 2

    @given(
        n=st.integers(2, 5000),
        wlen=st.sampled_from([2, 16, 128]),
        off=st.integers(1, 128),
    )
    @settings(max_examples=60, deadline=None)
    def test_length_formula(self, n, wlen, off):
        off = min(off, wlen)
        expected = (n - wlen) // off + 1 if n >= wlen else 0
        assert n_windows(n, WindowConfig(wlen, off)) == expected
        if expected > 0:
            stream = RandomSource(n).generator().standard_normal(n)
            assert len(vfdt_trajectory(stream, WindowConfig(wlen, off))) == expected

    def test_mode_recorded(self):
        stream = RandomSource(6).generator().standard_normal(512)
        traj = vfdt_trajectory(stream, WindowConfig(128, 64), VarianceMode.INCREMENT)
        assert traj.mode is VarianceMode.INCREMENT


class TestMultiscale:
    def test_synthetic_power_law_recovers_h_exactly(self):
        lags = [1, 2, 4, 8, 16, 32]
        for h in (0.2, 0.5, 0.8):
            variances = np.array([k ** (2 * h) for k in lags])
            assert hurst_from_lag_variances(lags, variances) == pytest.approx(h, abs=1e-9)

    def test_brownian_motion_dimension(self):
        errs = []
        for seed in range(8):
            gen = RandomSource(seed).generator()
            path = np.cumsum(gen.standard_normal(2**16))
            fd = multiscale_dimension(path, lags=[2**j for j in range(7)])
            errs.append(fd.d - 1.5)
        assert abs(np.mean(errs)) < 0.1

    @pytest.mark.parametrize("hurst", [0.3, 0.7])
    def test_fbm_dimension_recovery(self, hurst):
        errs = []
        for seed in range(8):
            path = fractional_brownian_motion(2**16, hurst, RandomSource(seed))
            fd = multiscale_dimension(path, lags=[2**j for j in range(7)])
            errs.append(abs(fd.d - (2 - hurst)))
        assert np.mean(errs) < 0.1

    def test_insufficient_lags(self):
        with pytest.raises(InsufficientLagsError):
            multiscale_dimension(np.arange(100.0), lags=[4])

    def test_window_too_short_for_lag(self):
        with pytest.raises(WindowTooShortError):
            multiscale_dimension(np.arange(10.0), lags=[1, 8])

    def test_degenerate_lag(self):
        with pytest.raises(DegenerateWindowError):
            multiscale_dimension(np.arange(64.0), lags=[1, 2])  # linear ramp: lag diffs constant

    def test_default_lags_rule(self):
        assert default_lags(1024) == (1, 2, 4, 8, 16, 32, 64, 128, 256)
        assert max(default_lags(64)) <= 16


class TestFbmGenerator:
    def test_deterministic(self):
        a = fractional_gaussian_noise(4096, 0.7, RandomSource(1))
        b = fractional_gaussian_noise(4096, 0.7, RandomSource(1))
        assert np.array_equal(a, b)

    def test_unit_variance(self):
        x = fractional_gaussian_noise(2**15, 0.7, RandomSource(2))
        assert np.std(x) == pytest.approx(1.0, rel=0.1)

    def test_increment_variance_scaling(self):
        # fBm increments over lag k must have variance ~ k^(2H).
        h = 0.3
        path = fractional_brownian_motion(2**16, h, RandomSource(3))
        for k in (4, 16, 64):
            ratio = np.var(path[k:] - path[:-k]) / k ** (2 * h)
            assert ratio == pytest.approx(1.0, rel=0.15)

    def test_h_half_is_white_gaussian(self):
        x = fractional_gaussian_noise(10_000, 0.5, RandomSource(4))
        lag1 = np.corrcoef(x[1:], x[:-1])[0, 1]
        assert abs(lag1) < 0.05

    def test_rejects_bad_hurst(self):
        with pytest.raises(ValueError):
            fractional_gaussian_noise(128, 1.0, RandomSource(0))
        with pytest.raises(ValueError):
            fractional_gaussian_noise(128, 0.0, RandomSource(0))
