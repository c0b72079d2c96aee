import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fractalrf.core import (
    BadSampleRateError,
    FractalDimension,
    IQSignal,
    LengthMismatchError,
    NonFiniteSampleError,
    RandomSource,
    WindowConfig,
    validate_signal,
)


class TestIQSignal:
    def test_well_formed(self):
        sig = IQSignal([0.1, 0.2], [0.0, -0.1], 1e6)
        validate_signal(sig)
        assert sig.n_samples == 2

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatchError):
            IQSignal([0.1], [0.1, 0.2], 1e6)

    def test_non_finite(self):
        with pytest.raises(NonFiniteSampleError):
            IQSignal([float("nan")], [0.0], 1e6)
        with pytest.raises(NonFiniteSampleError):
            IQSignal([0.0], [float("inf")], 1e6)

    def test_bad_sample_rate(self):
        with pytest.raises(BadSampleRateError):
            IQSignal([0.1], [0.1], 0.0)
        with pytest.raises(BadSampleRateError):
            IQSignal([0.1], [0.1], -1.0)

    def test_empty(self):
        with pytest.raises(LengthMismatchError):
            IQSignal([], [], 1e6)

    @given(
        st.lists(
            st.floats(min_value=-10, max_value=10, allow_nan=False),
            min_size=1,
            max_size=64,
        )
    )
    def test_round_trip_lossless(self, values):
        sig = IQSignal(values, values, 2.5e5)
        assert np.array_equal(sig.i_samples, np.asarray(values, dtype=np.float64))
        assert np.array_equal(sig.q_samples, np.asarray(values, dtype=np.float64))

    def test_complex_views(self):
        sig = IQSignal([3.0, 0.0], [4.0, 1.0], 1.0)
        assert np.allclose(sig.complex_samples, [3 + 4j, 1j])
        assert np.allclose(sig.magnitude, [5.0, 1.0])

    def test_from_complex(self):
        sig = IQSignal.from_complex([1 + 2j, -1j], 1e3)
        assert np.array_equal(sig.i_samples, [1.0, 0.0])
        assert np.array_equal(sig.q_samples, [2.0, -1.0])


class TestWindowConfig:
    def test_valid(self):
        cfg = WindowConfig(1024, 256)
        assert cfg.window_len == 1024

    @pytest.mark.parametrize("wlen,off", [(1, 1), (0, 1), (4, 0), (4, 5), (4, -1)])
    def test_invalid(self, wlen, off):
        with pytest.raises(ValueError):
            WindowConfig(wlen, off)

    def test_offset_equal_to_length_allowed(self):
        WindowConfig(8, 8)


class TestFractalDimension:
    def test_identity_exact(self):
        fd = FractalDimension(1.37)
        assert fd.d == fd.euclidean_dim + 1 - fd.h

    @given(st.floats(min_value=-5, max_value=5, allow_nan=False))
    def test_identity_holds_for_any_value(self, d):
        # h is derived, so the defining identity h = E + 1 - d is exact for
        # every representable d.
        fd = FractalDimension(d)
        assert fd.h == fd.euclidean_dim + 1 - fd.d

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            FractalDimension(float("nan"))


class TestRandomSource:
    def test_equal_seeds_equal_streams(self):
        a = RandomSource(12345).generator().random(1_000_000)
        b = RandomSource(12345).generator().random(1_000_000)
        assert np.array_equal(a, b)

    def test_different_seeds_differ(self):
        a = RandomSource(1).generator().random(100)
        b = RandomSource(2).generator().random(100)
        assert not np.array_equal(a, b)

    def test_children_are_independent_streams(self):
        root = RandomSource(9)
        a = root.child(0).generator().random(1000)
        b = root.child(1).generator().random(1000)
        parent = root.generator().random(1000)
        assert not np.array_equal(a, b)
        assert not np.array_equal(a, parent)

    def test_child_is_reproducible(self):
        a = RandomSource(9).child(3, 1).generator().random(100)
        b = RandomSource(9).child(3, 1).generator().random(100)
        assert np.array_equal(a, b)

    def test_generator_restart(self):
        src = RandomSource(5)
        assert np.array_equal(src.generator().random(10), src.generator().random(10))

    def test_seed_bounds(self):
        RandomSource(2**64 - 1)
        with pytest.raises(ValueError):
            RandomSource(-1)
        with pytest.raises(ValueError):
            RandomSource(2**64)

    def test_unknown_algorithm_rejected(self):
        with pytest.raises(ValueError):
            RandomSource(0, algorithm_id="mystery-prng")
