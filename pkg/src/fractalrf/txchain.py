"""Simulated transmitter front end and location channel.

Synthesizes labeled multi-device corpora: a random payload is 4-QAM
modulated, passed through per-device hardware impairments (IQ amplitude
imbalance, oscillator phase noise, carrier frequency offset, and a cubic
power-amplifier nonlinearity, in physical front-end order), then through a
flat-gain AWGN channel standing in for a capture location.

All stages are pure functions of their inputs and RandomSource, so a fixed
seed reproduces a corpus bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from fractalrf.core import DomainError, IQSignal, RandomSource

# Default PA operating point used by the fleet synthesizer and sweep
# drivers: amplitude applied to the unit-energy constellation before the
# impairment chain. 0.2 (16 dBm into 1 ohm) keeps the cubic model inside
# its weakly nonlinear region for intercept points down to 20 dBm.
DEFAULT_DRIVE = 0.2

RRC_ROLLOFF = 0.35
RRC_SPAN_SYMBOLS = 8

# Single-pole cutoff of the oscillator frequency-deviation process,
# relative to the sample rate.
PHASE_NOISE_CUTOFF_FRACTION = 1e-3


class OddBitCountError(DomainError):
    """Bit payloads must pair up into 4-QAM symbols."""


class NegativeImbalanceError(DomainError):
    """IQ amplitude imbalance is specified as a nonnegative dB total."""


class NegativeOffsetError(DomainError):
    """Phase-noise maximum frequency offset must be nonnegative."""


class EmptyFleetError(DomainError):
    """A fleet needs at least one device."""


class NoLocationsError(DomainError):
    """A fleet needs at least one location."""


@dataclass(frozen=True)
class ImpairmentProfile:
    """One device's hardware truth.

    ``iip3_dbm`` is the third-order input intercept point (dBm into a 1 ohm
    reference); ``math.inf`` means a perfectly linear amplifier.
    ``iq_imbalance_db`` is the total I/Q amplitude mismatch, applied as
    +/- half on each stream. ``phase_noise_max_offset_hz`` is the 3-sigma
    instantaneous frequency deviation of the oscillator.
    """

    iip3_dbm: float
    iq_imbalance_db: float = 0.0
    phase_noise_max_offset_hz: float = 0.0
    cfo_hz: float = 0.0

    def __post_init__(self):
        if math.isnan(self.iip3_dbm):
            raise ValueError("iip3_dbm must not be NaN")
        if self.iq_imbalance_db < 0:
            raise NegativeImbalanceError(f"iq_imbalance_db must be >= 0, got {self.iq_imbalance_db}")
        if self.phase_noise_max_offset_hz < 0:
            raise NegativeOffsetError(
                f"phase_noise_max_offset_hz must be >= 0, got {self.phase_noise_max_offset_hz}"
            )
        if not math.isfinite(self.cfo_hz):
            raise ValueError("cfo_hz must be finite")

    @classmethod
    def linear(cls) -> "ImpairmentProfile":
        """A device with no impairments at all."""
        return cls(iip3_dbm=math.inf)


@dataclass(frozen=True)
class ChannelProfile:
    """Flat path gain plus receiver-side AWGN for one capture location."""

    gain_db: float
    snr_db: float
    location_id: str

    def __post_init__(self):
        if math.isnan(self.snr_db):
            raise ValueError("snr_db must not be NaN")
        if not self.location_id:
            raise ValueError("location_id must be nonempty")


@dataclass(frozen=True)
class ProfileSpread:
    """Uniform sampling ranges for per-device impairment profiles."""

    iip3_dbm: tuple[float, float] = (20.0, 40.0)
    iq_imbalance_db: tuple[float, float] = (0.0, 8.0)
    phase_noise_max_offset_hz: tuple[float, float] = (10.0, 50.0)
    cfo_hz: tuple[float, float] = (-50e3, 50e3)


def generate_payload(n_bits: int, rng: RandomSource) -> np.ndarray:
    """n_bits i.i.d. uniform bits as a uint8 array.

    Raises:
        OddBitCountError: n_bits odd or below one symbol pair.
    """
    if n_bits < 2 or n_bits % 2 != 0:
        raise OddBitCountError(f"n_bits must be even and >= 2, got {n_bits}")
    return rng.generator().integers(0, 2, size=n_bits, dtype=np.uint8)


def _rrc_taps(samples_per_symbol: int) -> np.ndarray:
    """Root-raised-cosine taps, scaled for unit average output power."""
    beta = RRC_ROLLOFF
    n = RRC_SPAN_SYMBOLS * samples_per_symbol
    t = (np.arange(n + 1) - n / 2) / samples_per_symbol
    taps = np.empty_like(t)
    for i, ti in enumerate(t):
        if abs(ti) < 1e-12:
            taps[i] = 1.0 + beta * (4.0 / math.pi - 1.0)
        elif abs(abs(4.0 * beta * ti) - 1.0) < 1e-9:
            taps[i] = (beta / math.sqrt(2.0)) * (
                (1 + 2 / math.pi) * math.sin(math.pi / (4 * beta))
                + (1 - 2 / math.pi) * math.cos(math.pi / (4 * beta))
            )
        else:
            taps[i] = (
                math.sin(math.pi * ti * (1 - beta))
                + 4 * beta * ti * math.cos(math.pi * ti * (1 + beta))
            ) / (math.pi * ti * (1 - (4 * beta * ti) ** 2))
    # Zero-stuffed unit-energy symbols have 1/sps average power; this
    # normalization restores unit mean power after filtering.
    return taps * math.sqrt(samples_per_symbol) / math.sqrt(np.sum(taps**2))


def qam4_modulate(
    bits,
    samples_per_symbol: int,
    sample_rate_hz: float = 1e6,
    pulse_shape: str = "rect",
) -> IQSignal:
    """Gray-coded 4-QAM at unit mean symbol energy.

    Bit pairs (b0, b1) map to ((1-2*b0) + 1j*(1-2*b1)) / sqrt(2), so
    neighboring constellation points differ in exactly one bit. Rectangular
    shaping holds each symbol for ``samples_per_symbol`` samples;
    ``pulse_shape="rrc"`` applies a root-raised-cosine filter instead
    (roll-off 0.35, span 8 symbols), trimmed to the same output length.

    Raises:
        OddBitCountError: bits do not pair up.
    """
    bits = np.asarray(bits, dtype=np.int64)
    if bits.size < 2 or bits.size % 2 != 0:
        raise OddBitCountError(f"bit count must be even and >= 2, got {bits.size}")
    if samples_per_symbol < 1:
        raise ValueError(f"samples_per_symbol must be >= 1, got {samples_per_symbol}")
    if np.any((bits != 0) & (bits != 1)):
        raise ValueError("payload must contain only 0/1 bits")

    scale = 1.0 / math.sqrt(2.0)
    i_sym = (1 - 2 * bits[0::2]) * scale
    q_sym = (1 - 2 * bits[1::2]) * scale

    if pulse_shape == "rect":
        i_samp = np.repeat(i_sym, samples_per_symbol)
        q_samp = np.repeat(q_sym, samples_per_symbol)
    elif pulse_shape == "rrc":
        taps = _rrc_taps(samples_per_symbol)
        delay = (taps.size - 1) // 2
        n_out = i_sym.size * samples_per_symbol
        up_i = np.zeros(n_out)
        up_q = np.zeros(n_out)
        up_i[::samples_per_symbol] = i_sym
        up_q[::samples_per_symbol] = q_sym
        i_samp = np.convolve(up_i, taps)[delay : delay + n_out]
        q_samp = np.convolve(up_q, taps)[delay : delay + n_out]
    else:
        raise ValueError(f"unknown pulse_shape {pulse_shape!r}; use 'rect' or 'rrc'")
    return IQSignal(i_samp, q_samp, sample_rate_hz)


def cubic_coefficient(iip3_dbm: float) -> float:
    """Third-order coefficient g3 of the memoryless cubic PA model.

    Converts the intercept point to a peak amplitude via A^2 = 2*R*P with
    R = 1 ohm and P = 10**((iip3_dbm - 30)/10) watts, then g3 = -(4/3)/A^2
    (unit linear gain). With these coefficients a two-tone test on the real
    polynomial g1*x + g3*x**3 extrapolates to exactly ``iip3_dbm``.
    """
    if math.isinf(iip3_dbm):
        return 0.0
    intercept_w = 10.0 ** ((iip3_dbm - 30.0) / 10.0)
    a_sq = 2.0 * intercept_w
    return -(4.0 / 3.0) / a_sq


def pa_nonlinearity(sig: IQSignal, iip3_dbm: float) -> IQSignal:
    """Cubic memoryless amplifier: y = x + g3 * |x|^2 * x per complex sample.

    ``math.inf`` disables the nonlinearity exactly. The model is only
    physical below the intercept point; drive the input accordingly.
    """
    g3 = cubic_coefficient(iip3_dbm)
    if g3 == 0.0:
        return sig
    power = sig.i_samples**2 + sig.q_samples**2
    factor = 1.0 + g3 * power
    return IQSignal(sig.i_samples * factor, sig.q_samples * factor, sig.sample_rate_hz)


def iq_imbalance(sig: IQSignal, imbalance_db: float) -> IQSignal:
    """Equal-and-opposite amplitude mismatch between the I and Q paths.

    The I stream gains +imbalance_db/2 dB and Q loses the same amount; the
    phase mismatch of real mixers is not modeled (fixed at zero).

    Raises:
        NegativeImbalanceError: imbalance_db < 0.
    """
    if imbalance_db < 0:
        raise NegativeImbalanceError(f"imbalance_db must be >= 0, got {imbalance_db}")
    if imbalance_db == 0:
        return sig
    gain_i = 10.0 ** (imbalance_db / 40.0)
    gain_q = 10.0 ** (-imbalance_db / 40.0)
    return IQSignal(sig.i_samples * gain_i, sig.q_samples * gain_q, sig.sample_rate_hz)


def phase_noise_phases(
    n: int, max_offset_hz: float, sample_rate_hz: float, rng: RandomSource
) -> np.ndarray:
    """Oscillator phase trajectory phi[n] for a filtered-Gaussian noise model.

    White Gaussian frequency deviations are low-pass filtered (single pole,
    cutoff = sample_rate * 1e-3), scaled so the stationary 3-sigma point of
    the filtered process equals ``max_offset_hz``, then integrated into
    phase. The filter state is drawn from the stationary distribution so the
    process has no startup transient.
    """
    if max_offset_hz == 0:
        return np.zeros(n)
    gen = rng.generator()
    pole = math.exp(-2.0 * math.pi * PHASE_NOISE_CUTOFF_FRACTION)
    white = gen.standard_normal(n)
    # Stationary std of y[k] = (1-pole)*w[k] + pole*y[k-1] with unit white noise.
    stationary_std = (1.0 - pole) / math.sqrt(1.0 - pole**2)
    y0 = gen.standard_normal() * stationary_std
    deviation, _ = lfilter([1.0 - pole], [1.0, -pole], white, zi=[pole * y0])
    deviation *= (max_offset_hz / 3.0) / stationary_std
    return 2.0 * math.pi * np.cumsum(deviation) / sample_rate_hz


def phase_noise(sig: IQSignal, max_offset_hz: float, rng: RandomSource) -> IQSignal:
    """Rotate each sample by an integrated filtered-Gaussian frequency error.

    Pure phase rotation: |y[n]| = |x[n]| for every sample.

    Raises:
        NegativeOffsetError: max_offset_hz < 0.
    """
    if max_offset_hz < 0:
        raise NegativeOffsetError(f"max_offset_hz must be >= 0, got {max_offset_hz}")
    if max_offset_hz == 0:
        return sig
    phi = phase_noise_phases(sig.n_samples, max_offset_hz, sig.sample_rate_hz, rng)
    rotated = sig.complex_samples * np.exp(1j * phi)
    return IQSignal(rotated.real, rotated.imag, sig.sample_rate_hz)


def apply_cfo(sig: IQSignal, cfo_hz: float) -> IQSignal:
    """Carrier frequency offset: y[n] = x[n] * exp(j*2*pi*cfo*n/fs)."""
    if cfo_hz == 0:
        return sig
    n = np.arange(sig.n_samples)
    rotated = sig.complex_samples * np.exp(2j * math.pi * cfo_hz * n / sig.sample_rate_hz)
    return IQSignal(rotated.real, rotated.imag, sig.sample_rate_hz)


def apply_channel(sig: IQSignal, ch: ChannelProfile, rng: RandomSource) -> IQSignal:
    """Flat gain followed by complex AWGN at the requested receiver SNR.

    ``snr_db = math.inf`` adds no noise. Noise variance is set against the
    measured power of the scaled signal, so the realized SNR matches the
    request regardless of drive level.
    """
    gain = 10.0 ** (ch.gain_db / 20.0)
    i = sig.i_samples * gain
    q = sig.q_samples * gain
    if not math.isinf(ch.snr_db):
        signal_power = float(np.mean(i**2 + q**2))
        noise_power = signal_power / 10.0 ** (ch.snr_db / 10.0)
        gen = rng.generator()
        sigma = math.sqrt(noise_power / 2.0)
        i = i + gen.standard_normal(i.size) * sigma
        q = q + gen.standard_normal(q.size) * sigma
    return IQSignal(i, q, sig.sample_rate_hz)


def scale(sig: IQSignal, factor: float) -> IQSignal:
    """Uniform amplitude scaling of both streams."""
    return IQSignal(sig.i_samples * factor, sig.q_samples * factor, sig.sample_rate_hz)


def transmit_frame(
    profile: ImpairmentProfile,
    bits,
    samples_per_symbol: int,
    sample_rate_hz: float,
    rng: RandomSource,
    pulse_shape: str = "rect",
    drive: float = 1.0,
) -> IQSignal:
    """Push an explicit bit frame through one device's front end.

    Chain order follows the physical layout: modulation, drive scaling (the
    DAC output level), mixer-stage imbalance and phase noise, carrier
    offset, and finally the power amplifier.
    """
    sig = qam4_modulate(bits, samples_per_symbol, sample_rate_hz, pulse_shape)
    if drive != 1.0:
        sig = scale(sig, drive)
    sig = iq_imbalance(sig, profile.iq_imbalance_db)
    sig = phase_noise(sig, profile.phase_noise_max_offset_hz, rng.child(0))
    sig = apply_cfo(sig, profile.cfo_hz)
    return pa_nonlinearity(sig, profile.iip3_dbm)


def synth_device(
    profile: ImpairmentProfile,
    n_bits: int,
    samples_per_symbol: int,
    sample_rate_hz: float,
    rng: RandomSource,
    pulse_shape: str = "rect",
    drive: float = 1.0,
) -> IQSignal:
    """One device's clean-channel transmission of a fresh random payload."""
    bits = generate_payload(n_bits, rng.child(1))
    return transmit_frame(
        profile, bits, samples_per_symbol, sample_rate_hz, rng,
        pulse_shape=pulse_shape, drive=drive,
    )


def sample_profiles(
    n_devices: int, spread: ProfileSpread, rng: RandomSource
) -> list[ImpairmentProfile]:
    """Draw one impairment profile per device, uniform over the spread ranges."""
    gen = rng.generator()

    def draw(lo_hi):
        lo, hi = lo_hi
        return float(gen.uniform(lo, hi)) if hi > lo else float(lo)

    return [
        ImpairmentProfile(
            iip3_dbm=draw(spread.iip3_dbm),
            iq_imbalance_db=draw(spread.iq_imbalance_db),
            phase_noise_max_offset_hz=draw(spread.phase_noise_max_offset_hz),
            cfo_hz=draw(spread.cfo_hz),
        )
        for _ in range(n_devices)
    ]


@dataclass(frozen=True)
class FleetRecording:
    device_id: str
    location_id: str
    profile: ImpairmentProfile
    signal: IQSignal


def synth_fleet(
    n_devices: int,
    locations: list[ChannelProfile],
    rng: RandomSource,
    spread: ProfileSpread = ProfileSpread(),
    n_bits: int = 16384,
    samples_per_symbol: int = 4,
    sample_rate_hz: float = 1e6,
    payload_repeats: int = 1,
    pulse_shape: str = "rect",
    drive: float = DEFAULT_DRIVE,
) -> list[FleetRecording]:
    """A labeled corpus: one recording per (device, location) pair.

    Every device transmits the same repeated payload frame (real testbeds
    flash identical firmware onto each board), so recordings differ only
    through per-device impairments and per-location channels.

    Raises:
        EmptyFleetError: no devices requested.
        NoLocationsError: no locations given.
    """
    if n_devices < 1:
        raise EmptyFleetError(f"need >= 1 device, got {n_devices}")
    if not locations:
        raise NoLocationsError("need >= 1 location")
    profiles = sample_profiles(n_devices, spread, rng.child(0))
    frame = generate_payload(n_bits, rng.child(1))
    bits = np.tile(frame, payload_repeats)
    recordings = []
    for d, profile in enumerate(profiles):
        tx = transmit_frame(
            profile,
            bits,
            samples_per_symbol,
            sample_rate_hz,
            rng.child(2, d),
            pulse_shape=pulse_shape,
            drive=drive,
        )
        for loc_idx, ch in enumerate(locations):
            rx = apply_channel(tx, ch, rng.child(3, d, loc_idx))
            recordings.append(
                FleetRecording(
                    device_id=f"dev{d:02d}",
                    location_id=ch.location_id,
                    profile=profile,
                    signal=rx,
                )
            )
    return recordings
