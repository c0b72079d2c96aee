"""Experiment drivers: impairment sweeps and cross-location classification.

Each driver fixes a full measurement protocol (payload, shaping, drive,
capture normalization, variance mode, window geometry) so results are
reproducible from a seed alone. The protocols differ per sweep because each
isolates a different mechanism:

* The amplifier sweep uses shaped pulses (the nonlinearity needs envelope
  variation to bite) and full-scale capture normalization, mirroring how a
  receiver ADC renormalizes its input; what remains in the variance is
  waveform-shape distortion.
* The imbalance sweep keeps a fixed capture gain, since per-stream amplitude
  asymmetry is itself the fingerprint, and rectangular shaping makes the
  stream-scaling effect on the dimension exactly predictable.
* The phase-noise sweep reads the oscillator jitter out of sample-to-sample
  increments at a low sample rate, where the per-sample phase slew is
  resolvable, averaging a few noise realizations per setting.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from fractalrf.core import IQSignal, RandomSource, WindowConfig
from fractalrf.features import (
    FeatureConfig,
    LabeledExample,
    Representation,
    make_examples,
    make_raw_examples,
    split_dataset,
)
from fractalrf.classify import ModelKind, evaluate, train
from fractalrf.txchain import (
    ChannelProfile,
    ProfileSpread,
    generate_payload,
    iq_imbalance,
    pa_nonlinearity,
    phase_noise,
    qam4_modulate,
    scale,
    synth_fleet,
)
from fractalrf.vfdt import DegenerateWindowError, VarianceMode, vfdt_trajectory

SWEEP_WINDOW = WindowConfig(1024, 256)
SWEEP_PAYLOAD_BITS = 16000
SWEEP_DRIVE = 0.2

PA_SETTINGS = (20.0, 25.0, 30.0, 35.0, 40.0)
IMBALANCE_SETTINGS = (0.0, 2.0, 4.0, 6.0, 8.0)
PHASE_NOISE_SETTINGS = (10.0, 20.0, 30.0, 40.0, 50.0)
PHASE_NOISE_REALIZATIONS = 4


@dataclass(frozen=True)
class SweepResult:
    """Per-setting mean trajectory values for the four derived streams.

    Streams whose variance is identically zero under a protocol (e.g. the
    magnitude of a constant-envelope signal) report NaN rather than failing
    the whole sweep.
    """

    impairment: str
    setting_label: str
    settings: tuple[float, ...]
    mean_vfdt_i: tuple[float, ...]
    mean_vfdt_q: tuple[float, ...]
    mean_vfdt_mag: tuple[float, ...]
    mean_vfdt_phase: tuple[float, ...]
    sem_vfdt_phase: tuple[float, ...]
    protocol: dict = field(default_factory=dict)


def _stream_stats(values, cfg: WindowConfig, mode: VarianceMode) -> tuple[float, float]:
    try:
        traj = vfdt_trajectory(values, cfg, mode).values
    except DegenerateWindowError:
        return float("nan"), float("nan")
    return float(traj.mean()), float(traj.std(ddof=1) / np.sqrt(traj.size))


def _sweep_streams(sig: IQSignal, cfg: WindowConfig, mode: VarianceMode) -> dict[str, tuple[float, float]]:
    return {
        "i": _stream_stats(sig.i_samples, cfg, mode),
        "q": _stream_stats(sig.q_samples, cfg, mode),
        "mag": _stream_stats(sig.magnitude, cfg, mode),
        "phase": _stream_stats(sig.unwrapped_phase, cfg, mode),
    }


def _full_scale(sig: IQSignal) -> IQSignal:
    """Normalize to ADC full scale: unit peak across both streams."""
    peak = max(np.abs(sig.i_samples).max(), np.abs(sig.q_samples).max())
    return scale(sig, 1.0 / peak)


def _collect(impairment, label, settings, per_setting, protocol) -> SweepResult:
    cols = {"i": [], "q": [], "mag": [], "phase": []}
    sems = []
    for stats in per_setting:
        for key in cols:
            cols[key].append(stats[key][0])
        sems.append(stats["phase"][1])
    return SweepResult(
        impairment=impairment,
        setting_label=label,
        settings=tuple(settings),
        mean_vfdt_i=tuple(cols["i"]),
        mean_vfdt_q=tuple(cols["q"]),
        mean_vfdt_mag=tuple(cols["mag"]),
        mean_vfdt_phase=tuple(cols["phase"]),
        sem_vfdt_phase=tuple(sems),
        protocol=protocol,
    )


def run_pa_sweep(rng: RandomSource, settings=PA_SETTINGS) -> SweepResult:
    """Amplifier nonlinearity sweep over intercept points (dBm).

    Protocol: 16k random bits, RRC shaping at 4 samples/symbol, drive 0.2,
    full-scale capture normalization, amplitude-variance windows of 1024
    samples shifted by 256. One payload is reused across settings, so
    setting-to-setting differences are deterministic.
    """
    bits = generate_payload(SWEEP_PAYLOAD_BITS, rng.child(0))
    clean = scale(qam4_modulate(bits, 4, 1e6, "rrc"), SWEEP_DRIVE)
    per_setting = []
    for iip3 in settings:
        captured = _full_scale(pa_nonlinearity(clean, iip3))
        per_setting.append(_sweep_streams(captured, SWEEP_WINDOW, VarianceMode.AMPLITUDE))
    protocol = {
        "payload_bits": SWEEP_PAYLOAD_BITS, "pulse_shape": "rrc",
        "samples_per_symbol": 4, "drive": SWEEP_DRIVE,
        "normalization": "full_scale", "mode": "amplitude",
        "window_len": SWEEP_WINDOW.window_len, "window_offset": SWEEP_WINDOW.window_offset,
    }
    return _collect("pa_nonlinearity", "iip3_dbm", settings, per_setting, protocol)


def run_imbalance_sweep(
    rng: RandomSource, settings=IMBALANCE_SETTINGS, pulse_shape: str = "rrc"
) -> SweepResult:
    """IQ amplitude imbalance sweep (dB) at fixed capture gain.

    Rectangular shaping gives the exactly predictable per-stream dimension
    shifts (at the price of a degenerate constant magnitude stream); RRC
    shaping adds envelope variation so the magnitude trend is measurable.
    """
    bits = generate_payload(SWEEP_PAYLOAD_BITS, rng.child(0))
    clean = scale(qam4_modulate(bits, 4, 1e6, pulse_shape), SWEEP_DRIVE)
    per_setting = []
    for db in settings:
        per_setting.append(
            _sweep_streams(iq_imbalance(clean, db), SWEEP_WINDOW, VarianceMode.AMPLITUDE)
        )
    protocol = {
        "payload_bits": SWEEP_PAYLOAD_BITS, "pulse_shape": pulse_shape,
        "samples_per_symbol": 4, "drive": SWEEP_DRIVE,
        "normalization": "none", "mode": "amplitude",
        "window_len": SWEEP_WINDOW.window_len, "window_offset": SWEEP_WINDOW.window_offset,
    }
    return _collect("iq_imbalance", "imbalance_db", settings, per_setting, protocol)


def run_phase_noise_sweep(
    rng: RandomSource,
    settings=PHASE_NOISE_SETTINGS,
    n_realizations: int = PHASE_NOISE_REALIZATIONS,
) -> SweepResult:
    """Phase-noise sweep over maximum frequency offsets (Hz).

    Protocol: rectangular shaping at 16 samples/symbol and a 500 Hz sample
    rate, where per-sample phase slew is large enough to register in
    increment variance; each setting averages a few independent noise
    realizations drawn from seeds shared across settings.
    """
    fs, sps = 500.0, 16
    bits = generate_payload(SWEEP_PAYLOAD_BITS, rng.child(0))
    clean = scale(qam4_modulate(bits, sps, fs, "rect"), SWEEP_DRIVE)
    per_setting = []
    for off in settings:
        acc: list[dict] = []
        for r in range(n_realizations):
            noisy = phase_noise(clean, off, rng.child(1, r))
            acc.append(_sweep_streams(noisy, SWEEP_WINDOW, VarianceMode.INCREMENT))
        merged = {
            key: (
                float(np.mean([a[key][0] for a in acc])),
                float(np.mean([a[key][1] for a in acc])),
            )
            for key in acc[0]
        }
        per_setting.append(merged)
    protocol = {
        "payload_bits": SWEEP_PAYLOAD_BITS, "pulse_shape": "rect",
        "samples_per_symbol": sps, "sample_rate_hz": fs, "drive": SWEEP_DRIVE,
        "normalization": "none", "mode": "increment",
        "n_realizations": n_realizations,
        "window_len": SWEEP_WINDOW.window_len, "window_offset": SWEEP_WINDOW.window_offset,
    }
    return _collect("phase_noise", "max_offset_hz", settings, per_setting, protocol)


# --- fleet classification experiments ---------------------------------------

FLEET_FRAME_BITS = 1024
FLEET_SPS = 4
FLEET_FS = 1e6

# Locations for the cross-location experiments: a strong training channel
# and two progressively noisier, slightly attenuated test channels.
DEFAULT_LOCATIONS = (
    ChannelProfile(0.0, 30.0, "loc1"),
    ChannelProfile(-0.3, 16.0, "loc2"),
    ChannelProfile(-0.6, 12.0, "loc3"),
)

# Devices are separated through amplifier compression and I/Q asymmetry.
# Oscillator effects are disabled: a linear probe cannot exploit the
# oscillation signatures they imprint, they only blur the comparison.
LINEAR_PROBE_SPREAD = ProfileSpread(
    phase_noise_max_offset_hz=(0.0, 0.0), cfo_hz=(0.0, 0.0)
)

# Scalability fleets pack 30 devices, so they draw from wider impairment
# ranges (device populations with more manufacturing dispersion) and are
# probed at milder channel severity.
SCALABILITY_SPREAD = ProfileSpread(
    iip3_dbm=(15.0, 40.0),
    iq_imbalance_db=(0.0, 12.0),
    phase_noise_max_offset_hz=(0.0, 0.0),
    cfo_hz=(0.0, 0.0),
)
SCALABILITY_LOCATIONS = (
    ChannelProfile(0.0, 30.0, "loc1"),
    ChannelProfile(-0.2, 24.0, "loc2"),
    ChannelProfile(-0.4, 20.0, "loc3"),
)


@dataclass(frozen=True)
class FleetExamples:
    """Per-location example pools for both representations."""

    vfdt: dict[str, list[LabeledExample]]
    rawiq: dict[str, list[LabeledExample]]
    device_ids: tuple[str, ...]
    locations: tuple[ChannelProfile, ...]


def build_fleet_examples(
    n_devices: int,
    rng: RandomSource,
    locations=DEFAULT_LOCATIONS,
    spread: ProfileSpread = LINEAR_PROBE_SPREAD,
    examples_per_recording: int = 40,
    raw_examples_per_recording: int = 128,
    feature_cfg: FeatureConfig = FeatureConfig(),
) -> FleetExamples:
    """Synthesize a fleet and extract both feature representations.

    The transmitted frame repeats every ``FLEET_FRAME_BITS / 2 * FLEET_SPS``
    samples, aligned with the raw example length, so raw examples carry
    stable per-device waveform templates.
    """
    frame_samples = FLEET_FRAME_BITS // 2 * FLEET_SPS
    need = examples_per_recording * feature_cfg.samples_per_example
    repeats = -(-need // frame_samples)
    recordings = synth_fleet(
        n_devices,
        list(locations),
        rng,
        spread=spread,
        n_bits=FLEET_FRAME_BITS,
        samples_per_symbol=FLEET_SPS,
        sample_rate_hz=FLEET_FS,
        payload_repeats=repeats,
    )
    device_ids = tuple(sorted({r.device_id for r in recordings}))
    label = {d: i for i, d in enumerate(device_ids)}
    vfdt: dict[str, list[LabeledExample]] = {}
    rawiq: dict[str, list[LabeledExample]] = {}
    for rec in recordings:
        dev = label[rec.device_id]
        vfdt.setdefault(rec.location_id, []).extend(
            make_examples(rec.signal, dev, rec.location_id, feature_cfg)[:examples_per_recording]
        )
        rawiq.setdefault(rec.location_id, []).extend(
            make_raw_examples(rec.signal, dev, rec.location_id)[:raw_examples_per_recording]
        )
    return FleetExamples(vfdt, rawiq, device_ids, tuple(locations))


@dataclass(frozen=True)
class LocationReport:
    """Accuracy of one representation trained on one location pool."""

    representation: Representation
    kind: ModelKind
    train_locations: tuple[str, ...]
    same_location_accuracy: float
    per_location_accuracy: dict[str, float]

    @property
    def cross_location_accuracy(self) -> float:
        others = [
            acc for loc, acc in self.per_location_accuracy.items()
            if loc not in self.train_locations
        ]
        return float(np.mean(others)) if others else float("nan")


def location_experiment(
    examples_by_loc: dict[str, list[LabeledExample]],
    representation: Representation,
    train_locations: tuple[str, ...] = ("loc1",),
    kind: ModelKind = ModelKind.SOFTMAX,
    train_fraction: float = 0.9,
    epochs: int = 30,
    learning_rate: float = 0.5,
    split_rng: RandomSource = RandomSource(7),
    train_rng: RandomSource = RandomSource(11),
    device_subset: int | None = None,
) -> LocationReport:
    """Train on pooled train-location data, evaluate everywhere.

    Held-out same-location accuracy comes from the train/test split; other
    locations are evaluated in full.
    """

    def use(ex: LabeledExample) -> bool:
        return device_subset is None or ex.device_label < device_subset

    pool = [ex for loc in train_locations for ex in examples_by_loc[loc] if use(ex)]
    train_set, held_out = split_dataset(pool, train_fraction, split_rng)
    n_classes = max(ex.device_label for ex in pool) + 1
    model = train(
        kind, train_set, epochs=epochs, learning_rate=learning_rate,
        rng=train_rng, n_classes=n_classes,
    )
    per_location = {}
    for loc in sorted(examples_by_loc):
        if loc in train_locations:
            test = [ex for ex in held_out if ex.location_label == loc]
        else:
            test = [ex for ex in examples_by_loc[loc] if use(ex)]
        per_location[loc] = evaluate(model, test).accuracy
    same = float(np.mean([per_location[loc] for loc in train_locations]))
    return LocationReport(
        representation=representation,
        kind=kind,
        train_locations=tuple(train_locations),
        same_location_accuracy=same,
        per_location_accuracy=per_location,
    )


def scalability_sweep(
    examples_by_loc: dict[str, list[LabeledExample]],
    device_counts=(10, 15, 20, 25, 30),
    kind: ModelKind = ModelKind.NEAREST_CENTROID,
    **kwargs,
) -> dict[int, LocationReport]:
    """Cross-location accuracy as the device count grows (nested subsets)."""
    return {
        k: location_experiment(
            examples_by_loc, Representation.VFDT, kind=kind, device_subset=k, **kwargs
        )
        for k in device_counts
    }
