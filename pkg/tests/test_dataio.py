import json
import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fractalrf.core import IQSignal, RandomSource
from fractalrf.dataio import (
    BadSidecarError,
    DanglingSidecarError,
    DuplicatePairError,
    IoFailureError,
    OddFloatCountError,
    RecordingMeta,
    build_manifest,
    load_manifest,
    read_iq,
    write_iq,
)


def meta(device="dev00", location="loc1", fs=1e6):
    return RecordingMeta(device_id=device, location_id=location, sample_rate_hz=fs)


class TestWriteRead:
    def test_three_samples_is_24_bytes(self, tmp_path):
        sig = IQSignal([1.0, 2.0, 3.0], [4.0, 5.0, 6.0], 1e6)
        path = tmp_path / "x.iq"
        write_iq(sig, meta(), path)
        assert path.stat().st_size == 24

    def test_documented_byte_layout(self, tmp_path):
        sig = IQSignal([1.0], [-1.0], 1e6)
        path = tmp_path / "x.iq"
        write_iq(sig, meta(), path)
        assert path.read_bytes() == bytes.fromhex("0000803f000080bf")

    def test_interleave_order(self, tmp_path):
        sig = IQSignal([1.0, 3.0], [2.0, 4.0], 1e6)
        path = tmp_path / "x.iq"
        write_iq(sig, meta(), path)
        floats = struct.unpack("<4f", path.read_bytes())
        assert floats == (1.0, 2.0, 3.0, 4.0)

    def test_round_trip(self, tmp_path):
        gen = RandomSource(1).generator()
        sig = IQSignal(gen.standard_normal(1000), gen.standard_normal(1000), 45e6)
        path = tmp_path / "x.iq"
        write_iq(sig, meta(fs=45e6), path)
        back, back_meta = read_iq(path)
        assert np.array_equal(back.i_samples, sig.i_samples.astype(np.float32))
        assert np.array_equal(back.q_samples, sig.q_samples.astype(np.float32))
        assert back_meta.device_id == "dev00"
        assert back_meta.sample_rate_hz == 45e6

    def test_million_sample_round_trip_bitwise(self, tmp_path):
        gen = RandomSource(2).generator()
        sig = IQSignal(
            gen.standard_normal(1_000_000), gen.standard_normal(1_000_000), 45e6
        )
        path = tmp_path / "big.iq"
        write_iq(sig, meta(), path)
        first = path.read_bytes()
        back, m = read_iq(path)
        write_iq(back, m, tmp_path / "big2.iq")
        assert (tmp_path / "big2.iq").read_bytes() == first

    @given(
        values=st.lists(
            st.floats(width=32, allow_nan=False, allow_infinity=False),
            min_size=1,
            max_size=32,
        )
    )
    @settings(max_examples=50, deadline=None)
    def test_all_finite_float32_round_trip(self, tmp_path_factory, values):
        tmp = tmp_path_factory.mktemp("rt")
        sig = IQSignal(values, values[::-1], 1e6)
        write_iq(sig, meta(), tmp / "x.iq")
        back, _ = read_iq(tmp / "x.iq")
        assert np.array_equal(
            np.asarray(back.i_samples, dtype=np.float32),
            np.asarray(values, dtype=np.float32),
        )

    def test_negative_zero_preserved(self, tmp_path):
        sig = IQSignal([-0.0], [0.0], 1e6)
        path = tmp_path / "x.iq"
        write_iq(sig, meta(), path)
        i_bits = path.read_bytes()[:4]
        assert i_bits == struct.pack("<f", -0.0)
        assert i_bits != struct.pack("<f", 0.0)

    def test_truncated_file_rejected(self, tmp_path):
        path = tmp_path / "bad.iq"
        path.write_bytes(b"\x00" * 23)
        with pytest.raises(OddFloatCountError):
            read_iq(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(IoFailureError):
            read_iq(tmp_path / "absent.iq")

    def test_missing_sidecar_defaults_with_warning(self, tmp_path):
        path = tmp_path / "x.iq"
        path.write_bytes(struct.pack("<2f", 0.5, -0.5))
        with pytest.warns(UserWarning, match="sidecar"):
            sig, m = read_iq(path)
        assert m.sample_rate_hz == 45e6
        assert m.center_freq_hz == 2.412e9
        assert "defaults applied" in m.capture_notes

    def test_malformed_sidecar(self, tmp_path):
        path = tmp_path / "x.iq"
        path.write_bytes(struct.pack("<2f", 0.5, -0.5))
        (tmp_path / "x.iq.json").write_text("{not json")
        with pytest.raises(BadSidecarError):
            read_iq(path)


def write_recording(directory, device, location, n=4):
    gen = RandomSource(hash((device, location)) % 2**32).generator()
    sig = IQSignal(gen.standard_normal(n), gen.standard_normal(n), 1e6)
    write_iq(sig, meta(device, location), directory / f"{device}_{location}.iq")


class TestManifest:
    def test_fleet_directory(self, tmp_path):
        # 30 devices x 5 locations, the full-size corpus layout
        for d in range(30):
            for l in range(5):
                write_recording(tmp_path, f"dev{d:02d}", f"loc{l}")
        corpus = build_manifest(tmp_path)
        assert len(corpus) == 150
        entries = json.loads(corpus.manifest_path.read_text())
        assert len(entries) == 150
        assert [e["path"] for e in entries] == sorted(e["path"] for e in entries)

    def test_empty_directory_is_empty_corpus(self, tmp_path):
        corpus = build_manifest(tmp_path)
        assert len(corpus) == 0

    def test_duplicate_pair_rejected(self, tmp_path):
        write_recording(tmp_path, "dev00", "loc1")
        sig, m = read_iq(tmp_path / "dev00_loc1.iq")
        write_iq(sig, m, tmp_path / "copy.iq")
        with pytest.raises(DuplicatePairError):
            build_manifest(tmp_path)

    def test_dangling_sidecar_rejected(self, tmp_path):
        (tmp_path / "ghost.iq.json").write_text(
            json.dumps({"device_id": "d", "location_id": "l", "sample_rate_hz": 1.0})
        )
        with pytest.raises(DanglingSidecarError):
            build_manifest(tmp_path)

    def test_stable_rebuild(self, tmp_path):
        for d in range(3):
            write_recording(tmp_path, f"dev{d:02d}", "loc1")
        first = build_manifest(tmp_path).manifest_path.read_text()
        second = build_manifest(tmp_path).manifest_path.read_text()
        assert first == second

    def test_load_round_trip(self, tmp_path):
        write_recording(tmp_path, "dev00", "loc1")
        write_recording(tmp_path, "dev01", "loc1")
        build_manifest(tmp_path)
        corpus = load_manifest(tmp_path)
        assert len(corpus) == 2
        devices = {m.device_id for m, _ in corpus.recordings}
        assert devices == {"dev00", "dev01"}

    def test_load_without_manifest(self, tmp_path):
        with pytest.raises(IoFailureError):
            load_manifest(tmp_path)

    def test_bare_iq_without_sidecar_skipped(self, tmp_path):
        write_recording(tmp_path, "dev00", "loc1")
        (tmp_path / "orphan.iq").write_bytes(struct.pack("<2f", 1.0, 2.0))
        corpus = build_manifest(tmp_path)
        assert len(corpus) == 1
