"""Training runs, including the acceptance-level integration.

The integration fixture produces real example files through the producer's
exporter script (the example-file format is the only interface crossed) and
is session-scoped because synthesizing the fleet takes tens of seconds.
"""

import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from cnnref.train import train_cnn
from test_datafile import write_example_file

EXPORTER = Path(__file__).resolve().parents[2] / "scripts" / "export_probe_fleet.py"


@pytest.fixture(scope="session")
def probe_fleet_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("fleet")
    subprocess.run(
        [sys.executable, str(EXPORTER), "--out", str(out)],
        check=True,
        cwd=EXPORTER.parents[1],
    )
    return out


class TestToyTraining:
    def test_report_schema(self, tmp_path):
        # Separable toy set: class anchors far apart.
        path = tmp_path / "toy.bin"
        records = write_example_file(path, n=40, n_classes=2, seed=1)
        data = path.read_bytes()
        # shift class-1 features to make the task learnable
        import numpy as np
        from cnnref.datafile import RECORD_DTYPE

        header, payload = data.split(b"\n", 1)
        arr = np.frombuffer(payload, dtype=RECORD_DTYPE).copy()
        arr["features"][arr["device_label"] == 1] += 5.0
        path.write_bytes(header + b"\n" + arr.tobytes())

        report = train_cnn(path, tmp_path / "run", epochs=3, seed=1)
        assert set(report) >= {
            "accuracy", "n_classes", "confusion", "per_location",
            "same_location_accuracy", "cross_location_accuracy",
            "train_locations", "representation",
        }
        confusion = np.array(report["confusion"])
        assert confusion.shape == (2, 2)
        assert (tmp_path / "run" / "checkpoint.pt").exists()
        assert (tmp_path / "run" / "report.json").exists()
        assert (tmp_path / "run" / "confusion.csv").exists()

    def test_checkpoint_header_documents_configuration(self, tmp_path):
        import torch

        path = tmp_path / "toy.bin"
        write_example_file(path, n=30, n_classes=2, seed=2)
        train_cnn(path, tmp_path / "run", epochs=1, seed=0)
        saved = torch.load(tmp_path / "run" / "checkpoint.pt", weights_only=False)
        header = saved["header"]
        assert header["n_conv_blocks"] == 6
        assert header["n_fc_blocks"] == 3
        assert header["training"]["optimizer"] == "adam"
        assert header["training"]["epochs"] == 1
        extents = [r["temporal_extent"] for r in header["layer_table"] if "temporal_extent" in r]
        assert extents == [512, 256, 128, 64, 32, 16]


@pytest.mark.slow
class TestProbeFleetIntegration:
    def test_criterion_vfdt_same_domain_and_gap(self, probe_fleet_dir, tmp_path):
        vfdt = train_cnn(
            probe_fleet_dir / "examples_vfdt.bin", tmp_path / "vfdt",
            epochs=30, seed=0,
        )
        assert vfdt["same_location_accuracy"] >= 0.95, vfdt["same_location_accuracy"]

        rawiq = train_cnn(
            probe_fleet_dir / "examples_rawiq.bin", tmp_path / "rawiq",
            epochs=30, seed=0,
        )
        assert vfdt["cross_location_accuracy"] > rawiq["cross_location_accuracy"], (
            vfdt["cross_location_accuracy"], rawiq["cross_location_accuracy"],
        )
        print(
            f"[PASS] CNN replica: 6 conv + 3 FC blocks; VFDT same-domain "
            f"{vfdt['same_location_accuracy']:.3f} (>= 0.95); cross-location VFDT "
            f"{vfdt['cross_location_accuracy']:.3f} > raw {rawiq['cross_location_accuracy']:.3f}"
        )

    def test_report_schema_matches_primary(self, probe_fleet_dir, tmp_path):
        report = train_cnn(
            probe_fleet_dir / "examples_vfdt.bin", tmp_path / "schema",
            epochs=1, seed=0,
        )
        payload = json.loads((tmp_path / "schema" / "report.json").read_text())
        # the primary evaluator's report keys, same types
        assert isinstance(payload["accuracy"], float)
        assert isinstance(payload["n_classes"], int)
        assert isinstance(payload["confusion"], list)
        assert isinstance(payload["per_location"], dict)
        n = payload["n_classes"]
        assert len(payload["confusion"]) == n
        assert all(len(row) == n for row in payload["confusion"])
        assert report["n_classes"] == 10
