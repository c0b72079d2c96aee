import pytest
import torch

from cnnref.model import (
    BadClassCountError,
    FingerprintCNN,
    N_CONV_BLOCKS,
    N_FC_BLOCKS,
    build_model,
    layer_table,
)


class TestArchitecture:
    def test_thirty_devices_thirty_logits(self):
        model = build_model(30)
        out = model.eval()(torch.zeros(1, 1, 2, 1024))
        assert out.shape == (1, 30)

    def test_batching_shape(self):
        model = build_model(12)
        out = model.eval()(torch.zeros(8, 1, 2, 1024))
        assert out.shape == (8, 12)

    def test_accepts_unbatched_channel(self):
        model = build_model(5)
        out = model.eval()(torch.zeros(4, 2, 1024))
        assert out.shape == (4, 5)

    def test_block_counts(self):
        model = build_model(10)
        assert len(model.conv_blocks) == N_CONV_BLOCKS == 6
        assert len(model.fc_blocks) == N_FC_BLOCKS == 3
        for block in model.conv_blocks:
            kinds = [type(m).__name__ for m in block]
            assert kinds == ["Conv2d", "BatchNorm2d", "LeakyReLU", "MaxPool2d"]
        for block in model.fc_blocks:
            kinds = [type(m).__name__ for m in block]
            assert kinds == ["Linear", "Dropout", "LeakyReLU"]

    def test_each_pooling_stage_halves_temporal_extent(self):
        table = layer_table(build_model(10))
        extents = [row["temporal_extent"] for row in table if "temporal_extent" in row]
        assert extents == [512, 256, 128, 64, 32, 16]

    def test_head_width_follows_class_count(self):
        table = layer_table(build_model(30))
        assert table[-1]["output_shape"] == [30]

    def test_changing_class_count_touches_only_head(self):
        def param_counts(n):
            model = build_model(n)
            conv = sum(sum(p.numel() for p in b.parameters()) for b in model.conv_blocks)
            fc = sum(sum(p.numel() for p in b.parameters()) for b in model.fc_blocks)
            head = sum(p.numel() for p in model.head.parameters())
            return conv, fc, head

        conv10, fc10, head10 = param_counts(10)
        conv30, fc30, head30 = param_counts(30)
        assert conv10 == conv30
        assert fc10 == fc30
        assert head30 == head10 + 20 * (64 + 1)

    def test_bad_class_count(self):
        with pytest.raises(BadClassCountError):
            build_model(1)

    def test_deterministic_construction(self):
        torch.manual_seed(3)
        a = FingerprintCNN(4)
        torch.manual_seed(3)
        b = FingerprintCNN(4)
        for pa, pb in zip(a.parameters(), b.parameters()):
            assert torch.equal(pa, pb)
