"""Reference convolutional architecture for 2x1024 fingerprint blocks.

Six convolutional blocks, each a 2-D convolution followed by batch
normalization, leaky ReLU, and max pooling, then three fully connected
blocks of linear / dropout / leaky ReLU, and one final linear layer sized to
the device count. The first convolution collapses the two input rows; every
pooling stage halves the temporal extent, 1024 -> 16 after block six.

Per-layer widths, kernel sizes, dropout rate, and the like are fixed to the
single configuration below and recorded in every checkpoint.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import torch
from torch import nn

N_CONV_BLOCKS = 6
N_FC_BLOCKS = 3


class BadClassCountError(Exception):
    """The head needs at least two device classes."""


@dataclass(frozen=True)
class CNNConfig:
    conv_channels: tuple[int, ...] = (8, 16, 32, 64, 64, 64)
    conv_kernel: int = 3
    pool: int = 2
    fc_widths: tuple[int, ...] = (256, 128, 64)
    dropout: float = 0.5
    leaky_slope: float = 0.01
    input_shape: tuple[int, int] = (2, 1024)


class FingerprintCNN(nn.Module):
    def __init__(self, n_devices: int, config: CNNConfig = CNNConfig()):
        super().__init__()
        if n_devices < 2:
            raise BadClassCountError(f"need >= 2 device classes, got {n_devices}")
        self.n_devices = n_devices
        self.config = config

        blocks = []
        in_ch = 1
        height = config.input_shape[0]
        for i, out_ch in enumerate(config.conv_channels):
            kernel = (height, config.conv_kernel) if i == 0 else (1, config.conv_kernel)
            padding = (0, config.conv_kernel // 2)
            blocks.append(
                nn.Sequential(
                    nn.Conv2d(in_ch, out_ch, kernel, padding=padding),
                    nn.BatchNorm2d(out_ch),
                    nn.LeakyReLU(config.leaky_slope),
                    nn.MaxPool2d((1, config.pool)),
                )
            )
            in_ch = out_ch
        self.conv_blocks = nn.ModuleList(blocks)

        temporal = config.input_shape[1] // config.pool ** len(config.conv_channels)
        flat = config.conv_channels[-1] * temporal
        fcs = []
        width_in = flat
        for width in config.fc_widths:
            fcs.append(
                nn.Sequential(
                    nn.Linear(width_in, width),
                    nn.Dropout(config.dropout),
                    nn.LeakyReLU(config.leaky_slope),
                )
            )
            width_in = width
        self.fc_blocks = nn.ModuleList(fcs)
        self.head = nn.Linear(width_in, n_devices)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        # (batch, 2, 1024) -> (batch, 1, 2, 1024)
        if x.dim() == 3:
            x = x.unsqueeze(1)
        for block in self.conv_blocks:
            x = block(x)
        x = torch.flatten(x, 1)
        for block in self.fc_blocks:
            x = block(x)
        return self.head(x)


def build_model(n_devices: int, config: CNNConfig = CNNConfig()) -> FingerprintCNN:
    """Construct the reference model and sanity-check its forward shape."""
    model = FingerprintCNN(n_devices, config)
    with torch.no_grad():
        probe = torch.zeros(1, 1, *config.input_shape)
        out = model.eval()(probe)
    assert out.shape == (1, n_devices)
    model.train()
    return model


def layer_table(model: FingerprintCNN) -> list[dict]:
    """Shape audit: output shape and parameter count per stage.

    Documents that each pooling stage halves the temporal extent.
    """
    rows = []
    x = torch.zeros(1, 1, *model.config.input_shape)
    with torch.no_grad():
        model.eval()
        for i, block in enumerate(model.conv_blocks):
            x = block(x)
            rows.append({
                "stage": f"conv_block_{i + 1}",
                "output_shape": list(x.shape[1:]),
                "temporal_extent": int(x.shape[-1]),
                "parameters": sum(p.numel() for p in block.parameters()),
            })
        x = torch.flatten(x, 1)
        for i, block in enumerate(model.fc_blocks):
            x = block(x)
            rows.append({
                "stage": f"fc_block_{i + 1}",
                "output_shape": list(x.shape[1:]),
                "parameters": sum(p.numel() for p in block.parameters()),
            })
        x = model.head(x)
        rows.append({
            "stage": "head",
            "output_shape": list(x.shape[1:]),
            "parameters": sum(p.numel() for p in model.head.parameters()),
        })
    model.train()
    return rows


def config_header(model: FingerprintCNN, **training) -> dict:
    """Checkpoint header: full architecture + training configuration."""
    return {
        "architecture": asdict(model.config),
        "n_devices": model.n_devices,
        "n_conv_blocks": N_CONV_BLOCKS,
        "n_fc_blocks": N_FC_BLOCKS,
        "layer_table": layer_table(model),
        "training": training,
    }
