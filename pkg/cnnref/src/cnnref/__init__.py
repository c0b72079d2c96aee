"""Reference CNN for 2x1024 fingerprint example files."""

from cnnref.datafile import FileFormatMismatchError, load_examples
from cnnref.model import BadClassCountError, FingerprintCNN, build_model, layer_table
from cnnref.train import train_cnn

__all__ = [
    "BadClassCountError",
    "FileFormatMismatchError",
    "FingerprintCNN",
    "build_model",
    "layer_table",
    "load_examples",
    "train_cnn",
]
