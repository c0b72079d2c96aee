"""Variance-fractal-dimension fingerprinting of radio IQ streams."""

from fractalrf.core import (
    DomainError,
    FractalDimension,
    IQSignal,
    RandomSource,
    WindowConfig,
    validate_signal,
)
from fractalrf.vfdt import (
    VarianceMode,
    VFDTTrajectory,
    multiscale_dimension,
    variance_dimension,
    vfdt_trajectory,
)

__all__ = [
    "DomainError",
    "FractalDimension",
    "IQSignal",
    "RandomSource",
    "VFDTTrajectory",
    "VarianceMode",
    "WindowConfig",
    "multiscale_dimension",
    "validate_signal",
    "variance_dimension",
    "vfdt_trajectory",
]
