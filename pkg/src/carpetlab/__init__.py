"""Quantum carpets of a particle in a box.

The probability density of a wave packet in an infinitely deep box is
computed in several equivalent ways: the direct eigenfunction sum, the
split into four double sums, a superposition of Wigner-function slices
along world lines, and the fractional-revival sum of displaced copies.
"""
from .box_basis import BoxConfig, eigenfunction, energy, phase_factor, scaled_energy, wave_number
from .errors import (
    BudgetExceededError,
    CarpetError,
    ConfigError,
    PerturbativityWarning,
    QuadratureError,
    TruncationError,
    WallOverlapWarning,
)
from .wavepacket import GaussianPacket, SampledPacket, SpectralCoefficients, project

__version__ = "0.1.0"

__all__ = [
    "BoxConfig",
    "BudgetExceededError",
    "CarpetError",
    "ConfigError",
    "GaussianPacket",
    "PerturbativityWarning",
    "QuadratureError",
    "SampledPacket",
    "SpectralCoefficients",
    "TruncationError",
    "WallOverlapWarning",
    "eigenfunction",
    "energy",
    "phase_factor",
    "project",
    "scaled_energy",
    "wave_number",
    "__version__",
]
