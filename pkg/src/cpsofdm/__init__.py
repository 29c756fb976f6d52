"""Circularly pulse-shaped precoded OFDM: waveform, metrics, shaping optimization."""

__version__ = "0.1.0"

from .config import WaveformConfig
from .shaping import ShapingSet, dirichlet_shaping, is_invertible, is_unitary, nep, rrc_shaping
from .precoder import (
    data_columns,
    data_noise_penalty,
    legacy_config,
    precode_char_grid,
    precode_direct,
    precode_frequency,
    precoding_matrix,
)

__all__ = [
    "WaveformConfig",
    "ShapingSet",
    "dirichlet_shaping",
    "rrc_shaping",
    "nep",
    "is_unitary",
    "is_invertible",
    "legacy_config",
    "data_columns",
    "data_noise_penalty",
    "precoding_matrix",
    "precode_direct",
    "precode_frequency",
    "precode_char_grid",
]
