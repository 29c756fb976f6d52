"""Waveform numerology: FFT sizing, guard interval, subband layout, data grid.

A waveform occupies ``n_active`` contiguous subcarriers starting at
``first_bin`` on an ``nfft``-point grid.  The precoder tiles those bins into
``n_branches`` circular shifts (stride ``branch_len``) of one shaped
``branch_len``-point DFT-spread block, so ``n_active = n_branches * branch_len``.
Data symbols live on the (branch, slot) grid positions listed in
``active_branches`` x ``active_slots``; the remaining positions carry zeros.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

GI_TYPES = ("cp", "zp", "none")


@dataclass(frozen=True)
class WaveformConfig:
    nfft: int
    gi_len: int
    gi_type: str
    n_branches: int
    branch_len: int
    first_bin: int
    active_branches: tuple = None
    active_slots: tuple = None

    def __post_init__(self):
        if self.gi_type not in GI_TYPES:
            raise ConfigError(f"gi_type must be one of {GI_TYPES}, got {self.gi_type!r}")
        if self.gi_type == "none" and self.gi_len != 0:
            raise ConfigError("gi_type 'none' requires gi_len = 0")
        if self.gi_type != "none" and not 0 < self.gi_len <= self.nfft:
            raise ConfigError(f"gi_len must lie in (0, nfft], got {self.gi_len}")
        if self.n_branches < 1 or self.branch_len < 1:
            raise ConfigError("n_branches and branch_len must be positive")
        if self.n_active > self.nfft:
            raise ConfigError(f"{self.n_active} active bins exceed nfft = {self.nfft}")
        if not 0 <= self.first_bin <= self.nfft - self.n_active:
            raise ConfigError(f"first_bin {self.first_bin} pushes the subband off the grid")
        branches = tuple(range(self.n_branches)) if self.active_branches is None \
            else tuple(sorted(set(int(b) for b in self.active_branches)))
        slots = tuple(range(self.branch_len)) if self.active_slots is None \
            else tuple(sorted(set(int(s) for s in self.active_slots)))
        if not branches or any(not 0 <= b < self.n_branches for b in branches):
            raise ConfigError(f"active_branches must be a nonempty subset of 0..{self.n_branches - 1}")
        if not slots or any(not 0 <= s < self.branch_len for s in slots):
            raise ConfigError(f"active_slots must be a nonempty subset of 0..{self.branch_len - 1}")
        object.__setattr__(self, "active_branches", branches)
        object.__setattr__(self, "active_slots", slots)

    @property
    def n_active(self) -> int:
        """Occupied subcarrier count (branches times slots per branch)."""
        return self.n_branches * self.branch_len

    @property
    def occupied_bins(self) -> np.ndarray:
        return np.arange(self.first_bin, self.first_bin + self.n_active)

    @property
    def data_positions(self) -> np.ndarray:
        """Indices into the length-n_active symbol vector that carry data."""
        k = np.asarray(self.active_branches)
        m = np.asarray(self.active_slots)
        return (k[:, None] * self.branch_len + m[None, :]).reshape(-1)

    @property
    def n_data(self) -> int:
        return len(self.active_branches) * len(self.active_slots)

    @property
    def block_len(self) -> int:
        """Transmitted samples per block including the guard interval."""
        return self.nfft + self.gi_len

    @property
    def cp_len(self) -> int:
        """Cyclic-prefix length entering the spectral model (0 for zp/none)."""
        return self.gi_len if self.gi_type == "cp" else 0
