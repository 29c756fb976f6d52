import numpy as np
import pytest

from cpsofdm.config import WaveformConfig
from cpsofdm.shaping import ShapingSet, dirichlet_shaping, rrc_shaping


@pytest.fixture
def rng():
    return np.random.default_rng(20260822)


def toy_config(nfft=32, gi_len=4, gi_type="cp", n_branches=2, branch_len=4,
               first_bin=5, **kw):
    return WaveformConfig(nfft=nfft, gi_len=gi_len, gi_type=gi_type,
                          n_branches=n_branches, branch_len=branch_len,
                          first_bin=first_bin, **kw)


def random_shaping(rng, n_branches, branch_len, energy=None):
    s = n_branches * branch_len
    p = rng.standard_normal(s) + 1j * rng.standard_normal(s)
    if energy is not None:
        p *= np.sqrt(energy / np.sum(np.abs(p) ** 2))
    return ShapingSet(shaping=p, n_branches=n_branches, branch_len=branch_len)


def desk_case1b():
    """Desk-scale single-user layout used across metric and optimizer tests."""
    cfg = WaveformConfig(nfft=128, gi_len=9, gi_type="cp", n_branches=2,
                         branch_len=12, first_bin=26,
                         active_slots=tuple(range(1, 12)))
    return cfg, rrc_shaping(12)


def unitary_toy(nfft=64, gi_len=9, first_bin=10, n_branches=2, branch_len=8):
    cfg = WaveformConfig(nfft=nfft, gi_len=gi_len, gi_type="cp",
                         n_branches=n_branches, branch_len=branch_len,
                         first_bin=first_bin)
    return cfg, dirichlet_shaping(n_branches, branch_len)
