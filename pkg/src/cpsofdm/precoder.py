"""Subband precoder: three equivalent routes from data grid to subcarrier symbols.

The precoder is the unitary subband DFT applied to a bank of circularly
shifted, prototype-filtered spreading columns.  Three implementations are kept
deliberately: the explicit matrix product (oracle path), the per-branch
frequency-domain fast path used by the simulator, and the characteristic-grid
factorization used by the optimizer.  They must agree to near machine
precision and the tests hold them to that.
"""

import numpy as np

from .config import WaveformConfig
from .dsp import dft_matrix, downshift, from_grid, to_grid, unitary_fft, unitary_ifft
from .errors import ConfigError
from .shaping import ShapingSet, dirichlet_shaping, rrc_shaping


def _check_dims(cfg: WaveformConfig, shaping: ShapingSet):
    if (cfg.n_branches, cfg.branch_len) != (shaping.n_branches, shaping.branch_len):
        raise ConfigError(
            f"shaping grid {shaping.branch_len}x{shaping.n_branches} does not match "
            f"waveform grid {cfg.branch_len}x{cfg.n_branches}")


def spreading_matrix(pulse: np.ndarray, n_branches: int, branch_len: int) -> np.ndarray:
    """Bank of time-frequency shifted prototype pulses, column order k*branch_len+m.

    Column (k, m) holds pulse[(s - m*n_branches) mod S] * exp(2j*pi*k*s/n_branches)
    over output sample s, scaled by the spreading normalization 1/sqrt(branch_len)
    that makes the bank consistent with the unitary-DFT factorizations (a flat
    prototype of unit energy then yields an exactly unitary precoder).
    """
    pulse = np.asarray(pulse, dtype=complex).reshape(-1)
    k_cnt, m_cnt = n_branches, branch_len
    s_total = k_cnt * m_cnt
    if len(pulse) != s_total:
        raise ConfigError(f"pulse length {len(pulse)} != {s_total}")
    s = np.arange(s_total)
    out = np.empty((s_total, s_total), dtype=complex)
    for k in range(k_cnt):
        tone = np.exp(2j * np.pi * k * s / k_cnt)
        for m in range(m_cnt):
            out[:, k * m_cnt + m] = pulse[(s - m * k_cnt) % s_total] * tone
    return out / np.sqrt(m_cnt)


def precoding_matrix(shaping: ShapingSet) -> np.ndarray:
    """Full precoder: subband DFT times the spreading matrix."""
    s_total = shaping.n_active
    a = spreading_matrix(shaping.pulse, shaping.n_branches, shaping.branch_len)
    return dft_matrix(s_total) @ a


def precode_direct(d: np.ndarray, shaping: ShapingSet) -> np.ndarray:
    """Oracle route: explicit matrix product."""
    return precoding_matrix(shaping) @ np.asarray(d, dtype=complex)


def precode_frequency(d: np.ndarray, shaping: ShapingSet) -> np.ndarray:
    """Fast route: per branch, tile the spread block, shape, circularly shift."""
    d = np.asarray(d, dtype=complex).reshape(-1)
    k_cnt, m_cnt = shaping.n_branches, shaping.branch_len
    p = shaping.shaping
    out = np.zeros(k_cnt * m_cnt, dtype=complex)
    for k in range(k_cnt):
        block = d[k * m_cnt:(k + 1) * m_cnt]
        if not np.any(block):
            continue
        spread = np.tile(unitary_fft(block), k_cnt)
        out += downshift(p * spread, k * m_cnt)
    return out


def precode_char_grid(d: np.ndarray, shaping: ShapingSet) -> np.ndarray:
    """Characteristic route: branch/slot double DFT around an entrywise product.

    The sqrt(energy/branch_len) factor keeps this route exact for any shaping
    energy; it collapses to 1 under the rho = branch_len convention.
    """
    k_cnt, m_cnt = shaping.n_branches, shaping.branch_len
    grid = to_grid(np.asarray(d, dtype=complex), m_cnt, k_cnt)
    grid = unitary_ifft(unitary_fft(grid, axis=0), axis=1)
    grid = shaping.char_grid * grid
    grid = unitary_fft(grid, axis=1)
    return np.sqrt(shaping.energy / m_cnt) * from_grid(grid)


def place_data(symbols: np.ndarray, cfg: WaveformConfig) -> np.ndarray:
    """Scatter data symbols onto the full (branch, slot) vector, zeros elsewhere.

    Accepts one block (n_data,) or a batch (n_blocks, n_data).
    """
    symbols = np.asarray(symbols, dtype=complex)
    batch = symbols.ndim == 2
    n = symbols.shape[0] if batch else 1
    if symbols.shape[-1] != cfg.n_data:
        raise ConfigError(f"expected {cfg.n_data} data symbols per block")
    full = np.zeros((n, cfg.n_active), dtype=complex)
    full[:, cfg.data_positions] = symbols.reshape(n, -1)
    return full if batch else full[0]


def data_columns(shaping: ShapingSet, cfg: WaveformConfig) -> np.ndarray:
    """Precoder columns restricted to the data-carrying grid positions."""
    _check_dims(cfg, shaping)
    return precoding_matrix(shaping)[:, cfg.data_positions]


def data_noise_penalty(shaping: ShapingSet, cfg: WaveformConfig) -> float:
    """Zero-forcing noise enhancement of the data-restricted precoder.

    Sum of reciprocal squared singular values; matches the full-grid
    penalty when every grid position carries data, and stays finite for
    shapings whose characteristic zeros fall outside the active grid.
    """
    svals = np.linalg.svd(data_columns(shaping, cfg), compute_uv=False)
    if svals[-1] <= 1e-9 * svals[0]:
        return float("inf")
    return float(np.sum(1.0 / svals ** 2))


LEGACY_KINDS = ("ofdma", "sc-fdma", "ss-sc-fdma", "zt-dft-s-ofdm")


def legacy_config(kind: str, n_active: int, nfft: int, first_bin: int,
                  gi_len: int, data_branch: int = 0):
    """Classic uplink waveforms expressed as (WaveformConfig, ShapingSet) pairs.

    ofdma          one-slot branches, impulse shaping: the precoder is I.
    sc-fdma        single branch, flat shaping: the precoder is the subband DFT.
    ss-sc-fdma     two branches, root-raised-cosine shaping (roll-off 1), data
                   on one branch only (`data_branch`): classic spectrum shaping.
    zt-dft-s-ofdm  DFT spreading without a guard interval; zero symbols at the
                   head (1) and tail (ceil(n_active*gi_len/nfft)) of the block
                   synthesize the soft zero tail, so `gi_len` only sizes the
                   tail and the emitted config carries no guard samples.
    """
    kind = kind.lower()
    if kind not in LEGACY_KINDS:
        raise ConfigError(f"unknown legacy kind {kind!r}, expected one of {LEGACY_KINDS}")
    if kind == "ofdma":
        cfg = WaveformConfig(nfft=nfft, gi_len=gi_len, gi_type="cp",
                             n_branches=n_active, branch_len=1, first_bin=first_bin)
        return cfg, ShapingSet.from_pulse(np.ones(n_active) / np.sqrt(n_active),
                                          n_active, 1)
    if kind == "sc-fdma":
        cfg = WaveformConfig(nfft=nfft, gi_len=gi_len, gi_type="cp",
                             n_branches=1, branch_len=n_active, first_bin=first_bin)
        return cfg, dirichlet_shaping(1, n_active)
    if kind == "ss-sc-fdma":
        if n_active % 2:
            raise ConfigError("ss-sc-fdma needs an even subcarrier count")
        half = n_active // 2
        if not 0 <= data_branch < 2:
            raise ConfigError("data_branch must be 0 or 1")
        cfg = WaveformConfig(nfft=nfft, gi_len=gi_len, gi_type="cp",
                             n_branches=2, branch_len=half, first_bin=first_bin,
                             active_branches=(data_branch,))
        return cfg, rrc_shaping(half)
    # zt-dft-s-ofdm
    tail = int(np.ceil(n_active * gi_len / nfft))
    n_zero = 1 + tail
    if n_zero >= n_active:
        raise ConfigError("zero tail leaves no data slots; shrink gi_len or grow n_active")
    cfg = WaveformConfig(nfft=nfft, gi_len=0, gi_type="none",
                         n_branches=1, branch_len=n_active, first_bin=first_bin,
                         active_slots=tuple(range(1, n_active - n_zero + 1)))
    return cfg, dirichlet_shaping(1, n_active)
