"""Block transmit/receive chain: subcarrier mapping, guard interval, FDE.

All routines accept a single block or a batch stacked on the first axis.
Subcarrier symbol vectors map onto the occupied bins of the nfft grid through
the unitary IFFT; the receiver mirrors that with a unitary FFT, so white time
noise of variance n0 per sample stays white with variance n0 per bin.
"""

import numpy as np

from .config import WaveformConfig
from .errors import ConfigError


def modulate(symbols: np.ndarray, cfg: WaveformConfig) -> np.ndarray:
    """Subcarrier symbols (n_active) -> transmitted block (nfft + gi_len)."""
    symbols = np.asarray(symbols, dtype=complex)
    batched = symbols.ndim == 2
    symbols = np.atleast_2d(symbols)
    n_blk = symbols.shape[0]
    if symbols.shape[1] != cfg.n_active:
        raise ConfigError(f"expected {cfg.n_active} subcarrier symbols")
    spec = np.zeros((n_blk, cfg.nfft), dtype=complex)
    spec[:, cfg.occupied_bins] = symbols
    core = np.fft.ifft(spec, axis=1, norm="ortho")
    if cfg.gi_type == "cp":
        out = np.concatenate([core[:, cfg.nfft - cfg.gi_len:], core], axis=1)
    elif cfg.gi_type == "zp":
        out = np.concatenate([core, np.zeros((n_blk, cfg.gi_len))], axis=1)
    else:
        out = core
    return out if batched else out[0]


def serialize(blocks: np.ndarray) -> np.ndarray:
    """Concatenate a (n_blocks, block_len) batch into one sample stream."""
    return np.asarray(blocks).reshape(-1)


def frame(stream: np.ndarray, cfg: WaveformConfig) -> np.ndarray:
    """Split a stream back into whole blocks, dropping any ragged tail."""
    n_blk = len(stream) // cfg.block_len
    return np.asarray(stream)[: n_blk * cfg.block_len].reshape(n_blk, cfg.block_len)


def receive_block(blocks: np.ndarray, cfg: WaveformConfig) -> np.ndarray:
    """Received block(s) -> subcarrier observations on the occupied bins.

    cp    drop the prefix;
    zp    fold the tail back onto the head (overlap-add), restoring circularity
          for any channel shorter than the guard;
    none  take the block as is and tolerate the inter-block interference.
    """
    blocks = np.asarray(blocks, dtype=complex)
    batched = blocks.ndim == 2
    blocks = np.atleast_2d(blocks)
    if blocks.shape[1] != cfg.block_len:
        raise ConfigError(f"expected blocks of {cfg.block_len} samples")
    if cfg.gi_type == "cp":
        core = blocks[:, cfg.gi_len:]
    elif cfg.gi_type == "zp":
        core = blocks[:, : cfg.nfft].copy()
        core[:, : cfg.gi_len] += blocks[:, cfg.nfft:]
    else:
        core = blocks
    spec = np.fft.fft(core, axis=1, norm="ortho")
    out = spec[:, cfg.occupied_bins]
    return out if batched else out[0]


def channel_frequency(taps: np.ndarray, cfg: WaveformConfig) -> np.ndarray:
    """Channel frequency response on the occupied bins (plain DFT of the taps)."""
    return np.fft.fft(np.asarray(taps, dtype=complex), cfg.nfft)[cfg.occupied_bins]


def fde(received: np.ndarray, chan_freq: np.ndarray, data_cols: np.ndarray,
        n0: float, es: float = 1.0, mode: str = "mmse") -> np.ndarray:
    """Frequency-domain equalizer over the effective channel-times-precoder.

    zf     least squares on chan * data_cols;
    mmse   same normal equations regularized by n0/es.
    Returns the equalized data symbols (biased; see unbias_gains).
    """
    if mode not in ("zf", "mmse"):
        raise ConfigError(f"unknown equalizer mode {mode!r}")
    a = chan_freq[:, None] * data_cols
    gram = a.conj().T @ a
    if mode == "mmse":
        gram = gram + (n0 / es) * np.eye(a.shape[1])
    rhs = a.conj().T @ np.atleast_2d(received).T
    try:
        sol = np.linalg.solve(gram, rhs)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(f"equalizer normal equations singular: {exc}")
    out = sol.T
    return out if np.asarray(received).ndim == 2 else out[0]


def equalizer_matrix(chan_freq: np.ndarray, data_cols: np.ndarray,
                     n0: float, es: float = 1.0, mode: str = "mmse") -> np.ndarray:
    """Explicit equalizer matrix; fde() applies the same operator via solves."""
    a = chan_freq[:, None] * data_cols
    gram = a.conj().T @ a
    if mode == "mmse":
        gram = gram + (n0 / es) * np.eye(a.shape[1])
    return np.linalg.solve(gram, a.conj().T)


def unbias_gains(chan_freq: np.ndarray, data_cols: np.ndarray,
                 n0: float, es: float = 1.0, mode: str = "mmse") -> np.ndarray:
    """Per-stream gain of equalizer @ channel @ precoder (1 exactly for zf).

    With full channel knowledge the receiver knows this bias, so detection
    divides it out before the symbol decision.
    """
    a = chan_freq[:, None] * data_cols
    q = equalizer_matrix(chan_freq, data_cols, n0, es, mode)
    return np.real(np.einsum("ij,ji->i", q, a))
