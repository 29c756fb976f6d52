"""Shared DSP primitives: unitary DFT, circular shifts, Gray QAM, seeded RNG."""

import zlib

import numpy as np


def dft_matrix(n: int) -> np.ndarray:
    """Unitary n-point DFT matrix, (k, l) entry exp(-2j*pi*k*l/n)/sqrt(n)."""
    k = np.arange(n)
    return np.exp(-2j * np.pi * np.outer(k, k) / n) / np.sqrt(n)


def unitary_fft(x: np.ndarray, axis: int = -1) -> np.ndarray:
    """Fast path for dft_matrix(n) @ x along the given axis."""
    return np.fft.fft(x, axis=axis, norm="ortho")


def unitary_ifft(x: np.ndarray, axis: int = -1) -> np.ndarray:
    """Fast path for dft_matrix(n).conj().T @ x along the given axis."""
    return np.fft.ifft(x, axis=axis, norm="ortho")


def downshift_permutation(size: int, shift: int) -> np.ndarray:
    """Circular downshift matrix C with (C @ v)[i] = v[(i - shift) % size]."""
    return np.roll(np.eye(size), shift % size, axis=0)


def downshift(v: np.ndarray, shift: int, axis: int = 0) -> np.ndarray:
    """Apply downshift_permutation without forming the matrix."""
    return np.roll(v, shift, axis=axis)


def to_grid(x: np.ndarray, rows: int, cols: int) -> np.ndarray:
    """Reshape a vector of length rows*cols so entry (m, k) is x[k*rows + m]."""
    return np.asarray(x).reshape(cols, rows).T


def from_grid(g: np.ndarray) -> np.ndarray:
    """Inverse of to_grid: stack columns back into one vector."""
    return np.asarray(g).T.reshape(-1)


def _gray_levels(bits_per_axis: int) -> tuple[np.ndarray, np.ndarray]:
    # Binary-reflected Gray labels over amplitude levels -(L-1), ..., -1, 1, ..., L-1
    # so neighbouring levels differ in exactly one bit.
    n = 1 << bits_per_axis
    codes = np.arange(n) ^ (np.arange(n) >> 1)
    levels = 2 * np.arange(n) - (n - 1)
    return codes, levels.astype(float)


class QamConstellation:
    """Square Gray-labeled QAM with unit average symbol energy.

    Bits map per symbol as [i_msb..i_lsb, q_msb..q_lsb]; each axis uses the
    binary-reflected Gray code over the amplitude levels, e.g. for 16-QAM
    00 -> -3, 01 -> -1, 11 -> +1, 10 -> +3 (before the 1/sqrt(10) scaling).
    """

    def __init__(self, order: int = 16):
        bits = int(np.log2(order))
        if 2 ** bits != order or bits % 2 != 0:
            raise ValueError(f"order must be an even power of two, got {order}")
        self.order = order
        self.bits_per_symbol = bits
        half = bits // 2
        codes, levels = _gray_levels(half)
        # mean square of one axis is (L^2 - 1)/3; two axes give E_s = 1 after scaling
        self._scale = np.sqrt(2.0 * (len(levels) ** 2 - 1) / 3.0)
        self._axis_levels = levels / self._scale
        self._axis_codes = codes
        # level indexed by Gray code, for direct bit -> amplitude lookup
        self._level_of_code = np.empty(len(codes))
        self._level_of_code[codes] = self._axis_levels
        self.table = self._build_table()

    def _build_table(self) -> np.ndarray:
        half = self.bits_per_symbol // 2
        idx = np.arange(self.order)
        i_code = idx >> half
        q_code = idx & ((1 << half) - 1)
        return self._level_of_code[i_code] + 1j * self._level_of_code[q_code]

    @property
    def energy(self) -> float:
        """Average symbol energy of the table (1 by construction)."""
        return float(np.mean(np.abs(self.table) ** 2))

    @property
    def fourth_moment(self) -> float:
        """E{|d|^4} of the table; 1.32 for 16-QAM."""
        return float(np.mean(np.abs(self.table) ** 4))


def qam_map(bits: np.ndarray, constellation: QamConstellation) -> np.ndarray:
    """Map a bit array (length divisible by bits_per_symbol) to symbols."""
    b = np.asarray(bits).reshape(-1, constellation.bits_per_symbol)
    weights = 1 << np.arange(constellation.bits_per_symbol - 1, -1, -1)
    return constellation.table[b @ weights]


def qam_demap(symbols: np.ndarray, constellation: QamConstellation) -> np.ndarray:
    """Hard-decision demap (per-axis nearest level) back to bits."""
    half = constellation.bits_per_symbol // 2
    levels = constellation._axis_levels
    codes = constellation._axis_codes
    sym = np.asarray(symbols).reshape(-1)
    i_idx = np.argmin(np.abs(sym.real[:, None] - levels[None, :]), axis=1)
    q_idx = np.argmin(np.abs(sym.imag[:, None] - levels[None, :]), axis=1)
    packed = (codes[i_idx] << half) | codes[q_idx]
    shifts = np.arange(constellation.bits_per_symbol - 1, -1, -1)
    return ((packed[:, None] >> shifts[None, :]) & 1).reshape(-1)


def make_rng(seed: int) -> np.random.Generator:
    """Deterministic generator; identical seed gives an identical stream."""
    return np.random.default_rng(seed)


def child_rng(seed: int, *key) -> np.random.Generator:
    """Independent child stream addressed by a stable key, not spawn order.

    String key parts hash via crc32 so ("user", 2) and ("noise",) always land
    on the same streams for a given master seed, regardless of how many other
    children exist.
    """
    parts = tuple(
        zlib.crc32(p.encode()) if isinstance(p, str) else int(p) for p in key
    )
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=parts))
