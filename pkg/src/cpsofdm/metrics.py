"""Closed-form signal metrics and their report container.

PSD model: with data of symbol energy es on the active grid positions, the
transmitted stream is block cyclostationary and its power spectral density is

    psd(w) = (es / block_len) * sum_{branches, slots} |phi_{k,m}(e^{jw})|^2,

where phi_{k,m} is the discrete-time Fourier transform of the corresponding
synthesis column.  Each |phi_{k,m}|^2 is a quadratic form in the shaping
vector, so the out-of-subband energy (the psd integrated over a frequency
mask) is p^H Omega p for a positive definite matrix Omega assembled here by
trapezoid quadrature.  The instantaneous-power moments (mean and variance)
likewise reduce to closed forms in the shaping vector; the quartic variance
expression is the optimization target elsewhere.
"""

from dataclasses import dataclass, field

import csv
import json
import os

import numpy as np

from .chain import modulate
from .config import WaveformConfig
from .errors import ConfigError, NumericError
from .precoder import precoding_matrix
from .shaping import ShapingSet


def dirichlet(theta: np.ndarray, length: int) -> np.ndarray:
    """sum_{n=0}^{length-1} exp(-1j*theta*n), stable at the 2*pi*k poles."""
    theta = np.asarray(theta, dtype=float)
    num = np.sin(length * theta / 2.0)
    den = np.sin(theta / 2.0)
    small = np.abs(den) < 1e-9
    ratio = np.empty_like(num)
    np.divide(num, den, out=ratio, where=~small)
    # l'Hopital at the poles: length * cos(L*t/2) / cos(t/2)
    ratio[small] = length * np.cos(length * theta[small] / 2.0) / np.cos(theta[small] / 2.0)
    return np.exp(-1j * theta * (length - 1) / 2.0) * ratio


@dataclass(frozen=True)
class FrequencyGrid:
    """Uniform pulsation grid on [-pi, pi) with an out-of-subband mask.

    `osb_weights` are circular trapezoid weights, nonzero on masked samples
    only, so sum(osb_weights * f(omega)) approximates the integral of f over
    the masked region.
    """
    omega: np.ndarray
    osb_mask: np.ndarray
    osb_weights: np.ndarray

    @property
    def step(self) -> float:
        return 2.0 * np.pi / len(self.omega)


def _trapezoid_weights(mask: np.ndarray, step: float) -> np.ndarray:
    weights = np.zeros(len(mask))
    if not mask.any():
        return weights
    if mask.all():
        weights[:] = step   # periodic: every sample interior
        return weights
    # split into circular runs of consecutive True samples
    idx = np.flatnonzero(mask)
    breaks = np.flatnonzero(np.diff(idx) > 1)
    runs = np.split(idx, breaks + 1)
    if mask[0] and mask[-1] and len(runs) > 1:
        runs[0] = np.concatenate([runs[-1], runs[0]])
        runs.pop()
    for run in runs:
        if len(run) == 1:
            weights[run[0]] = step
        else:
            weights[run] = step
            weights[run[0]] = step / 2.0
            weights[run[-1]] = step / 2.0
    return weights


def frequency_grid(cfg: WaveformConfig, samples_per_bin: int = 10,
                   guard_bins: int = 4, osb_bins=None) -> FrequencyGrid:
    """Sample the circle and mark the out-of-subband bins.

    By default the non-OSB region is the occupied subband extended by
    `guard_bins` on each side; pass `osb_bins` (iterable of subcarrier
    indices) to override, e.g. for asymmetric coexistence layouts.
    """
    if samples_per_bin < 1:
        raise ConfigError("samples_per_bin must be at least 1")
    n = cfg.nfft * samples_per_bin
    g = np.arange(n)
    omega = 2.0 * np.pi * (g - n // 2) / n
    if osb_bins is None:
        lo = cfg.first_bin - guard_bins
        hi = cfg.first_bin + cfg.n_active - 1 + guard_bins
        inside = np.arange(max(lo, 0), min(hi, cfg.nfft - 1) + 1)
        osb_bins = np.setdiff1d(np.arange(cfg.nfft), inside)
    else:
        osb_bins = np.unique(np.asarray(list(osb_bins), dtype=int) % cfg.nfft)
    # nearest-bin membership on the circle
    sample_bin = np.rint(omega * cfg.nfft / (2.0 * np.pi)).astype(int) % cfg.nfft
    mask = np.isin(sample_bin, osb_bins)
    if not mask.any():
        raise ConfigError("out-of-subband region is empty")
    return FrequencyGrid(omega=omega, osb_mask=mask,
                         osb_weights=_trapezoid_weights(mask, 2.0 * np.pi / n))


def synthesis_matrix(cfg: WaveformConfig, shaping: ShapingSet) -> np.ndarray:
    """Time-domain synthesis columns (block_len x n_active): GI o IFFT o precoder."""
    p_mat = precoding_matrix(shaping)
    return modulate(p_mat.T, cfg).T


def _response_rows(omega: np.ndarray, cfg: WaveformConfig, slot: int) -> np.ndarray:
    """Coefficients a(w, i) with phi_{k,slot}(w) = a(w) @ downshift(p, k*branch_len)."""
    n, gp = cfg.nfft, cfg.cp_len
    i = np.arange(cfg.n_active)
    bins = cfg.first_bin + i
    theta = omega[:, None] - 2.0 * np.pi * bins[None, :] / n
    dir_part = dirichlet(theta, n + gp)
    phase = np.exp(-2j * np.pi * (i * slot / cfg.branch_len + bins * gp / n))
    return dir_part * phase[None, :] / np.sqrt(n * cfg.branch_len)


def psd_closed_form(omega: np.ndarray, cfg: WaveformConfig, shaping: ShapingSet,
                    es: float = 1.0) -> np.ndarray:
    """Exact PSD of the block stream at the given pulsations (linear power)."""
    p = shaping.shaping
    out = np.zeros(len(omega))
    for m in cfg.active_slots:
        rows = _response_rows(np.asarray(omega, dtype=float), cfg, m)
        for k in cfg.active_branches:
            val = rows @ np.roll(p, k * cfg.branch_len)
            out += np.abs(val) ** 2
    return es / cfg.block_len * out


def psd_welch(stream: np.ndarray, cfg: WaveformConfig, n_grid: int) -> np.ndarray:
    """Averaged periodogram, one whole block per segment, rectangular window.

    Segment boundaries coincide with block boundaries, so for independent data
    this estimator is unbiased for psd_closed_form on the same grid.  Returned
    in ascending-pulsation order matching frequency_grid.
    """
    blk = cfg.block_len
    n_seg = len(stream) // blk
    if n_seg == 0:
        raise ConfigError("stream shorter than one block")
    if n_grid < blk:
        raise ConfigError("analysis grid must be at least one block long")
    segs = np.asarray(stream)[: n_seg * blk].reshape(n_seg, blk)
    spec = np.fft.fft(segs, n=n_grid, axis=1)
    acc = np.mean(np.abs(spec) ** 2, axis=0) / blk
    return np.fft.fftshift(acc)


def osbep_matrix(grid: FrequencyGrid, cfg: WaveformConfig, es: float = 1.0) -> np.ndarray:
    """Positive definite quadratic-form kernel of the out-of-subband energy.

    osbep(p) = p^H Omega p; assembled by quadrature of the per-column spectral
    responses over the masked region.  Raises NumericError if the quadrature
    grid is too coarse to keep the kernel positive definite.
    """
    s_total = cfg.n_active
    sel = grid.osb_mask
    if not sel.any():
        raise ConfigError("frequency grid has an empty out-of-subband region")
    w = grid.osb_weights[sel]
    omega = grid.omega[sel]
    acc = np.zeros((s_total, s_total), dtype=complex)
    for m in cfg.active_slots:
        rows = _response_rows(omega, cfg, m)
        base = np.einsum("g,gi,gj->ij", w, rows.conj(), rows)
        for k in cfg.active_branches:
            shift = k * cfg.branch_len
            acc += np.roll(base, (-shift, -shift), axis=(0, 1))
    omega_mat = es / cfg.block_len / (2.0 * np.pi) * acc
    omega_mat = (omega_mat + omega_mat.conj().T) / 2.0
    min_eig = float(np.linalg.eigvalsh(omega_mat)[0])
    if min_eig <= 0:
        raise NumericError(
            f"out-of-subband kernel not positive definite (min eig {min_eig:.3e}); "
            "refine samples_per_bin")
    return omega_mat


def osbep(shaping: ShapingSet, omega_mat: np.ndarray) -> float:
    """Out-of-subband energy of a shaping vector under a precomputed kernel."""
    p = shaping.shaping
    return float(np.real(p.conj() @ omega_mat @ p))


def mean_instantaneous_power(cfg: WaveformConfig, shaping: ShapingSet,
                             es: float = 1.0) -> float:
    """Average per-sample power of the IFFT core block (closed form)."""
    return cfg.n_data * es * shaping.energy / (cfg.nfft * cfg.branch_len)


def _power_profile(cfg: WaveformConfig, shaping: ShapingSet) -> np.ndarray:
    """|inner product|^2 of each data column with each core sample's steering row.

    Row order follows data_positions (branch-major), columns are time samples.
    """
    n, m_len = cfg.nfft, cfg.branch_len
    p = shaping.shaping
    i = np.arange(cfg.n_active)
    slot_ph = np.exp(-2j * np.pi * np.outer(np.asarray(cfg.active_slots), i) / m_len)
    time_ph = np.exp(2j * np.pi * np.outer(i, np.arange(n)) / n)
    prof = np.empty((cfg.n_data, n))
    row = 0
    for k in cfg.active_branches:
        q = np.roll(p, k * m_len)
        vals = slot_ph @ (q[:, None] * time_ph)
        cnt = len(cfg.active_slots)
        prof[row:row + cnt] = np.abs(vals) ** 2 / (n * m_len)
        row += cnt
    return prof


def variance_instantaneous_power(cfg: WaveformConfig, shaping: ShapingSet,
                                 fourth_moment: float, es: float = 1.0) -> float:
    """Closed-form variance of the per-sample power over one core block.

    fourth_moment is E{|d|^4} of the constellation (1.32 for 16-QAM at unit
    energy).  Uses the exact quartic expansion over data-position pairs.
    """
    prof = _power_profile(cfg, shaping)
    s1 = prof.sum(axis=0)
    s2 = (prof ** 2).sum(axis=0)
    fourth = fourth_moment * s2 + 2.0 * es ** 2 * (s1 ** 2 - s2)
    mu = mean_instantaneous_power(cfg, shaping, es)
    return float(np.mean(fourth) - mu ** 2)


def oversampled_blocks(symbols: np.ndarray, cfg: WaveformConfig,
                       oversample: int = 4) -> np.ndarray:
    """Subcarrier symbols -> oversampled transmitted blocks (GI included).

    Oversampling zero-pads the spectrum to oversample*nfft before the IFFT;
    bins at or above nfft/2 wrap to the negative-frequency end so the
    continuous envelope is the one the guard samples repeat.
    """
    symbols = np.atleast_2d(np.asarray(symbols, dtype=complex))
    if symbols.shape[1] != cfg.n_active:
        raise ConfigError(f"expected {cfg.n_active} subcarrier symbols per block")
    j, n = int(oversample), cfg.nfft
    if j < 1:
        raise ConfigError("oversample factor must be at least 1")
    bins = cfg.occupied_bins
    mapped = np.where(bins < n // 2, bins, bins + (j - 1) * n)
    spec = np.zeros((symbols.shape[0], j * n), dtype=complex)
    spec[:, mapped] = symbols
    core = np.sqrt(j) * np.fft.ifft(spec, axis=1, norm="ortho")
    g = j * cfg.gi_len
    if cfg.gi_type == "cp":
        return np.concatenate([core[:, core.shape[1] - g:], core], axis=1)
    if cfg.gi_type == "zp":
        return np.concatenate([core, np.zeros((core.shape[0], g))], axis=1)
    return core


def papr_db(blocks: np.ndarray) -> np.ndarray:
    """Per-block peak-to-average power ratio in dB."""
    blocks = np.atleast_2d(np.asarray(blocks))
    power = np.abs(blocks) ** 2
    return 10.0 * np.log10(power.max(axis=1) / power.mean(axis=1))


def papr_ccdf(samples_db: np.ndarray, thresholds_db: np.ndarray) -> np.ndarray:
    """Empirical complementary CDF of PAPR at the given thresholds."""
    s = np.sort(np.asarray(samples_db))
    idx = np.searchsorted(s, np.asarray(thresholds_db), side="right")
    return 1.0 - idx / len(s)


def papr_at_ccdf(samples_db: np.ndarray, level: float) -> float:
    """PAPR threshold exceeded with probability `level` (empirical quantile)."""
    if not 0 < level < 1:
        raise ConfigError("ccdf level must lie in (0, 1)")
    return float(np.quantile(np.asarray(samples_db), 1.0 - level))


def ber_count(tx_bits: np.ndarray, rx_bits: np.ndarray) -> tuple:
    """(errors, total, rate) between two equal-length bit arrays."""
    tx = np.asarray(tx_bits).reshape(-1)
    rx = np.asarray(rx_bits).reshape(-1)
    if tx.shape != rx.shape:
        raise ConfigError("bit arrays differ in length")
    errs = int(np.count_nonzero(tx != rx))
    return errs, tx.size, errs / tx.size if tx.size else 0.0


def spectral_efficiency(ber: float, bits_per_symbol: int, n_data: int,
                        blocks_per_tti: int, bandwidth_hz: float,
                        guard_hz: float, tti_s: float = 1e-3) -> float:
    """Goodput bits over one TTI, normalized by occupied plus guard bandwidth."""
    if bandwidth_hz + guard_hz <= 0 or tti_s <= 0:
        raise ConfigError("bandwidth and TTI must be positive")
    good_bits = bits_per_symbol * n_data * blocks_per_tti * (1.0 - ber)
    return good_bits / (tti_s * (bandwidth_hz + guard_hz))


def _float_cell(v) -> str:
    return repr(float(v))


@dataclass
class MetricReport:
    """Per-user metric bundle; serializes to JSON plus per-curve CSV files."""
    label: str
    scalars: dict = field(default_factory=dict)
    psd: dict = field(default_factory=dict)      # omega + named psd columns (linear)
    papr: dict = field(default_factory=dict)     # thresholds_db, ccdf, quantiles
    ber: list = field(default_factory=list)      # rows: ebn0_db, n_bits, n_errors, ber, se

    def to_json(self) -> str:
        def clean(obj):
            if isinstance(obj, dict):
                return {k: clean(v) for k, v in obj.items()}
            if isinstance(obj, (list, tuple)):
                return [clean(v) for v in obj]
            if isinstance(obj, np.ndarray):
                return [clean(v) for v in obj.tolist()]
            if isinstance(obj, (np.floating, np.integer)):
                return obj.item()
            return obj
        payload = {"label": self.label, "scalars": clean(self.scalars),
                   "papr_quantiles": clean(self.papr.get("quantiles", {})),
                   "ber": clean(self.ber)}
        return json.dumps(payload, indent=1, sort_keys=True)

    def write(self, outdir: str, stem: str = None) -> list:
        """Write JSON and CSV artifacts; returns the created paths."""
        os.makedirs(outdir, exist_ok=True)
        stem = stem or self.label
        paths = []

        path = os.path.join(outdir, f"{stem}_metrics.json")
        with open(path, "w") as fh:
            fh.write(self.to_json())
            fh.write("\n")
        paths.append(path)

        if self.psd:
            path = os.path.join(outdir, f"{stem}_psd.csv")
            keys = [k for k in self.psd if k != "omega"]
            with open(path, "w", newline="") as fh:
                wr = csv.writer(fh)
                wr.writerow(["omega_rad"] + keys)
                for row in zip(self.psd["omega"], *(self.psd[k] for k in keys)):
                    wr.writerow([_float_cell(v) for v in row])
            paths.append(path)

        if self.papr:
            path = os.path.join(outdir, f"{stem}_papr.csv")
            with open(path, "w", newline="") as fh:
                wr = csv.writer(fh)
                wr.writerow(["papr_db", "ccdf"])
                for t, c in zip(self.papr["thresholds_db"], self.papr["ccdf"]):
                    wr.writerow([_float_cell(t), _float_cell(c)])
            paths.append(path)

        if self.ber:
            path = os.path.join(outdir, f"{stem}_ber.csv")
            with open(path, "w", newline="") as fh:
                wr = csv.writer(fh)
                wr.writerow(["ebn0_db", "n_bits", "n_errors", "ber", "spectral_efficiency"])
                for row in self.ber:
                    wr.writerow([_float_cell(row["ebn0_db"]), int(row["n_bits"]),
                                 int(row["n_errors"]), _float_cell(row["ber"]),
                                 _float_cell(row["se"])])
            paths.append(path)
        return paths
