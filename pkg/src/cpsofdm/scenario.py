"""Configuration-driven multiuser uplink runs.

A scenario file (TOML) describes one of three evaluation layouts on a shared
sample grid: a single user alone on its subband (case 1b), a target plus two
asynchronous same-numerology interferers with sample timing offsets (case 3),
or a target plus two synchronous interferers running a double-spacing
numerology whose blocks tile the target block exactly two to one (case 4).

Every random draw comes from a keyed child stream of the master seed, indexed
by (purpose, user, sweep point, batch), so results do not depend on execution
order or worker count, and a case-3 run with interferer powers forced to zero
reproduces the single-user run bit for bit.

The per-point noise variance follows the unit-energy constellation at the
receiver FFT grid: n0 = 1 / (bits_per_symbol * 10^(ebn0_db/10)).  With a
unitary precoder, identity amplifier, and flat channel this calibrates the
measured BER directly against the textbook AWGN curve.
"""

import hashlib
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
import tomli

from . import __version__
from .chain import (channel_frequency, fde, frame, modulate, receive_block,
                    serialize, unbias_gains)
from .channel import (ChannelProfile, awgn_profile, draw_taps,
                      exponential_profile, load_profile)
from .config import WaveformConfig
from .dsp import QamConstellation, child_rng, qam_demap, qam_map
from .errors import ConfigError
from .metrics import (MetricReport, frequency_grid, osbep_matrix,
                      oversampled_blocks, papr_at_ccdf, papr_ccdf, papr_db,
                      psd_closed_form, psd_welch, spectral_efficiency)
from .optimizer import OptimizerParams, design_shaping
from .pa import PaModel, load_pa_coeffs, pa_apply
from .precoder import data_columns, data_noise_penalty, legacy_config
from .shaping import ShapingSet, dirichlet_shaping, rrc_shaping

_CASES = ("1b", "3", "4")
_CHANNEL_KINDS = ("flat", "rayleigh", "exponential", "file")
_SHAPING_SOURCES = ("file", "legacy", "dirichlet", "rrc", "optimize")


@dataclass(frozen=True)
class UserSpec:
    label: str
    cfg: WaveformConfig
    shaping: ShapingSet
    timing_offset: int = 0
    power: float = 1.0
    rate_multiple: int = 1       # own blocks per target block period
    shaping_source: str = "dirichlet"
    optimize_opts: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ScenarioConfig:
    case: str
    seed: int
    users: tuple
    ebn0_db: tuple = ()
    n_blocks: int = 1000
    batch_blocks: int = 100
    guard_bins: int = 4
    subcarrier_spacing_hz: float = 15e3
    qam_order: int = 16
    equalizer: str = "mmse"
    blocks_per_tti: int = 14
    tti_s: float = 1e-3
    papr_blocks: int = 10000
    psd_blocks: int = 2000
    papr_oversample: int = 4
    samples_per_bin: int = 10
    pa: PaModel = field(default_factory=PaModel)
    channel_kind: str = "flat"
    channel_profile: ChannelProfile = None
    source_path: str = ""

    @property
    def target(self) -> UserSpec:
        return self.users[0]


def _require_keys(table: dict, allowed: set, required: set, where: str):
    unknown = set(table) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) {sorted(unknown)} in {where}")
    missing = required - set(table)
    if missing:
        raise ConfigError(f"missing key(s) {sorted(missing)} in {where}")


def _resolve_path(base_dir: str, path: str) -> str:
    return path if os.path.isabs(path) else os.path.join(base_dir, path)


_USER_KEYS = {"label", "nfft", "gi_len", "gi_type", "n_branches", "branch_len",
              "first_bin", "active_branches", "active_slots", "n_active",
              "timing_offset", "power", "shaping"}
_SHAPING_KEYS = {"source", "file", "kind", "data_branch", "energy",
                 "nep_tolerance", "osbep_factor", "ci_weight", "ci_tol",
                 "mm_tol", "max_ci_iters", "max_mm_iters", "rank_one_tol",
                 "solver", "samples_per_bin", "guard_bins"}
_OPT_PARAM_KEYS = ("nep_tolerance", "osbep_factor", "ci_weight", "ci_tol",
                   "mm_tol", "max_ci_iters", "max_mm_iters", "rank_one_tol",
                   "solver")


def _build_user(table: dict, idx: int, base_dir: str) -> UserSpec:
    where = f"users[{idx}]"
    _require_keys(table, _USER_KEYS, {"nfft", "gi_len", "gi_type"}, where)
    label = str(table.get("label", f"user{idx}"))
    sh_table = dict(table.get("shaping", {"source": "dirichlet"}))
    _require_keys(sh_table, _SHAPING_KEYS, {"source"}, f"{where}.shaping")
    source = sh_table["source"]
    if source not in _SHAPING_SOURCES:
        raise ConfigError(f"{where}: unknown shaping source {source!r}")

    if source == "legacy":
        if "n_active" not in table:
            raise ConfigError(f"{where}: legacy shaping needs n_active")
        cfg, shaping = legacy_config(
            sh_table.get("kind", "sc-fdma"), int(table["n_active"]),
            int(table["nfft"]), int(table.get("first_bin", 0)),
            int(table["gi_len"]), data_branch=int(sh_table.get("data_branch", 0)))
    else:
        for key in ("n_branches", "branch_len", "first_bin"):
            if key not in table:
                raise ConfigError(f"{where}: missing key {key!r}")
        cfg = WaveformConfig(
            nfft=int(table["nfft"]), gi_len=int(table["gi_len"]),
            gi_type=str(table["gi_type"]), n_branches=int(table["n_branches"]),
            branch_len=int(table["branch_len"]), first_bin=int(table["first_bin"]),
            active_branches=tuple(table["active_branches"]) if "active_branches" in table else None,
            active_slots=tuple(table["active_slots"]) if "active_slots" in table else None)
        if source == "file":
            shaping = ShapingSet.load(_resolve_path(base_dir, sh_table["file"]))
            if (shaping.n_branches, shaping.branch_len) != (cfg.n_branches, cfg.branch_len):
                raise ConfigError(
                    f"{where}: shaping file layout {shaping.n_branches}x"
                    f"{shaping.branch_len} does not match the configured grid")
        elif source == "rrc":
            if cfg.n_branches != 2:
                raise ConfigError(f"{where}: rrc shaping needs n_branches = 2")
            shaping = rrc_shaping(cfg.branch_len, energy=sh_table.get("energy"))
        elif source == "dirichlet":
            shaping = dirichlet_shaping(cfg.n_branches, cfg.branch_len)
        else:
            # deferred: design_shaping runs inside run_case / the optimize verb
            shaping = dirichlet_shaping(cfg.n_branches, cfg.branch_len)

    return UserSpec(label=label, cfg=cfg, shaping=shaping,
                    timing_offset=int(table.get("timing_offset", 0)),
                    power=float(table.get("power", 1.0)),
                    shaping_source=source, optimize_opts=sh_table)


_SCENARIO_KEYS = {"case", "seed", "ebn0_db", "n_blocks", "batch_blocks",
                  "guard_bins", "subcarrier_spacing_hz", "qam_order",
                  "equalizer", "blocks_per_tti", "tti_s", "papr_blocks",
                  "psd_blocks", "papr_oversample", "samples_per_bin"}
_PA_KEYS = {"kind", "smoothness", "sat_amplitude", "coeff_file", "phase_comp",
            "ibo_db"}
_CHANNEL_KEYS = {"kind", "memory", "decay_db", "file", "sample_rate_hz"}


def load_scenario(path: str) -> ScenarioConfig:
    """Parse and validate a scenario file; all relative paths resolve
    against the file's own directory."""
    if not os.path.exists(path):
        raise ConfigError(f"scenario file not found: {path}")
    base_dir = os.path.dirname(os.path.abspath(path))
    with open(path, "rb") as fh:
        try:
            raw = tomli.load(fh)
        except tomli.TOMLDecodeError as exc:
            raise ConfigError(f"malformed scenario file {path}: {exc}") from None

    _require_keys(raw, {"scenario", "pa", "channel", "users"},
                  {"scenario", "users"}, "top level")
    sc = raw["scenario"]
    _require_keys(sc, _SCENARIO_KEYS, {"case", "seed"}, "[scenario]")
    case = str(sc["case"])
    if case not in _CASES:
        raise ConfigError(f"case must be one of {_CASES}, got {case!r}")

    users = tuple(_build_user(t, i, base_dir) for i, t in enumerate(raw["users"]))
    if not users:
        raise ConfigError("at least one user (the target) is required")
    if case == "1b" and len(users) != 1:
        raise ConfigError("case 1b is single-user")
    target_len = users[0].cfg.block_len
    resolved = [users[0]]
    for u in users[1:]:
        if target_len % u.cfg.block_len:
            raise ConfigError(
                f"user {u.label!r}: block length {u.cfg.block_len} does not "
                f"tile the target block of {target_len} samples")
        resolved.append(replace(u, rate_multiple=target_len // u.cfg.block_len))
    if case == "3" and any(u.rate_multiple != 1 for u in resolved):
        raise ConfigError("case 3 users share one numerology")

    pa_table = dict(raw.get("pa", {"kind": "identity"}))
    _require_keys(pa_table, _PA_KEYS, {"kind"}, "[pa]")
    if "coeff_file" in pa_table:
        pa_table["coeffs"] = load_pa_coeffs(
            _resolve_path(base_dir, pa_table.pop("coeff_file")))
    pa = PaModel(**pa_table)

    ch_table = dict(raw.get("channel", {"kind": "flat"}))
    _require_keys(ch_table, _CHANNEL_KEYS, {"kind"}, "[channel]")
    kind = ch_table["kind"]
    if kind not in _CHANNEL_KINDS:
        raise ConfigError(f"channel kind must be one of {_CHANNEL_KINDS}")
    if kind == "exponential":
        profile = exponential_profile(int(ch_table.get("memory", 8)),
                                      float(ch_table.get("decay_db", 3.0)))
    elif kind == "file":
        if "file" not in ch_table or "sample_rate_hz" not in ch_table:
            raise ConfigError("[channel] kind 'file' needs file and sample_rate_hz")
        profile = load_profile(_resolve_path(base_dir, ch_table["file"]),
                               float(ch_table["sample_rate_hz"]))
    elif kind == "rayleigh":
        profile = awgn_profile()
    else:
        profile = None

    gi = users[0].cfg.gi_type
    defaults = dict(
        ebn0_db=tuple(float(v) for v in sc.get("ebn0_db", ())),
        n_blocks=int(sc.get("n_blocks", 1000)),
        batch_blocks=int(sc.get("batch_blocks", 100)),
        guard_bins=int(sc.get("guard_bins", 4)),
        subcarrier_spacing_hz=float(sc.get("subcarrier_spacing_hz", 15e3)),
        qam_order=int(sc.get("qam_order", 16)),
        equalizer=str(sc.get("equalizer", "mmse")),
        blocks_per_tti=int(sc.get("blocks_per_tti", 15 if gi == "none" else 14)),
        tti_s=float(sc.get("tti_s", 1e-3)),
        papr_blocks=int(sc.get("papr_blocks", 10000)),
        psd_blocks=int(sc.get("psd_blocks", 2000)),
        papr_oversample=int(sc.get("papr_oversample", 4)),
        samples_per_bin=int(sc.get("samples_per_bin", 10)),
    )
    if defaults["equalizer"] not in ("zf", "mmse"):
        raise ConfigError("equalizer must be 'zf' or 'mmse'")
    if defaults["n_blocks"] < 1 or defaults["batch_blocks"] < 1:
        raise ConfigError("n_blocks and batch_blocks must be positive")
    return ScenarioConfig(case=case, seed=int(sc["seed"]), users=tuple(resolved),
                          pa=pa, channel_kind=kind, channel_profile=profile,
                          source_path=os.path.abspath(path), **defaults)


def resolve_shaping(scen: ScenarioConfig, trace_dir: str = None,
                    results: dict = None) -> ScenarioConfig:
    """Run the shaping design for every user marked source = 'optimize'.

    Returns the scenario with those users' shaping vectors replaced; design
    traces land in trace_dir (one CSV per user) when given, and full design
    results are collected into `results` by label when a dict is passed.
    """
    users = []
    for u in scen.users:
        if u.shaping_source != "optimize":
            users.append(u)
            continue
        opts = u.optimize_opts
        pkw = {k: opts[k] for k in _OPT_PARAM_KEYS if k in opts}
        grid = frequency_grid(
            u.cfg, samples_per_bin=int(opts.get("samples_per_bin",
                                                scen.samples_per_bin)),
            guard_bins=int(opts.get("guard_bins", scen.guard_bins)))
        omega = osbep_matrix(grid, u.cfg)
        result = design_shaping(u.cfg, omega, OptimizerParams(**pkw),
                                energy=opts.get("energy"))
        if trace_dir is not None:
            result.write_trace(os.path.join(trace_dir, f"{u.label}_trace.csv"))
        if results is not None:
            results[u.label] = result
        users.append(replace(u, shaping=result.shaping))
    return replace(scen, users=tuple(users))


def _noise_variance(ebn0_db: float, bits_per_symbol: int) -> float:
    return 1.0 / (bits_per_symbol * 10.0 ** (ebn0_db / 10.0))


def _user_stream(user: UserSpec, bits: np.ndarray, qam: QamConstellation,
                 pa: PaModel) -> np.ndarray:
    """Bits -> serialized amplifier output for one user, power renormalized."""
    d = qam_map(bits, qam).reshape(-1, user.cfg.n_data)
    precoded = d @ data_columns(user.shaping, user.cfg).T
    stream = serialize(modulate(precoded, user.cfg))
    if pa.kind == "identity":
        return stream
    out = pa_apply(stream, pa)
    p_out = np.mean(np.abs(out) ** 2)
    if p_out == 0:
        return out
    # hold the transmit power at its pre-amplifier value so the per-point
    # noise calibration stays anchored to the constellation energy
    return out * np.sqrt(np.mean(np.abs(stream) ** 2) / p_out)


def _draw_bits(rng: np.random.Generator, n_blocks: int, user: UserSpec,
               bits_per_symbol: int) -> np.ndarray:
    return rng.integers(0, 2, size=n_blocks * user.cfg.n_data * bits_per_symbol)


def _user_taps(scen: ScenarioConfig, user_idx: int, point: int,
               batch: int) -> np.ndarray:
    if scen.channel_kind == "flat":
        return np.ones(1, dtype=complex)
    rng = child_rng(scen.seed, "chan", user_idx, point, batch)
    return draw_taps(scen.channel_profile, rng)


def compose_multiuser(streams, offsets, target_len: int) -> np.ndarray:
    """Delay each stream by its offset and sum over the target frame window."""
    if len(streams) != len(offsets):
        raise ConfigError("one offset per stream is required")
    out = np.zeros(target_len, dtype=complex)
    for stream, off in zip(streams, offsets):
        off = int(off)
        if off < 0:
            raise ConfigError("timing offsets must be nonnegative")
        n = min(target_len - off, len(stream))
        if n > 0:
            out[off:off + n] += stream[:n]
    return out


def _batch_errors(scen: ScenarioConfig, point: int, batch: int,
                  n_blocks: int, qam: QamConstellation) -> tuple:
    """Error and bit counts for one (sweep point, batch) cell."""
    target = scen.target
    bps = qam.bits_per_symbol
    target_len = n_blocks * target.cfg.block_len
    n0 = _noise_variance(scen.ebn0_db[point], bps)

    streams, offsets = [], []
    tx_bits = None
    target_taps = None
    for idx, user in enumerate(scen.users):
        rng_bits = child_rng(scen.seed, "bits", idx, point, batch)
        bits = _draw_bits(rng_bits, n_blocks * user.rate_multiple, user, bps)
        taps = _user_taps(scen, idx, point, batch)
        if idx == 0:
            tx_bits, target_taps = bits, taps
        stream = _user_stream(user, bits, qam, scen.pa)
        faded = np.convolve(stream, taps)[: len(stream)]
        streams.append(np.sqrt(user.power) * faded)
        offsets.append(user.timing_offset)

    composite = compose_multiuser(streams, offsets, target_len)
    noise_rng = child_rng(scen.seed, "awgn", point, batch)
    if n0 > 0:
        z = noise_rng.standard_normal(target_len) \
            + 1j * noise_rng.standard_normal(target_len)
        composite = composite + np.sqrt(n0 / 2.0) * z

    slots = receive_block(frame(composite, target.cfg), target.cfg)
    chan_f = channel_frequency(target_taps, target.cfg)
    cols = data_columns(target.shaping, target.cfg)
    eq = fde(slots, chan_f, cols, n0, es=1.0, mode=scen.equalizer)
    gains = unbias_gains(chan_f, cols, n0, es=1.0, mode=scen.equalizer)
    rx_bits = qam_demap((eq / gains).reshape(-1), qam)
    errors = int(np.count_nonzero(tx_bits != rx_bits))
    return errors, len(tx_bits)


def _batch_plan(n_blocks: int, batch_blocks: int):
    sizes = []
    left = n_blocks
    while left > 0:
        take = min(batch_blocks, left)
        sizes.append(take)
        left -= take
    return sizes


def _ber_sweep(scen: ScenarioConfig, threads: int) -> list:
    qam = QamConstellation(scen.qam_order)
    sizes = _batch_plan(scen.n_blocks, scen.batch_blocks)
    cells = [(p, b, n) for p in range(len(scen.ebn0_db))
             for b, n in enumerate(sizes)]
    results = {}
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = {(p, b): pool.submit(_batch_errors, scen, p, b, n, qam)
                       for p, b, n in cells}
        results = {k: f.result() for k, f in futures.items()}
    else:
        for p, b, n in cells:
            results[(p, b)] = _batch_errors(scen, p, b, n, qam)

    target = scen.target
    bw = target.cfg.n_active * scen.subcarrier_spacing_hz
    guard = scen.guard_bins * scen.subcarrier_spacing_hz
    rows = []
    for p, ebn0 in enumerate(scen.ebn0_db):
        errs = sum(results[(p, b)][0] for b in range(len(sizes)))
        bits = sum(results[(p, b)][1] for b in range(len(sizes)))
        ber = errs / bits
        se = spectral_efficiency(ber, qam.bits_per_symbol, target.cfg.n_data,
                                 scen.blocks_per_tti, bw, guard,
                                 tti_s=scen.tti_s)
        rows.append({"ebn0_db": ebn0, "n_bits": bits, "n_errors": errs,
                     "ber": ber, "se": se})
    return rows


def _clean_stream(scen: ScenarioConfig, idx: int, n_blocks: int, purpose: str,
                  qam: QamConstellation) -> tuple:
    """(pre-PA subcarrier symbol blocks, serialized stream) for one user."""
    user = scen.users[idx]
    rng = child_rng(scen.seed, purpose, idx)
    bits = _draw_bits(rng, n_blocks, user, qam.bits_per_symbol)
    d = qam_map(bits, qam).reshape(-1, user.cfg.n_data)
    precoded = d @ data_columns(user.shaping, user.cfg).T
    return precoded, serialize(modulate(precoded, user.cfg))


def psd_tables(scen: ScenarioConfig, idx: int) -> dict:
    """Closed-form and Welch spectra for one user; post-amplifier column when
    the scenario runs a distorting amplifier."""
    user = scen.users[idx]
    qam = QamConstellation(scen.qam_order)
    grid = frequency_grid(user.cfg, samples_per_bin=scen.samples_per_bin,
                          guard_bins=scen.guard_bins)
    _, stream = _clean_stream(scen, idx, scen.psd_blocks, "psd", qam)
    n_grid = len(grid.omega)
    cols = {"omega": grid.omega,
            "closed_form": psd_closed_form(grid.omega, user.cfg, user.shaping),
            "welch": psd_welch(stream, user.cfg, n_grid)}
    if scen.pa.kind != "identity":
        out = pa_apply(stream, scen.pa)
        p_out = np.mean(np.abs(out) ** 2)
        if p_out > 0:
            out = out * np.sqrt(np.mean(np.abs(stream) ** 2) / p_out)
        cols["welch_post_pa"] = psd_welch(out, user.cfg, n_grid)
    return cols


def papr_tables(scen: ScenarioConfig, idx: int) -> dict:
    """Oversampled PAPR CCDF for one user."""
    user = scen.users[idx]
    qam = QamConstellation(scen.qam_order)
    precoded, _ = _clean_stream(scen, idx, scen.papr_blocks, "papr", qam)
    blocks = oversampled_blocks(precoded, user.cfg,
                                oversample=scen.papr_oversample)
    samples = papr_db(blocks)
    thresholds = np.arange(0.0, 14.0 + 1e-9, 0.1)
    return {"thresholds_db": thresholds,
            "ccdf": papr_ccdf(samples, thresholds),
            "quantiles": {"ccdf_1e-2": papr_at_ccdf(samples, 1e-2),
                          "ccdf_1e-3": papr_at_ccdf(samples, 1e-3)}}


def _user_report(scen: ScenarioConfig, idx: int, ber_rows: list) -> MetricReport:
    user = scen.users[idx]
    report = MetricReport(label=user.label)
    report.scalars["n_active"] = user.cfg.n_active
    report.scalars["n_data"] = user.cfg.n_data
    report.scalars["shaping_energy"] = user.shaping.energy
    report.scalars["noise_enhancement"] = data_noise_penalty(user.shaping,
                                                             user.cfg)
    report.psd = psd_tables(scen, idx)
    report.papr = papr_tables(scen, idx)
    report.ber = ber_rows
    return report


@dataclass
class RunArtifact:
    scenario: dict
    reports: list
    seed: int

    def write(self, out_dir: str) -> list:
        """Emit all reports plus provenance; returns the created paths.

        The provenance run_hash digests every other emitted file, so two runs
        agree end to end exactly when their hashes agree.
        """
        os.makedirs(out_dir, exist_ok=True)
        paths = []
        path = os.path.join(out_dir, "scenario.json")
        with open(path, "w") as fh:
            json.dump(self.scenario, fh, indent=1, sort_keys=True)
            fh.write("\n")
        paths.append(path)
        for report in self.reports:
            paths.extend(report.write(out_dir))

        digest = hashlib.sha256()
        for p in sorted(paths):
            digest.update(os.path.basename(p).encode())
            with open(p, "rb") as fh:
                digest.update(fh.read())
        provenance = {
            "seed": self.seed,
            "run_hash": digest.hexdigest(),
            "versions": {
                "python": sys.version.split()[0],
                "numpy": np.__version__,
                "package": __version__,
            },
        }
        path = os.path.join(out_dir, "provenance.json")
        with open(path, "w") as fh:
            json.dump(provenance, fh, indent=1, sort_keys=True)
            fh.write("\n")
        paths.append(path)
        return paths


def _scenario_dict(scen: ScenarioConfig) -> dict:
    users = []
    for u in scen.users:
        cfg = u.cfg
        users.append({
            "label": u.label, "nfft": cfg.nfft, "gi_len": cfg.gi_len,
            "gi_type": cfg.gi_type, "n_branches": cfg.n_branches,
            "branch_len": cfg.branch_len, "first_bin": cfg.first_bin,
            "active_branches": list(cfg.active_branches),
            "active_slots": list(cfg.active_slots),
            "timing_offset": u.timing_offset, "power": u.power,
            "rate_multiple": u.rate_multiple,
            "shaping_source": u.shaping_source,
            "shaping_energy": u.shaping.energy,
        })
    return {
        "case": scen.case, "seed": scen.seed,
        "ebn0_db": list(scen.ebn0_db), "n_blocks": scen.n_blocks,
        "batch_blocks": scen.batch_blocks, "guard_bins": scen.guard_bins,
        "subcarrier_spacing_hz": scen.subcarrier_spacing_hz,
        "qam_order": scen.qam_order, "equalizer": scen.equalizer,
        "blocks_per_tti": scen.blocks_per_tti, "tti_s": scen.tti_s,
        "pa_kind": scen.pa.kind, "channel_kind": scen.channel_kind,
        "users": users,
    }


def run_case(scen: ScenarioConfig, threads: int = 1,
             with_spectrum: bool = True) -> RunArtifact:
    """Full pipeline for one scenario; BER/SE always, PSD and PAPR for every
    user unless with_spectrum is off."""
    scen = resolve_shaping(scen)
    ber_rows = _ber_sweep(scen, threads) if scen.ebn0_db else []
    reports = []
    for idx in range(len(scen.users)):
        if with_spectrum:
            report = _user_report(scen, idx, ber_rows if idx == 0 else [])
        else:
            report = MetricReport(label=scen.users[idx].label,
                                  ber=ber_rows if idx == 0 else [])
        reports.append(report)
    return RunArtifact(scenario=_scenario_dict(scen), reports=reports,
                       seed=scen.seed)
