"""Command line front end.

Verbs:
  optimize   run the shaping design for every user marked source="optimize"
             and store the resulting vectors, traces, and figures
  simulate   full scenario run: BER/SE sweep plus spectra and PAPR per user
  psd        spectra only (closed form, Welch, post-amplifier when configured)
  papr       oversampled PAPR CCDF only
  ber        BER/SE sweep only
  validate   config schema plus fast invariant checks on the loaded scenario

Exit codes: 0 success, 2 configuration error, 3 numeric or invariant failure.
"""

import argparse
import os
import sys
import tempfile
from dataclasses import replace

import numpy as np

from .errors import ConfigError, NumericError
from .metrics import MetricReport
from . import plots
from .precoder import (data_columns, precode_char_grid, precode_direct,
                       precode_frequency)
from .scenario import (load_scenario, papr_tables, psd_tables, resolve_shaping,
                       run_case)
from .shaping import nep


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cpsofdm",
        description="Circularly pulse-shaped precoded OFDM toolkit")
    sub = parser.add_subparsers(dest="verb", required=True)
    for verb, helptext in [
            ("optimize", "design shaping vectors declared in the scenario"),
            ("simulate", "full run: BER sweep, spectra, PAPR, artifacts"),
            ("psd", "power spectral density only"),
            ("papr", "PAPR CCDF only"),
            ("ber", "BER/SE sweep only"),
            ("validate", "schema and invariant checks")]:
        sp = sub.add_parser(verb, help=helptext)
        sp.add_argument("--config", required=True, help="scenario file (TOML)")
        sp.add_argument("--seed", type=int, default=None,
                        help="override the scenario seed")
        sp.add_argument("--out", default=None,
                        help="output directory (default runs/<config stem>)")
        sp.add_argument("--threads", type=int, default=1,
                        help="parallel workers for the BER sweep")
    return parser


def _load(args):
    scen = load_scenario(args.config)
    if args.seed is not None:
        scen = replace(scen, seed=int(args.seed))
    return scen


def _out_dir(args) -> str:
    if args.out:
        return args.out
    stem = os.path.basename(args.config)
    for suffix in (".toml", ".toy"):
        if stem.endswith(suffix):
            stem = stem[: -len(suffix)]
    return os.path.join("runs", stem or "scenario")


def _cmd_optimize(args) -> int:
    scen = _load(args)
    if not any(u.shaping_source == "optimize" for u in scen.users):
        raise ConfigError(
            "no user declares shaping source 'optimize' in this scenario")
    out = _out_dir(args)
    os.makedirs(out, exist_ok=True)
    results = {}
    resolved = resolve_shaping(scen, trace_dir=out, results=results)
    for user in resolved.users:
        if user.label not in results:
            continue
        res = results[user.label]
        path = os.path.join(out, f"{user.label}_shaping.json")
        user.shaping.save(path)
        plots.save_shaping_figure(
            user.shaping, os.path.join(out, f"{user.label}_shaping.png"))
        plots.save_trace_figure(
            res.trace, os.path.join(out, f"{user.label}_trace.png"))
        mm = [r for r in res.trace if r["phase"] == "mm"]
        print(f"{user.label}: {len(mm)} descent iterations, "
              f"leakage bound {res.osbep_bound:.3e}, "
              f"noise penalty {nep(user.shaping):.4f}, wrote {path}")
    return 0


def _cmd_simulate(args) -> int:
    artifact = run_case(_load(args), threads=max(1, args.threads))
    out = _out_dir(args)
    paths = artifact.write(out)
    plots.render_artifact(artifact, out)
    for row in artifact.reports[0].ber:
        print(f"Eb/N0 {row['ebn0_db']:5.1f} dB   BER {row['ber']:.3e}   "
              f"SE {row['se']:.3f} bit/s/Hz")
    print(f"artifacts in {out} ({len(paths)} files)")
    return 0


def _cmd_psd(args) -> int:
    scen = resolve_shaping(_load(args))
    out = _out_dir(args)
    for idx, user in enumerate(scen.users):
        report = MetricReport(label=user.label, psd=psd_tables(scen, idx))
        report.write(out, stem=user.label)
        plots.save_psd_figure(report.psd,
                              os.path.join(out, f"{user.label}_psd.png"),
                              title=user.label)
        print(f"{user.label}: psd tables and figure in {out}")
    return 0


def _cmd_papr(args) -> int:
    scen = resolve_shaping(_load(args))
    out = _out_dir(args)
    curves = {}
    for idx, user in enumerate(scen.users):
        table = papr_tables(scen, idx)
        report = MetricReport(label=user.label, papr=table)
        report.write(out, stem=user.label)
        curves[user.label] = (table["thresholds_db"], table["ccdf"])
        print(f"{user.label}: PAPR at CCDF 1e-2 = "
              f"{table['quantiles']['ccdf_1e-2']:.2f} dB")
    plots.save_papr_figure(curves, os.path.join(out, "papr_ccdf.png"))
    return 0


def _cmd_ber(args) -> int:
    artifact = run_case(_load(args), threads=max(1, args.threads),
                        with_spectrum=False)
    out = _out_dir(args)
    artifact.write(out)
    rows = artifact.reports[0].ber
    if rows:
        plots.save_ber_figure(rows, os.path.join(out, "target_ber.png"))
    for row in rows:
        print(f"Eb/N0 {row['ebn0_db']:5.1f} dB   BER {row['ber']:.3e}")
    return 0


def _cmd_validate(args) -> int:
    checks = []

    scen = _load(args)
    # design runs belong to the optimize verb; checking the deferred users
    # with their placeholder shaping keeps every check here fast
    scen = replace(scen, users=tuple(
        replace(u, shaping_source="dirichlet")
        if u.shaping_source == "optimize" else u for u in scen.users))
    checks.append((True, f"schema: {len(scen.users)} user(s), case {scen.case}"))

    rng = np.random.default_rng(scen.seed)
    for user in scen.users:
        sh, cfg = user.shaping, user.cfg
        dev = 0.0
        for _ in range(3):
            d = rng.standard_normal(cfg.n_active) \
                + 1j * rng.standard_normal(cfg.n_active)
            routes = [precode_direct(d, sh), precode_frequency(d, sh),
                      precode_char_grid(d, sh)]
            dev = max(dev, max(np.max(np.abs(routes[0] - r))
                               for r in routes[1:]))
        checks.append((dev <= 1e-10,
                       f"{user.label}: precoder routes agree ({dev:.2e})"))
        # the demodulator only ever inverts the data-restricted columns, so
        # conditioning is judged there; characteristic zeros outside the
        # active grid are harmless
        svals = np.linalg.svd(data_columns(sh, cfg), compute_uv=False)
        full_rank = bool(svals[-1] > 1e-9 * svals[0])
        penalty = float(np.sum(1.0 / svals ** 2)) if full_rank else float("inf")
        checks.append((full_rank,
                       f"{user.label}: data precoder full rank "
                       f"(condition {svals[0] / svals[-1]:.3g}, "
                       f"noise penalty {penalty:.4f})"))

    micro = replace(scen, n_blocks=min(scen.n_blocks, 20), batch_blocks=10,
                    ebn0_db=scen.ebn0_db[:1] or (10.0,),
                    psd_blocks=120, papr_blocks=120)
    with tempfile.TemporaryDirectory() as tmp:
        dirs = [os.path.join(tmp, "a"), os.path.join(tmp, "b")]
        hashes = []
        for d in dirs:
            artifact = run_case(micro, threads=max(1, args.threads))
            paths = artifact.write(d)
            blobs = []
            for p in sorted(paths):
                with open(p, "rb") as fh:
                    blobs.append((os.path.basename(p), fh.read()))
            hashes.append(blobs)
        checks.append((hashes[0] == hashes[1],
                       "determinism: repeated run is byte-identical"))

    if len(micro.users) > 1:
        silent = replace(
            micro, users=tuple(micro.users[:1] + tuple(
                replace(u, power=0.0) for u in micro.users[1:])))
        alone = replace(micro, case="1b", users=micro.users[:1])
        rows_silent = run_case(silent, with_spectrum=False).reports[0].ber
        rows_alone = run_case(alone, with_spectrum=False).reports[0].ber
        checks.append((rows_silent == rows_alone,
                       "degeneration: silenced interferers reproduce the "
                       "single-user sweep"))

    failed = [msg for ok, msg in checks if not ok]
    for ok, msg in checks:
        print(("ok   " if ok else "FAIL ") + msg)
    if failed:
        raise NumericError(f"{len(failed)} validation check(s) failed")
    print("all checks passed")
    return 0


_COMMANDS = {"optimize": _cmd_optimize, "simulate": _cmd_simulate,
             "psd": _cmd_psd, "papr": _cmd_papr, "ber": _cmd_ber,
             "validate": _cmd_validate}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.verb](args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
