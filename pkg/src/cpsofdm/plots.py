"""Figure rendering for run artifacts.

Every function draws to a file (Agg backend, no display) and returns the
path.  Figures sit next to the delimited output they visualize; the CSV/JSON
files remain the quantitative record.
"""

import os

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np


def _finish(fig, path: str) -> str:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    fig.savefig(path, dpi=140, bbox_inches="tight")
    plt.close(fig)
    return path


def save_psd_figure(psd: dict, path: str, title: str = "") -> str:
    """Overlay the closed-form and estimated spectra in dB relative to peak."""
    fig, ax = plt.subplots(figsize=(7.0, 4.2))
    omega = np.asarray(psd["omega"])
    ref = max(np.max(np.asarray(psd[k])) for k in psd if k != "omega")
    for key in psd:
        if key == "omega":
            continue
        vals = np.maximum(np.asarray(psd[key]), 1e-300) / ref
        style = "-" if key == "closed_form" else "--"
        ax.plot(omega / np.pi, 10.0 * np.log10(vals), style, label=key, lw=1.1)
    ax.set_xlabel(r"$\omega/\pi$")
    ax.set_ylabel("PSD (dB rel. peak)")
    ax.set_ylim(-100, 5)
    ax.grid(True, alpha=0.35)
    ax.legend()
    if title:
        ax.set_title(title)
    return _finish(fig, path)


def save_papr_figure(curves: dict, path: str) -> str:
    """CCDF curves on a log axis; curves maps label -> (thresholds_db, ccdf)."""
    fig, ax = plt.subplots(figsize=(6.4, 4.4))
    for label, (thr, ccdf) in curves.items():
        ccdf = np.asarray(ccdf)
        keep = ccdf > 0
        ax.semilogy(np.asarray(thr)[keep], ccdf[keep], label=label, lw=1.2)
    ax.set_xlabel("PAPR threshold (dB)")
    ax.set_ylabel("CCDF")
    ax.set_ylim(1e-4, 1.1)
    ax.grid(True, which="both", alpha=0.35)
    ax.legend()
    return _finish(fig, path)


def save_ber_figure(ber_rows: list, path: str, label: str = "measured") -> str:
    fig, ax = plt.subplots(figsize=(6.4, 4.4))
    x = [r["ebn0_db"] for r in ber_rows]
    y = [max(r["ber"], 0.5 / max(r["n_bits"], 1)) for r in ber_rows]
    ax.semilogy(x, y, "o-", label=label)
    ax.set_xlabel(r"$E_b/N_0$ (dB)")
    ax.set_ylabel("BER")
    ax.grid(True, which="both", alpha=0.35)
    ax.legend()
    return _finish(fig, path)


def save_shaping_figure(shaping, path: str) -> str:
    """Moduli of the shaping vector and of its time-domain prototype."""
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(8.6, 3.6))
    p = shaping.shaping
    ax1.stem(np.arange(len(p)), np.abs(p), basefmt=" ")
    ax1.set_xlabel("subband bin")
    ax1.set_ylabel("|shaping|")
    ax1.grid(True, alpha=0.35)
    pulse = shaping.pulse
    ax2.plot(np.arange(len(pulse)), np.abs(pulse), "o-", ms=3)
    ax2.set_xlabel("sample")
    ax2.set_ylabel("|prototype pulse|")
    ax2.grid(True, alpha=0.35)
    fig.tight_layout()
    return _finish(fig, path)


def save_trace_figure(trace: list, path: str) -> str:
    """Objective and rank ratio across the design iterations."""
    mm = [r for r in trace if r["phase"] == "mm"]
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(6.6, 5.4), sharex=True)
    it = [r["iteration"] for r in mm]
    ax1.plot(it, [r["objective"] for r in mm], lw=1.1)
    ax1.set_ylabel("envelope objective")
    ax1.grid(True, alpha=0.35)
    ratios = np.maximum([r["rank_ratio"] for r in mm], 1e-16)
    ax2.semilogy(it, ratios, lw=1.1)
    ax2.set_ylabel(r"$\lambda_2/\lambda_1$")
    ax2.set_xlabel("descent iteration")
    ax2.grid(True, which="both", alpha=0.35)
    fig.tight_layout()
    return _finish(fig, path)


def render_artifact(artifact, out_dir: str) -> list:
    """Standard figure set for a finished run: one PSD per user, a combined
    PAPR CCDF, and the target BER curve."""
    paths = []
    papr_curves = {}
    for report in artifact.reports:
        if report.psd:
            paths.append(save_psd_figure(
                report.psd, os.path.join(out_dir, f"{report.label}_psd.png"),
                title=report.label))
        if report.papr:
            papr_curves[report.label] = (report.papr["thresholds_db"],
                                         report.papr["ccdf"])
        if report.ber:
            paths.append(save_ber_figure(
                report.ber, os.path.join(out_dir, f"{report.label}_ber.png"),
                label=report.label))
    if papr_curves:
        paths.append(save_papr_figure(papr_curves,
                                      os.path.join(out_dir, "papr_ccdf.png")))
    return paths
