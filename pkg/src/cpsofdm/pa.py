"""Memoryless power amplifier models.

rapp        AM/AM r -> r / (1 + (r/sat)^(2*smoothness))^(1/(2*smoothness)),
            no AM/PM distortion.
polynomial  y = sum_q c_q * u * |u|^(q-1), q = 1..len(coeffs), coefficients
            fitted for |u| <= 1 (unit saturation reference).

The operating point: with `sat_amplitude=None` (the default) a Rapp stage
derives its saturation from the stream, sat = rms * 10^(ibo_db/20).  Because
the Rapp curve is scale covariant this is exactly "scale the input so its mean
power sits ibo_db below saturation, compress, scale back".  An explicit
`sat_amplitude` pins the operating point instead and `ibo_db` is not applied,
so a huge explicit saturation degenerates to a clean pass-through.  The
polynomial has no scale covariance, so there the input really is scaled into
the unit-saturation frame and back.
"""

import json
import os
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class PaModel:
    kind: str = "identity"
    smoothness: float = 2.0
    sat_amplitude: float = None   # None: derive from ibo_db and the stream rms
    coeffs: tuple = ()
    phase_comp: float = 0.0       # radians, applied as exp(1j*phase_comp)
    ibo_db: float = 3.0

    def __post_init__(self):
        if self.kind not in ("identity", "rapp", "polynomial"):
            raise ConfigError(f"unknown pa kind {self.kind!r}")
        if self.kind == "rapp":
            if self.smoothness <= 0:
                raise ConfigError("rapp model needs positive smoothness")
            if self.sat_amplitude is not None and self.sat_amplitude <= 0:
                raise ConfigError("rapp sat_amplitude must be positive when given")
        if self.kind == "polynomial" and len(self.coeffs) == 0:
            raise ConfigError("polynomial model needs at least one coefficient")


def load_pa_coeffs(path: str) -> tuple:
    """Read polynomial coefficients: a JSON list of [real, imag] pairs, c1 first."""
    if not os.path.exists(path):
        raise ConfigError(f"pa coefficient file not found: {path}")
    with open(path) as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed pa coefficient file {path}: {exc}") from None
    try:
        coeffs = tuple(complex(float(re), float(im)) for re, im in raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad coefficient entry in {path}: {exc}") from None
    if not coeffs:
        raise ConfigError(f"empty coefficient list in {path}")
    return coeffs


def _rapp_amam(r: np.ndarray, sat: float, smoothness: float) -> np.ndarray:
    return r / (1.0 + (r / sat) ** (2.0 * smoothness)) ** (1.0 / (2.0 * smoothness))


def pa_apply(x: np.ndarray, model: PaModel) -> np.ndarray:
    """Run a sample stream through the amplifier model."""
    x = np.asarray(x, dtype=complex)
    if model.kind == "identity":
        return x.copy()
    rms = np.sqrt(np.mean(np.abs(x) ** 2))
    if rms == 0:
        return x.copy()
    rot = np.exp(1j * model.phase_comp)
    if model.kind == "rapp":
        sat = model.sat_amplitude
        if sat is None:
            sat = rms * 10.0 ** (model.ibo_db / 20.0)
        r = np.abs(x)
        scale = np.ones_like(r)
        np.divide(_rapp_amam(r, sat, model.smoothness), r, out=scale, where=r > 0)
        return x * scale * rot
    # polynomial: work in the unit-saturation frame, then refer back
    gain = 10.0 ** (-model.ibo_db / 20.0) / rms
    u = gain * x
    r = np.abs(u)
    out = np.zeros_like(u)
    for q, c in enumerate(model.coeffs, start=1):
        out = out + c * u * r ** (q - 1)
    return out * (rot / gain)
