"""Multipath channel profiles, tap realizations, and the AWGN front end."""

from dataclasses import dataclass

import json
import os

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class ChannelProfile:
    """Tap power profile on the sample grid; powers sum to one."""
    powers: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.powers, dtype=float).reshape(-1)
        if len(p) == 0 or np.any(p < 0) or p.sum() == 0:
            raise ConfigError("channel profile needs nonnegative powers with positive sum")
        object.__setattr__(self, "powers", p / p.sum())

    @property
    def n_taps(self) -> int:
        return len(self.powers)


def awgn_profile() -> ChannelProfile:
    """Single unit tap: frequency-flat channel."""
    return ChannelProfile(np.ones(1))


def exponential_profile(memory: int = 8, decay_db: float = 3.0) -> ChannelProfile:
    """memory+1 taps decaying decay_db per tap, normalized to unit energy."""
    p = 10.0 ** (-decay_db * np.arange(memory + 1) / 10.0)
    return ChannelProfile(p)


def load_profile(path: str, sample_rate_hz: float) -> ChannelProfile:
    """Read (delay_ns, power_db) pairs; delays round to the nearest sample.

    Pairs landing on the same sample accumulate their linear power.
    """
    if not os.path.exists(path):
        raise ConfigError(f"channel profile file not found: {path}")
    with open(path) as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed channel profile {path}: {exc}") from None
    try:
        pairs = [(float(d), float(pw)) for d, pw in raw]
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad (delay_ns, power_db) entry in {path}: {exc}") from None
    if not pairs:
        raise ConfigError(f"empty channel profile in {path}")
    taps = [int(round(d * 1e-9 * sample_rate_hz)) for d, _ in pairs]
    if min(taps) < 0:
        raise ConfigError("negative delays are not supported")
    powers = np.zeros(max(taps) + 1)
    for t, (_, pw) in zip(taps, pairs):
        powers[t] += 10.0 ** (pw / 10.0)
    return ChannelProfile(powers)


def draw_taps(profile: ChannelProfile, rng: np.random.Generator) -> np.ndarray:
    """One Rayleigh realization: independent complex normal taps, profile powers."""
    scale = np.sqrt(profile.powers / 2.0)
    n = profile.n_taps
    return scale * (rng.standard_normal(n) + 1j * rng.standard_normal(n))


def add_noise(x: np.ndarray, n0: float, rng: np.random.Generator) -> np.ndarray:
    """Add circular complex white noise of variance n0 per sample."""
    if n0 < 0:
        raise ConfigError("noise variance must be nonnegative")
    if n0 == 0:
        return np.asarray(x, dtype=complex).copy()
    shape = np.shape(x)
    z = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return x + np.sqrt(n0 / 2.0) * z


def channel_apply(x: np.ndarray, taps: np.ndarray, n0: float,
                  rng: np.random.Generator) -> np.ndarray:
    """Convolve a stream with the tap vector and add white noise, same length out."""
    y = np.convolve(np.asarray(x, dtype=complex), np.asarray(taps, dtype=complex))
    return add_noise(y[: len(x)], n0, rng)
