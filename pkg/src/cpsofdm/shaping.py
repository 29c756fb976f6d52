"""Prototype shaping vectors and their three equivalent representations.

A shaping set is determined by any one of:

* the prototype pulse (time domain, length n_active),
* the shaping vector ``p`` (its unitary DFT),
* the characteristic grid ``sqrt(S/rho) * to_grid(p) @ W_K^H`` with
  S = n_active, rho = ||p||^2 and W_K the unitary branch-count DFT.

The characteristic grid always has Frobenius norm sqrt(S); its entries decide
structure: all moduli equal to one (plus energy rho equal to branch_len) gives
a unitary precoder, any zero entry makes the precoder singular.
"""

import json
import os
from dataclasses import dataclass

import numpy as np

from .dsp import dft_matrix, from_grid, to_grid, unitary_fft, unitary_ifft
from .errors import ConfigError


@dataclass(frozen=True)
class ShapingSet:
    shaping: np.ndarray     # frequency-domain prototype, length n_branches * branch_len
    n_branches: int
    branch_len: int

    def __post_init__(self):
        p = np.asarray(self.shaping, dtype=complex).reshape(-1)
        if len(p) != self.n_branches * self.branch_len:
            raise ConfigError(
                f"shaping length {len(p)} != n_branches*branch_len "
                f"= {self.n_branches * self.branch_len}")
        if not np.all(np.isfinite(p)) or np.linalg.norm(p) == 0:
            raise ConfigError("shaping vector must be finite and nonzero")
        object.__setattr__(self, "shaping", p)

    @property
    def n_active(self) -> int:
        return self.n_branches * self.branch_len

    @property
    def energy(self) -> float:
        """rho = squared norm of the shaping vector."""
        return float(np.real(np.vdot(self.shaping, self.shaping)))

    @property
    def pulse(self) -> np.ndarray:
        """Time-domain prototype (inverse unitary DFT of the shaping vector)."""
        return unitary_ifft(self.shaping)

    @property
    def char_grid(self) -> np.ndarray:
        """Characteristic grid, shape (branch_len, n_branches)."""
        g = to_grid(self.shaping, self.branch_len, self.n_branches)
        return np.sqrt(self.n_active / self.energy) * unitary_ifft(g, axis=1)

    @classmethod
    def from_pulse(cls, pulse, n_branches: int, branch_len: int) -> "ShapingSet":
        return cls(unitary_fft(np.asarray(pulse, dtype=complex)), n_branches, branch_len)

    @classmethod
    def from_char_grid(cls, grid, energy: float = None) -> "ShapingSet":
        """Rebuild from a characteristic grid; energy defaults to branch_len.

        The default keeps the precoder exactly unitary whenever the grid
        entries all have unit modulus.
        """
        g = np.asarray(grid, dtype=complex)
        branch_len, n_branches = g.shape
        rho = float(branch_len if energy is None else energy)
        if rho <= 0:
            raise ConfigError("shaping energy must be positive")
        s = n_branches * branch_len
        p = np.sqrt(rho / s) * from_grid(unitary_fft(g, axis=1))
        return cls(p, n_branches, branch_len)

    def with_energy(self, energy: float) -> "ShapingSet":
        """Same shape, rescaled to the requested energy."""
        scale = np.sqrt(energy / self.energy)
        return ShapingSet(self.shaping * scale, self.n_branches, self.branch_len)

    def save(self, path: str):
        payload = {
            "n_branches": self.n_branches,
            "branch_len": self.branch_len,
            "energy": self.energy,
            "shaping_real": [float(v) for v in self.shaping.real],
            "shaping_imag": [float(v) for v in self.shaping.imag],
        }
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=1)
            fh.write("\n")

    @classmethod
    def load(cls, path: str) -> "ShapingSet":
        if not os.path.exists(path):
            raise ConfigError(f"shaping file not found: {path}")
        with open(path) as fh:
            try:
                payload = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"malformed shaping file {path}: {exc}") from None
        try:
            p = np.asarray(payload["shaping_real"], dtype=float) \
                + 1j * np.asarray(payload["shaping_imag"], dtype=float)
            out = cls(p, int(payload["n_branches"]), int(payload["branch_len"]))
            stored = float(payload["energy"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad field in shaping file {path}: {exc}") from None
        if abs(stored - out.energy) > 1e-9 * max(1.0, out.energy):
            raise ConfigError(f"inconsistent energy field in {path}")
        return out


def nep(shaping: ShapingSet) -> float:
    """Noise enhancement penalty: sum of reciprocal squared branch-DFT moduli.

    Equals (S/rho) * sum(1/|char_grid|^2); lower-bounded by S^2/rho, with
    equality exactly on unit-modulus characteristic grids.
    """
    g = to_grid(shaping.shaping, shaping.branch_len, shaping.n_branches)
    q = from_grid(unitary_ifft(g, axis=1))
    mags = np.abs(q) ** 2
    if np.any(mags == 0):
        return float("inf")
    return float(np.sum(1.0 / mags))


def is_unitary(shaping: ShapingSet, tol: float = 1e-10) -> bool:
    """True when the induced precoder is unitary.

    Requires unit-modulus characteristic entries and energy rho = branch_len;
    the energy condition fixes the overall column scale rho/branch_len.
    """
    moduli = np.abs(shaping.char_grid)
    return bool(np.max(np.abs(moduli - 1.0)) <= tol
                and abs(shaping.energy / shaping.branch_len - 1.0) <= tol)


def is_invertible(shaping: ShapingSet, rel_tol: float = 1e-9) -> bool:
    """True when the induced precoder is invertible (no characteristic zeros)."""
    moduli = np.abs(shaping.char_grid)
    return bool(np.min(moduli) > rel_tol * np.max(moduli))


def dirichlet_shaping(n_branches: int, branch_len: int) -> ShapingSet:
    """All-ones characteristic grid: the unitary 'no extra shaping' reference."""
    return ShapingSet.from_char_grid(np.ones((branch_len, n_branches)))


def rrc_shaping(branch_len: int, energy: float = None) -> ShapingSet:
    """Frequency-domain root-raised-cosine taper, roll-off 1, two branches.

    Defined on 2*branch_len bins centred on the subband: p[i] =
    cos(pi*(i - branch_len)/(2*branch_len)).  Squared entries at bins half a
    period apart sum to one, so the natural energy is exactly branch_len.
    """
    m = branch_len
    i = np.arange(2 * m)
    p = np.cos(np.pi * (i - m) / (2 * m))
    out = ShapingSet(p.astype(complex), 2, m)
    return out if energy is None else out.with_energy(energy)


def branch_dft_matrix(n_branches: int, branch_len: int) -> np.ndarray:
    """kron(W_K^H, I_M): maps the shaping vector to the characteristic domain."""
    return np.kron(dft_matrix(n_branches).conj().T, np.eye(branch_len))
