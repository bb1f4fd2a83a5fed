"""System configuration, grid indexing, DFT/SFFT operators and RNG streams.

Everything downstream (pulse Gram, channels, precoders, sweeps) reads its
geometry from :class:`SystemConfig` and addresses the delay-Doppler grid
through :class:`IndexMap`, so the flattening convention lives in exactly one
place: a grid point (l, k) maps to flat index k*M + l, i.e. the delay index
runs fastest. The same convention applied to the time-frequency grid (m, n)
gives n*M + m.
"""

from __future__ import annotations

import dataclasses
import zlib
from dataclasses import dataclass

import numpy as np


class ConfigError(ValueError):
    """Raised when a configuration value or combination is invalid."""


class NumericalError(RuntimeError):
    """Raised when a numerical routine cannot produce a trustworthy result."""


class DegenerateConfigurationError(NumericalError):
    """Raised when a configuration collapses the signal space entirely."""


@dataclass(frozen=True)
class SystemConfig:
    """Static description of one transmission setup.

    Compression factors below 1 pack symbols tighter than orthogonality
    allows: alpha scales the symbol interval (alpha*T0), beta the carrier
    spacing (beta*delta_f0). alpha >= 1/(1+theta) keeps the pulse Gram
    well conditioned and is enforced unless `allow_small_alpha` is set.
    """

    M: int                        # carriers per block
    N: int                        # symbols per carrier
    alpha: float = 1.0            # time compression factor, 0 < alpha <= 1
    beta: float = 1.0             # frequency compression factor, 0 < beta <= 1
    theta: float = 0.25           # root raised cosine roll-off
    T0: float = 1.0               # Nyquist symbol interval [s]
    E0: float = 1.0               # reference symbol energy
    sigma_x2: float = 1.0         # data symbol variance
    N0: float = 1.0               # noise power spectral density
    L: int = 3                    # number of channel paths
    n_tx: int = 1                 # transmit antennas
    n_rx: int = 1                 # receive antennas
    tau_max: float | None = None  # max path delay, default 2*T0
    nu_max: float | None = None   # max |Doppler|, default 0.1*delta_f0
    seed: int = 0                 # root seed for all derived RNG streams
    allow_small_alpha: bool = False  # lift the alpha >= 1/(1+theta) guard

    def __post_init__(self):
        for name in ("M", "N", "L", "n_tx", "n_rx"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or v < 1:
                raise ConfigError(f"{name} must be a positive integer, got {v!r}")
        if not 0.0 < self.alpha <= 1.0:
            raise ConfigError(f"alpha must lie in (0, 1], got {self.alpha}")
        if not 0.0 < self.beta <= 1.0:
            raise ConfigError(f"beta must lie in (0, 1], got {self.beta}")
        if not 0.0 <= self.theta <= 1.0:
            raise ConfigError(f"theta must lie in [0, 1], got {self.theta}")
        for name in ("T0", "E0", "sigma_x2"):
            if getattr(self, name) <= 0.0:
                raise ConfigError(f"{name} must be positive")
        if self.N0 < 0.0:
            raise ConfigError("N0 must be non-negative")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")
        if self.tau_max is None:
            object.__setattr__(self, "tau_max", 2.0 * self.T0)
        if self.nu_max is None:
            object.__setattr__(self, "nu_max", 0.1 / self.T0)
        if self.tau_max < 0.0 or self.nu_max < 0.0:
            raise ConfigError("tau_max and nu_max must be non-negative")
        # the Gram loses rank fast once alpha drops below 1/(1+theta)
        if not self.allow_small_alpha and self.alpha < 1.0 / (1.0 + self.theta) - 1e-12:
            raise ConfigError(
                f"alpha={self.alpha} below 1/(1+theta)={1.0 / (1.0 + self.theta):.6f}; "
                "set allow_small_alpha=True to override"
            )

    @property
    def delta_f0(self) -> float:
        """Nyquist carrier spacing 1/T0."""
        return 1.0 / self.T0

    @property
    def mn(self) -> int:
        """Symbols per block (grid size M*N)."""
        return self.M * self.N

    @property
    def snr(self) -> float:
        """Linear symbol SNR sigma_x^2 / N0."""
        if self.N0 == 0.0:
            return np.inf
        return self.sigma_x2 / self.N0

    def with_snr_db(self, snr_db: float) -> "SystemConfig":
        """Copy of this config with N0 set so sigma_x^2/N0 hits `snr_db`."""
        return dataclasses.replace(self, N0=self.sigma_x2 / 10.0 ** (snr_db / 10.0))

    def replace(self, **kw) -> "SystemConfig":
        return dataclasses.replace(self, **kw)


@dataclass(frozen=True)
class IndexMap:
    """Bijection between grid points (l, k) and flat indices k*M + l."""

    M: int
    N: int

    def flat(self, l: int, k: int) -> int:
        if not (0 <= l < self.M and 0 <= k < self.N):
            raise IndexError(f"grid point ({l}, {k}) outside {self.M}x{self.N}")
        return k * self.M + l

    def grid(self, idx: int) -> tuple[int, int]:
        if not 0 <= idx < self.M * self.N:
            raise IndexError(f"flat index {idx} outside {self.M * self.N} entries")
        return idx % self.M, idx // self.M


def flat_index(l: int, k: int, index_map: IndexMap) -> int:
    """Flat position of grid point (l, k) under `index_map`."""
    return index_map.flat(l, k)


def dft_matrix(n: int) -> np.ndarray:
    """Unitary n-point DFT matrix, F[j, k] = exp(-2j pi j k / n) / sqrt(n)."""
    idx = np.arange(n)
    return np.exp(-2j * np.pi * np.outer(idx, idx) / n) / np.sqrt(n)


def sfft_matrix(cfg: SystemConfig) -> np.ndarray:
    """Matrix form of the symplectic finite Fourier transform.

    With the k*M + l flattening, the SFFT taking the time-frequency grid to
    the delay-Doppler grid is the Kronecker product F_N (x) F_M^H of unitary
    DFTs; the 1/sqrt(NM) of the double-sum definition is absorbed by the
    unitary normalization. The inverse transform is the conjugate transpose.
    """
    f_m = dft_matrix(cfg.M)
    f_n = dft_matrix(cfg.N)
    return np.kron(f_n, f_m.conj().T)


def isfft_matrix(cfg: SystemConfig) -> np.ndarray:
    """Inverse SFFT, the conjugate transpose of :func:`sfft_matrix`."""
    return sfft_matrix(cfg).conj().T


def rng_stream(seed: int, *key) -> np.random.Generator:
    """Independent generator for the stream named by (seed, *key).

    Key parts may be non-negative ints or short strings; strings hash via
    crc32. Streams are derived through SeedSequence spawn keys, so any two
    distinct keys give statistically independent streams and the mapping is
    stable across runs, platforms and call orderings.
    """
    parts = []
    for part in key:
        if isinstance(part, str):
            parts.append(zlib.crc32(part.encode("utf-8")))
        else:
            p = int(part)
            if p < 0:
                raise ConfigError(f"rng stream key parts must be non-negative, got {part!r}")
            parts.append(p)
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=tuple(parts)))
