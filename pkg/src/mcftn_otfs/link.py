"""Symbol mapping, LMMSE equalization and BER measurement.

The receive vector is y = H P x + z with colored noise z, so the linear MMSE
estimate is

    x_hat = sigma_x^2 B^H (sigma_x^2 B B^H + R_z)^{-1} y,   B = H P,

followed by hard per-symbol decisions. Bit errors are counted against the
transmitted bits and summarized with a Wilson 95% confidence interval.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .core import ConfigError
from .noise import NoiseModel, draw_mimo_noise

CONSTELLATIONS = ("bpsk", "qpsk")
_WILSON_Z = 1.959963984540054   # two-sided 95%


def bits_per_symbol(constellation: str) -> int:
    if constellation == "bpsk":
        return 1
    if constellation == "qpsk":
        return 2
    raise ConfigError(f"unknown constellation {constellation!r}")


def map_bits(bits: np.ndarray, constellation: str, sigma_x2: float = 1.0) -> np.ndarray:
    """Bits to unit-ordered symbols with average energy sigma_x2.

    The leading axis is the bit axis; for QPSK consecutive bit pairs map
    Gray-coded to quadrants (even-index bit on the real rail).
    """
    bits = np.asarray(bits)
    if bits.ndim == 0 or np.any((bits != 0) & (bits != 1)):
        raise ConfigError("bits must be an array of 0/1 values")
    if constellation == "bpsk":
        return (1.0 - 2.0 * bits.astype(float)) * np.sqrt(sigma_x2)
    if constellation == "qpsk":
        if bits.shape[0] % 2:
            raise ConfigError("qpsk needs an even number of bits")
        re = 1.0 - 2.0 * bits[0::2].astype(float)
        im = 1.0 - 2.0 * bits[1::2].astype(float)
        return (re + 1j * im) * np.sqrt(sigma_x2 / 2.0)
    raise ConfigError(f"unknown constellation {constellation!r}")


def demap_symbols(x: np.ndarray, constellation: str) -> np.ndarray:
    """Hard decisions back to bits; zero estimates resolve to bit 0."""
    x = np.asarray(x)
    if constellation == "bpsk":
        return (x.real < 0.0).astype(np.int64)
    if constellation == "qpsk":
        out_shape = (2 * x.shape[0],) + x.shape[1:]
        out = np.empty(out_shape, dtype=np.int64)
        out[0::2] = x.real < 0.0
        out[1::2] = x.imag < 0.0
        return out
    raise ConfigError(f"unknown constellation {constellation!r}")


def transmit(h: np.ndarray, P: np.ndarray, x: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Channel action y = H P x + z (x and z may be column batches)."""
    return h @ (P @ x) + z


def mmse_weights(b: np.ndarray, rz: np.ndarray, sigma_x2: float) -> np.ndarray:
    """LMMSE matrix W with x_hat = W y for the model y = B x + z.

    Solves against S = sigma_x^2 B B^H + R_z; if S is singular (only
    possible with N0 = 0 and a rank-deficient channel) falls back to the
    pseudo inverse, which is the zero-forcing limit on the signal subspace.
    """
    s = sigma_x2 * (b @ b.conj().T) + rz
    try:
        return sigma_x2 * np.linalg.solve(s, b).conj().T
    except np.linalg.LinAlgError:
        return sigma_x2 * (b.conj().T @ np.linalg.pinv(s, hermitian=True))


def mmse_equalize(b: np.ndarray, rz: np.ndarray, sigma_x2: float, y: np.ndarray) -> np.ndarray:
    """LMMSE symbol estimates for received y (vector or column batch)."""
    return mmse_weights(b, rz, sigma_x2) @ y


@dataclass
class LinkRealization:
    """One simulated frame end to end."""

    tx_bits: np.ndarray
    tx_symbols: np.ndarray
    received: np.ndarray
    equalized: np.ndarray
    rx_bits: np.ndarray
    n_errors: int


def simulate_frame(h: np.ndarray, P: np.ndarray, noise: NoiseModel,
                   rng: np.random.Generator, sigma_x2: float = 1.0,
                   constellation: str = "bpsk", n_rx: int = 1) -> LinkRealization:
    """Draw one frame, push it through the channel and equalize it."""
    n_sym = P.shape[1]
    bits = rng.integers(0, 2, size=bits_per_symbol(constellation) * n_sym)
    x = map_bits(bits, constellation, sigma_x2)
    z = draw_mimo_noise(noise, rng, n_rx)
    y = transmit(h, P, x, z)
    b = h @ P
    x_hat = mmse_equalize(b, noise.stacked_covariance(n_rx), sigma_x2, y)
    rx_bits = demap_symbols(x_hat, constellation)
    return LinkRealization(
        tx_bits=bits, tx_symbols=x, received=y, equalized=x_hat, rx_bits=rx_bits,
        n_errors=int(np.count_nonzero(bits != rx_bits)),
    )


def wilson_interval(errors: int, n: int, z: float = _WILSON_Z) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if n <= 0:
        raise ConfigError("interval needs at least one trial")
    p = errors / n
    denom = 1.0 + z * z / n
    center = (p + z * z / (2 * n)) / denom
    half = z * np.sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n)) / denom
    return float(max(0.0, center - half)), float(min(1.0, center + half))


@dataclass
class BerEstimate:
    """Pooled bit error rate with a Wilson 95% interval."""

    ber: float
    ci_low: float
    ci_high: float
    errors: int
    bits: int


def ber_from_counts(errors: int, bits: int) -> BerEstimate:
    lo, hi = wilson_interval(errors, bits)
    return BerEstimate(ber=errors / bits, ci_low=lo, ci_high=hi, errors=errors, bits=bits)


def measure_ber(realizations: Iterable[LinkRealization]) -> BerEstimate:
    """Pool the error counts of many frames into one estimate."""
    errors = 0
    bits = 0
    for r in realizations:
        errors += r.n_errors
        bits += r.tx_bits.size
    if bits == 0:
        raise ConfigError("no frames to measure")
    return ber_from_counts(errors, bits)
