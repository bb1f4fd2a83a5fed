"""Colored delay-Doppler noise.

White noise enters through the non-orthogonal matched filter bank, so its
time-frequency covariance is N0 * G; in the delay-Doppler domain a draw is

    z = sqrt(N0) * A @ G^{1/2} @ w,   w circular standard complex Gaussian,

with covariance N0 * A G A^H. Receive antennas see independent draws.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ConfigError
from .pulse import GramMatrix


@dataclass
class NoiseModel:
    """Coloring and covariance of the delay-Doppler noise for one grid."""

    N0: float
    coloring: np.ndarray     # A @ G^{1/2}
    covariance: np.ndarray   # N0 * A G A^H

    def stacked_covariance(self, n_rx: int = 1) -> np.ndarray:
        """Block-diagonal covariance for n_rx independent antennas."""
        if n_rx == 1:
            return self.covariance
        return np.kron(np.eye(n_rx), self.covariance)


def make_noise_model(N0: float, gram: GramMatrix, sfft: np.ndarray) -> NoiseModel:
    if N0 < 0.0:
        raise ConfigError("N0 must be non-negative")
    coloring = sfft @ gram.sqrt
    covariance = N0 * (sfft @ gram.matrix @ sfft.conj().T)
    return NoiseModel(N0=N0, coloring=coloring, covariance=covariance)


def _standard_complex(rng: np.random.Generator, shape) -> np.ndarray:
    # real parts drawn before imaginary parts, fixed order per stream
    re = rng.standard_normal(shape)
    im = rng.standard_normal(shape)
    return (re + 1j * im) / np.sqrt(2.0)


def draw_dd_noise(model: NoiseModel, rng: np.random.Generator, n: int | None = None) -> np.ndarray:
    """One delay-Doppler noise vector, or a (grid, n) batch when n is given."""
    size = model.coloring.shape[1]
    shape = (size,) if n is None else (size, n)
    w = _standard_complex(rng, shape)
    return np.sqrt(model.N0) * (model.coloring @ w)


def draw_mimo_noise(model: NoiseModel, rng: np.random.Generator, n_rx: int,
                    n: int | None = None) -> np.ndarray:
    """Stacked noise for n_rx antennas, drawn independently per antenna.

    Antenna 0's block is drawn first, then antenna 1's, and so on, so the
    stream consumption order is part of the reproducibility contract.
    """
    parts = [draw_dd_noise(model, rng, n) for _ in range(n_rx)]
    return np.concatenate(parts, axis=0)
