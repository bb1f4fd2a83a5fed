"""Doubly dispersive channel construction on the compressed grid.

A channel realization is a small set of paths (gain, delay, Doppler). The
matched-filtered time-frequency coupling between transmit slot (m', n') and
receive slot (m, n) for one path is an ambiguity value at the offset
(dm*beta*delta_f0 - doppler, dn*alpha*T0 - delay) times two phase factors;
summing paths gives the time-frequency channel matrix, and conjugating with
the SFFT gives the delay-Doppler matrix the equalizer works in. Matrices are
never sampled directly: they are rebuilt deterministically from the paths,
which is also what the JSON serialization stores.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import ConfigError, SystemConfig, sfft_matrix
from .pulse import RrcPulse, ambiguity_table


@dataclass(frozen=True)
class DdPath:
    """One propagation path in the delay-Doppler domain."""

    gain: complex
    delay: float
    doppler: float


def sample_paths(cfg: SystemConfig, rng: np.random.Generator) -> tuple[DdPath, ...]:
    """Draw cfg.L paths from the standard ensemble.

    Gains are i.i.d. circular complex Gaussian with variance 1/L (unit total
    mean power), delays uniform on [0, tau_max], Dopplers uniform on
    [-nu_max, nu_max]. Draw order is fixed (all gain reals, all gain imags,
    delays, Dopplers) so a given stream always yields the same realization.
    """
    re = rng.standard_normal(cfg.L)
    im = rng.standard_normal(cfg.L)
    gains = (re + 1j * im) * np.sqrt(0.5 / cfg.L)
    delays = rng.uniform(0.0, cfg.tau_max, cfg.L) if cfg.tau_max > 0 else np.zeros(cfg.L)
    dopplers = rng.uniform(-cfg.nu_max, cfg.nu_max, cfg.L) if cfg.nu_max > 0 else np.zeros(cfg.L)
    return tuple(DdPath(complex(g), float(t), float(v)) for g, t, v in zip(gains, delays, dopplers))


def tf_channel_entry(paths: Sequence[DdPath], m: int, n: int, mp: int, np_: int,
                     cfg: SystemConfig, pulse=None) -> complex:
    """Single time-frequency coupling coefficient, summed over paths.

    Scalar reference path for the vectorized builder: receive slot (m, n),
    transmit slot (m', n'). The ambiguity argument and both phase factors use
    the compressed lattice alpha*T0, beta*delta_f0.
    """
    if pulse is None:
        pulse = RrcPulse(cfg.theta, cfg.T0)
    dt = (n - np_) * cfg.alpha * cfg.T0
    df = (m - mp) * cfg.beta * cfg.delta_f0
    total = 0.0 + 0.0j
    for p in paths:
        amb = pulse.ambiguity(df - p.doppler, dt - p.delay)
        phase = np.exp(
            2j * np.pi * (
                (p.doppler + mp * cfg.beta * cfg.delta_f0) * (dt - p.delay)
                + p.doppler * np_ * cfg.alpha * cfg.T0
            )
        )
        total += p.gain * amb * phase
    return complex(total)


def build_tf_channel(paths: Sequence[DdPath], cfg: SystemConfig, pulse=None) -> np.ndarray:
    """Time-frequency channel matrix over the whole block.

    Rows and columns are flat indices n*M + m. Per path, the (2N-1)(2M-1)
    distinct ambiguity values are integrated once and the MN x MN matrix is
    filled by indexing, so cost scales with L*N quadrature batches rather
    than with the matrix size.
    """
    if pulse is None:
        pulse = RrcPulse(cfg.theta, cfg.T0)
    idx = np.arange(cfg.mn)
    m_idx = idx % cfg.M
    n_idx = idx // cfg.M
    dm_grid = m_idx[:, None] - m_idx[None, :]
    dn_grid = n_idx[:, None] - n_idx[None, :]
    dt_grid = dn_grid * cfg.alpha * cfg.T0
    mp_grid = np.broadcast_to(m_idx[None, :], (cfg.mn, cfg.mn))
    np_grid = np.broadcast_to(n_idx[None, :], (cfg.mn, cfg.mn))

    dn = np.arange(-(cfg.N - 1), cfg.N)
    taus = dn * cfg.alpha * cfg.T0

    h = np.zeros((cfg.mn, cfg.mn), dtype=complex)
    for p in paths:
        table = ambiguity_table(pulse, cfg, taus, doppler=p.doppler, delay_shift=p.delay)
        amb = table[dn_grid + cfg.N - 1, dm_grid + cfg.M - 1]
        phase = np.exp(
            2j * np.pi * (
                (p.doppler + mp_grid * cfg.beta * cfg.delta_f0) * (dt_grid - p.delay)
                + p.doppler * np_grid * cfg.alpha * cfg.T0
            )
        )
        h += p.gain * amb * phase
    return h


@dataclass
class DdChannel:
    """One channel realization with both matrix-domain representations."""

    paths: tuple[DdPath, ...]
    h_tf: np.ndarray   # time-frequency domain, MN x MN
    h_dd: np.ndarray   # delay-Doppler domain, MN x MN


def build_dd_channel(paths: Sequence[DdPath], cfg: SystemConfig, pulse=None,
                     sfft: np.ndarray | None = None) -> DdChannel:
    """Delay-Doppler channel H_dd = A H_tf A^H for the given paths."""
    if sfft is None:
        sfft = sfft_matrix(cfg)
    h_tf = build_tf_channel(paths, cfg, pulse)
    h_dd = sfft @ h_tf @ sfft.conj().T
    return DdChannel(paths=tuple(paths), h_tf=h_tf, h_dd=h_dd)


@dataclass
class MimoChannel:
    """Independent per-antenna-pair channels and their stacked block matrix."""

    blocks: list            # blocks[rx][tx] is a DdChannel
    matrix: np.ndarray      # (n_rx*MN, n_tx*MN) delay-Doppler block matrix


def build_mimo_channel(cfg: SystemConfig, rng: np.random.Generator,
                       pulse=None) -> MimoChannel:
    """Draw n_rx * n_tx independent path sets and stack the DD blocks.

    The generator is split once into n_rx*n_tx children; antenna pair
    (rx, tx) uses child rx*n_tx + tx, so block realizations are independent
    and reproducible regardless of assembly order.
    """
    if pulse is None:
        pulse = RrcPulse(cfg.theta, cfg.T0)
    sfft = sfft_matrix(cfg)
    children = rng.spawn(cfg.n_rx * cfg.n_tx)
    blocks = []
    matrix = np.zeros((cfg.n_rx * cfg.mn, cfg.n_tx * cfg.mn), dtype=complex)
    for r in range(cfg.n_rx):
        row = []
        for t in range(cfg.n_tx):
            child = children[r * cfg.n_tx + t]
            ch = build_dd_channel(sample_paths(cfg, child), cfg, pulse, sfft)
            row.append(ch)
            matrix[r * cfg.mn:(r + 1) * cfg.mn, t * cfg.mn:(t + 1) * cfg.mn] = ch.h_dd
        blocks.append(row)
    return MimoChannel(blocks=blocks, matrix=matrix)


def paths_to_json(paths: Sequence[DdPath]) -> str:
    """Serialize one path set; matrices are rebuilt, never stored."""
    return json.dumps(
        [
            {"gain_re": p.gain.real, "gain_im": p.gain.imag,
             "delay": p.delay, "doppler": p.doppler}
            for p in paths
        ]
    )


def paths_from_json(text: str) -> tuple[DdPath, ...]:
    try:
        records = json.loads(text)
        return tuple(
            DdPath(complex(r["gain_re"], r["gain_im"]), float(r["delay"]), float(r["doppler"]))
            for r in records
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed path serialization: {exc}") from exc


def mimo_paths_to_json(mimo: MimoChannel) -> str:
    """Nested [rx][tx] path serialization for a MIMO realization."""
    return json.dumps(
        [[json.loads(paths_to_json(ch.paths)) for ch in row] for row in mimo.blocks]
    )


def mimo_channel_from_paths(cfg: SystemConfig, nested, pulse=None) -> MimoChannel:
    """Rebuild a MIMO realization from nested [rx][tx] path lists."""
    if pulse is None:
        pulse = RrcPulse(cfg.theta, cfg.T0)
    if len(nested) != cfg.n_rx or any(len(row) != cfg.n_tx for row in nested):
        raise ConfigError("nested path layout does not match n_rx x n_tx")
    sfft = sfft_matrix(cfg)
    blocks = []
    matrix = np.zeros((cfg.n_rx * cfg.mn, cfg.n_tx * cfg.mn), dtype=complex)
    for r in range(cfg.n_rx):
        row = []
        for t in range(cfg.n_tx):
            ch = build_dd_channel(nested[r][t], cfg, pulse, sfft)
            row.append(ch)
            matrix[r * cfg.mn:(r + 1) * cfg.mn, t * cfg.mn:(t + 1) * cfg.mn] = ch.h_dd
        blocks.append(row)
    return MimoChannel(blocks=blocks, matrix=matrix)


def paths_digest(blocks) -> str:
    """Stable hex digest of a realization's paths.

    Accepts a flat path sequence or nested [rx][tx] lists; used to assert
    that paired sweeps really saw identical channel draws.
    """
    h = hashlib.sha256()
    if blocks and isinstance(blocks[0], DdPath):
        blocks = [[blocks]]
    for row in blocks:
        for paths in row:
            seq = paths.paths if isinstance(paths, DdChannel) else paths
            arr = np.array(
                [[p.gain.real, p.gain.imag, p.delay, p.doppler] for p in seq],
                dtype=np.float64,
            )
            h.update(arr.tobytes())
    return h.hexdigest()
