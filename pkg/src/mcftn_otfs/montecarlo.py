"""Monte Carlo sweeps over SNR with paired channel realizations.

All randomness flows through named streams keyed by (seed, purpose, indices)
that never include the scheme, the compression factors or the SNR point, so
realization r sees the same channel draw in every scheme and in every
compared configuration (common random numbers). The per-realization path
digests are kept in the result so tests can assert that pairing instead of
trusting it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .channel import build_mimo_channel, paths_digest
from .core import ConfigError, SystemConfig, rng_stream, sfft_matrix
from .link import bits_per_symbol, demap_symbols, map_bits, mmse_weights, wilson_interval, CONSTELLATIONS
from .noise import draw_mimo_noise, make_noise_model
from .precode_mimo import build_mimo_effective, mimo_capacity, sic_precode, wf_baseline, wf_structured
from .precode_siso import siso_capacity, solve_siso
from .pulse import RrcPulse, build_gram

SISO_SCHEMES = ("siso_pa", "siso_nopa", "siso_unprecoded")
MIMO_SCHEMES = ("sic", "wf_relaxed", "wf_structured")
SCHEMES = SISO_SCHEMES + MIMO_SCHEMES
METRICS = ("capacity", "ber")


@dataclass(frozen=True)
class SweepSpec:
    """What to sweep: base config, SNR grid, schemes and sample sizes."""

    config: SystemConfig
    snr_points_db: tuple
    n_realizations: int = 500
    schemes: tuple = ("siso_pa",)
    metric: str = "capacity"
    n_frames: int = 50              # frames per realization, BER metric only
    constellation: str = "bpsk"

    def __post_init__(self):
        object.__setattr__(self, "snr_points_db", tuple(float(s) for s in self.snr_points_db))
        object.__setattr__(self, "schemes", tuple(self.schemes))
        if not self.snr_points_db:
            raise ConfigError("snr_points_db must not be empty")
        if any(b <= a for a, b in zip(self.snr_points_db, self.snr_points_db[1:])):
            raise ConfigError("snr_points_db must be strictly increasing")
        if not self.schemes:
            raise ConfigError("schemes must not be empty")
        if len(set(self.schemes)) != len(self.schemes):
            raise ConfigError("schemes must be unique")
        for s in self.schemes:
            if s not in SCHEMES:
                raise ConfigError(f"unknown scheme {s!r}; valid: {', '.join(SCHEMES)}")
            if s in SISO_SCHEMES and (self.config.n_tx != 1 or self.config.n_rx != 1):
                raise ConfigError(f"scheme {s!r} needs n_tx = n_rx = 1")
        if self.metric not in METRICS:
            raise ConfigError(f"unknown metric {self.metric!r}")
        if self.n_realizations < 1:
            raise ConfigError("n_realizations must be at least 1")
        if self.n_frames < 1:
            raise ConfigError("n_frames must be at least 1")
        if self.constellation not in CONSTELLATIONS:
            raise ConfigError(f"unknown constellation {self.constellation!r}")


@dataclass(frozen=True)
class CapacityPoint:
    snr_db: float
    scheme: str
    mean: float
    stderr: float
    n: int


@dataclass(frozen=True)
class BerPoint:
    snr_db: float
    scheme: str
    ber: float
    ci_low: float
    ci_high: float
    errors: int
    bits: int
    n: int


@dataclass
class SweepResult:
    """Aggregated points plus the per-realization raw values behind them."""

    spec: SweepSpec
    points: list
    values: dict = field(repr=False)        # (scheme, snr_db) -> per-realization array
    channel_digests: tuple = field(repr=False)
    bits_per_realization: int = 0           # BER metric only
    version: str = __version__


def _precoder_matrix(scheme: str, cfg: SystemConfig, gram, sfft, h_dd, d_mimo):
    if scheme in SISO_SCHEMES:
        mode = {"siso_pa": "pa", "siso_nopa": "nopa", "siso_unprecoded": "unprecoded"}[scheme]
        return solve_siso(cfg, gram, h_dd, sfft, mode=mode).P
    if scheme == "sic":
        return sic_precode(cfg, d_mimo, gram).precoder()
    if scheme == "wf_relaxed":
        return wf_baseline(cfg, d_mimo, gram)[0]
    return wf_structured(cfg, d_mimo, gram)[0]


def _capacity_value(scheme: str, cfg: SystemConfig, gram, sfft, h_dd, d_mimo) -> float:
    if scheme in SISO_SCHEMES:
        mode = {"siso_pa": "pa", "siso_nopa": "nopa", "siso_unprecoded": "unprecoded"}[scheme]
        pre = solve_siso(cfg, gram, h_dd, sfft, mode=mode)
        return siso_capacity(pre, cfg)
    if scheme == "sic":
        return mimo_capacity(sic_precode(cfg, d_mimo, gram), cfg)
    if scheme == "wf_relaxed":
        return wf_baseline(cfg, d_mimo, gram)[1]
    return wf_structured(cfg, d_mimo, gram)[1]


def run_sweep(spec: SweepSpec) -> SweepResult:
    """Execute the sweep; deterministic for a fixed spec.

    Realizations are independent; each one draws its channel from the stream
    (seed, "paths", r), builds whatever effective channels the requested
    schemes need, then walks the SNR grid. For the BER metric the data bits
    and noise come from (seed, "bits"/"noise", r, snr index) and are shared
    by every scheme at that cell.
    """
    cfg = spec.config
    pulse = RrcPulse(cfg.theta, cfg.T0)
    gram = build_gram(cfg, pulse)
    sfft = sfft_matrix(cfg)

    needs_siso = any(s in SISO_SCHEMES for s in spec.schemes)
    needs_mimo = any(s in MIMO_SCHEMES for s in spec.schemes)
    cells = [(s, snr) for s in spec.schemes for snr in spec.snr_points_db]
    if spec.metric == "capacity":
        values = {cell: np.zeros(spec.n_realizations) for cell in cells}
    else:
        values = {cell: np.zeros(spec.n_realizations, dtype=np.int64) for cell in cells}

    n_sym = cfg.n_tx * cfg.mn
    frame_bits = bits_per_symbol(spec.constellation) * n_sym * spec.n_frames
    digests = []

    for r in range(spec.n_realizations):
        mimo = build_mimo_channel(cfg, rng_stream(cfg.seed, "paths", r), pulse)
        digests.append(paths_digest(mimo.blocks))
        h_dd = mimo.blocks[0][0].h_dd if needs_siso else None
        d_mimo = build_mimo_effective(gram, mimo.matrix, sfft, cfg.n_rx) if needs_mimo else None

        for si, snr in enumerate(spec.snr_points_db):
            cfg_s = cfg.with_snr_db(snr)
            if spec.metric == "capacity":
                for s in spec.schemes:
                    values[(s, snr)][r] = _capacity_value(s, cfg_s, gram, sfft, h_dd, d_mimo)
                continue

            model = make_noise_model(cfg_s.N0, gram, sfft)
            rz = model.stacked_covariance(cfg.n_rx)
            bits = rng_stream(cfg.seed, "bits", r, si).integers(
                0, 2, size=(bits_per_symbol(spec.constellation) * n_sym, spec.n_frames)
            )
            x = map_bits(bits, spec.constellation, cfg.sigma_x2)
            z = draw_mimo_noise(model, rng_stream(cfg.seed, "noise", r, si),
                                cfg.n_rx, n=spec.n_frames)
            for s in spec.schemes:
                P = _precoder_matrix(s, cfg_s, gram, sfft, h_dd, d_mimo)
                b = mimo.matrix @ P
                w = mmse_weights(b, rz, cfg.sigma_x2)
                rx_bits = demap_symbols(w @ (b @ x + z), spec.constellation)
                values[(s, snr)][r] = np.count_nonzero(bits != rx_bits)

    points = []
    for s in spec.schemes:
        for snr in spec.snr_points_db:
            cell = values[(s, snr)]
            if spec.metric == "capacity":
                stderr = float(np.std(cell, ddof=1) / np.sqrt(len(cell))) if len(cell) > 1 else 0.0
                points.append(CapacityPoint(snr_db=snr, scheme=s, mean=float(np.mean(cell)),
                                            stderr=stderr, n=len(cell)))
            else:
                errors = int(np.sum(cell))
                total = frame_bits * spec.n_realizations
                lo, hi = wilson_interval(errors, total)
                points.append(BerPoint(snr_db=snr, scheme=s, ber=errors / total,
                                       ci_low=lo, ci_high=hi, errors=errors,
                                       bits=total, n=spec.n_realizations))

    return SweepResult(
        spec=spec,
        points=points,
        values=values,
        channel_digests=tuple(digests),
        bits_per_realization=frame_bits if spec.metric == "ber" else 0,
    )
