"""EVD precoding with water-filling power allocation for the single-antenna link.

The whitened effective channel D = G^{-1/2} A^H H_dd turns the colored,
self-interfering link into parallel eigenmodes: with D^H D = U Lam_D U^H and
the precoder P = U Lam_P^{1/2}, the mutual information splits into per-mode
terms log2(1 + (sigma_x^2/N0) lam_P lam_D). The transmit energy constraint
is tr(G P P^H) <= budget, which in the eigenbasis reads
sum_k lam_P[k] * phi[k] <= budget with phi = diag(U^H G U); maximizing under
that weighted budget is a water-filling problem solved here by bisection on
the water level plus an exact closed-form polish on the discovered active set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import ConfigError, NumericalError, SystemConfig
from .pulse import GramMatrix

LN2 = math.log(2.0)
PHI_FLOOR = 1e-12       # weights below this deactivate the mode
XI_LO = 1e-12           # bisection bracket for the water level multiplier
XI_HI = 1e12
MAX_BISECT = 200


def build_effective_channel(gram: GramMatrix, h_dd: np.ndarray, sfft: np.ndarray) -> np.ndarray:
    """Whitened effective channel D = G^{-1/2} A^H H_dd.

    Deactivated Gram modes are projected out by the pseudo inverse square
    root, so D's row space is restricted to the active subspace.
    """
    h_dd = np.asarray(h_dd, dtype=complex)
    if h_dd.shape != gram.matrix.shape:
        raise ConfigError(f"channel shape {h_dd.shape} does not match gram {gram.matrix.shape}")
    return gram.inv_sqrt @ sfft.conj().T @ h_dd


def _allocation(xi: float, lam_d, phi, noise_over_sig, active) -> np.ndarray:
    lam_p = np.zeros_like(lam_d)
    lam_p[active] = 1.0 / (xi * phi[active] * LN2) - noise_over_sig[active]
    return np.maximum(lam_p, 0.0)


def waterfill(lam_d: np.ndarray, phi: np.ndarray, sigma_x2: float, N0: float,
              budget: float | None = None) -> tuple[np.ndarray, float]:
    """Water-filling over eigenmodes with weighted power accounting.

    Maximizes sum log2(1 + (sigma_x2/N0) lam_P lam_D) subject to
    sum lam_P * phi <= budget and lam_P >= 0. The stationary form is

        lam_P[k] = max(1/(xi phi[k] ln 2) - N0 / (lam_D[k] sigma_x2), 0)

    with the multiplier xi chosen by bisection so the budget binds; the
    returned allocation is then recomputed exactly from the KKT conditions
    on the discovered active set, so the budget holds to machine precision.
    Modes with lam_D = 0 or phi below 1e-12 get zero power. Returns
    (lam_P, xi); xi is inf when no mode can carry power.
    """
    lam_d = np.asarray(lam_d, dtype=float)
    phi = np.asarray(phi, dtype=float)
    if lam_d.shape != phi.shape:
        raise ConfigError("lam_d and phi must have matching shapes")
    if budget is None:
        budget = float(lam_d.size)
    if budget <= 0.0:
        raise ConfigError("power budget must be positive")

    active = (lam_d > 0.0) & (phi >= PHI_FLOOR)
    if not np.any(active):
        return np.zeros_like(lam_d), math.inf

    # N0 = 0 makes the noise term vanish; the formula handles it directly
    noise_over_sig = np.zeros_like(lam_d)
    noise_over_sig[active] = N0 / (lam_d[active] * sigma_x2)

    def spent(xi: float) -> float:
        return float(phi @ _allocation(xi, lam_d, phi, noise_over_sig, active))

    lo, hi = XI_LO, XI_HI
    if spent(lo) < budget:
        raise NumericalError("water-filling bracket too small at the low end")
    if spent(hi) > budget:
        raise NumericalError("water-filling bracket too small at the high end")
    for _ in range(MAX_BISECT):
        mid = math.sqrt(lo * hi)   # bisect in log space
        if spent(mid) > budget:
            lo = mid
        else:
            hi = mid
        if hi / lo < 1.0 + 1e-14:
            break
    xi = math.sqrt(lo * hi)
    lam_p = _allocation(xi, lam_d, phi, noise_over_sig, active)

    # exact polish: solve the budget equality on the active set found above
    on = lam_p > 0.0
    if np.any(on):
        count = int(np.count_nonzero(on))
        xi_star = count / (LN2 * (budget + float(phi[on] @ noise_over_sig[on])))
        polished = _allocation(xi_star, lam_d, phi, noise_over_sig, active)
        if np.array_equal(polished > 0.0, on):
            xi, lam_p = xi_star, polished

    if np.any(lam_p > 0.0):
        rel_err = abs(float(phi @ lam_p) - budget) / budget
        if rel_err > 1e-10:
            raise NumericalError(f"water-filling budget error {rel_err:.3e}")
    return lam_p, xi


@dataclass
class SisoPrecoder:
    """Solved precoder: eigenstructure, allocation and the matrix P itself."""

    mode: str                 # "pa", "nopa" or "unprecoded"
    D: np.ndarray
    U: np.ndarray             # eigenbasis of D^H D, descending eigenvalues
    lam_d: np.ndarray
    phi: np.ndarray           # diag(U^H G U), clamped at the weight floor
    lam_p: np.ndarray
    xi: float
    P: np.ndarray
    sigma_x2: float
    N0: float
    budget: float


def solve_siso(cfg: SystemConfig, gram: GramMatrix, h_dd: np.ndarray,
               sfft: np.ndarray, mode: str = "pa") -> SisoPrecoder:
    """Build D, diagonalize it and allocate power.

    mode "pa": water-filled allocation. mode "nopa": unit allocation in the
    eigenbasis (P = U), which removes self-interference but leaves capacity
    on the table. mode "unprecoded": P = I. All three meet the energy budget
    tr(G P P^H) = MN exactly because tr(G) = MN.
    """
    if mode not in ("pa", "nopa", "unprecoded"):
        raise ConfigError(f"unknown precoder mode {mode!r}")
    D = build_effective_channel(gram, h_dd, sfft)
    normal = D.conj().T @ D
    evals, evecs = np.linalg.eigh(0.5 * (normal + normal.conj().T))
    lam_d = np.maximum(evals[::-1], 0.0)
    U = evecs[:, ::-1]
    phi = np.einsum("ji,jk,ki->i", U.conj(), gram.matrix, U).real
    phi = np.maximum(phi, 0.0)

    budget = float(cfg.mn)
    if mode == "pa":
        lam_p, xi = waterfill(lam_d, phi, cfg.sigma_x2, cfg.N0, budget)
        P = U * np.sqrt(lam_p)
    elif mode == "nopa":
        lam_p = np.ones_like(lam_d)
        xi = math.nan
        P = U.copy()
    else:
        lam_p = np.ones_like(lam_d)
        xi = math.nan
        P = np.eye(len(lam_d), dtype=complex)
    return SisoPrecoder(mode=mode, D=D, U=U, lam_d=lam_d, phi=phi, lam_p=lam_p,
                        xi=xi, P=P, sigma_x2=cfg.sigma_x2, N0=cfg.N0, budget=budget)


def capacity_bits(pre: SisoPrecoder) -> float:
    """Mutual information of the precoded block in bits.

    Valid for all three modes: with P = U Lam_P^{1/2} the log-det splits over
    modes, and for P = I it collapses to the same expression because
    det(I + c D^H D) only sees the eigenvalues.
    """
    if pre.N0 == 0.0:
        return math.inf if np.any(pre.lam_p * pre.lam_d > 0.0) else 0.0
    c = pre.sigma_x2 / pre.N0
    return float(np.sum(np.log2(1.0 + c * pre.lam_p * pre.lam_d)))


def siso_capacity(pre: SisoPrecoder, cfg: SystemConfig) -> float:
    """Capacity normalized per unit of occupied time-frequency-energy,
    bits / (alpha beta M N E0)."""
    return capacity_bits(pre) / (cfg.alpha * cfg.beta * cfg.mn * cfg.E0)


def precode(pre: SisoPrecoder, x: np.ndarray) -> np.ndarray:
    """Apply the precoder to a symbol vector (or a batch of columns)."""
    return pre.P @ x
