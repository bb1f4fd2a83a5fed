"""Root raised cosine pulse, cross-ambiguity quadrature and the pulse Gram.

Compressing the symbol interval to alpha*T0 and the carrier spacing to
beta*delta_f0 makes the transmit pulses non-orthogonal. All of that
non-orthogonality is captured by the Gram matrix of the modulated pulse
family, whose entries are cross-ambiguity values

    A(f, tau) = integral g(t - tau) g(t) exp(-2j pi f (t - tau)) dt

evaluated on the lattice f = dm * beta * delta_f0, tau = dn * alpha * T0.
The Gram is Hermitian PSD with unit diagonal; its eigendecomposition (with a
relative floor that deactivates numerically dead modes) provides the square
root and inverse square root used for noise whitening and precoding.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .core import (
    ConfigError,
    DegenerateConfigurationError,
    NumericalError,
    SystemConfig,
)

# Gauss-Legendre nodes/weights on [-1, 1], cached per order.
_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _gl_rule(order: int) -> tuple[np.ndarray, np.ndarray]:
    if order not in _GL_CACHE:
        _GL_CACHE[order] = np.polynomial.legendre.leggauss(order)
    return _GL_CACHE[order]


@dataclass(frozen=True)
class RrcPulse:
    """Unit-energy root raised cosine pulse, truncated to |t| <= span*T0.

    The closed form (T0 the Nyquist interval, theta the roll-off):

        g(t) = (1/sqrt(T0)) [sin(pi u (1-theta)) + 4 theta u cos(pi u (1+theta))]
                            / [pi u (1 - (4 theta u)^2)],   u = t/T0

    with the removable singularities at u = 0 and |u| = 1/(4 theta) filled by
    their limits. The truncated pulse is renormalized to unit energy over its
    support: the amplitude tails decay like 1/t^2, so the raw truncation at
    32*T0 would leave about 1e-6 of energy outside and poison every
    unit-energy invariant downstream; renormalizing pins A(0, 0) = 1 and the
    Gram diagonal at quadrature precision instead. theta = 0 degenerates to
    a sinc whose 1/t tails defeat the truncation entirely; prefer
    :class:`SincPulse` for that regime.

    `nodes_per_t0` controls the composite Gauss-Legendre rule used for
    ambiguity integrals (one panel per T0 of overlap). The default resolves
    frequency offsets up to roughly 19/T0; raise it for very wide grids.
    """

    theta: float
    T0: float = 1.0
    span: int = 32            # truncation half-width in units of T0
    nodes_per_t0: int = 64    # quadrature nodes per T0 of overlap

    def __post_init__(self):
        if not 0.0 <= self.theta <= 1.0:
            raise ConfigError(f"theta must lie in [0, 1], got {self.theta}")
        if self.T0 <= 0.0:
            raise ConfigError("T0 must be positive")
        if self.span < 1 or self.nodes_per_t0 < 2:
            raise ConfigError("span and nodes_per_t0 must be at least 1 and 2")

    @property
    def support(self) -> float:
        """Half-width of the truncated support."""
        return self.span * self.T0

    @cached_property
    def _norm(self) -> float:
        # energy of the raw truncated pulse via the same composite rule used
        # for ambiguities; dividing by its square root makes A(0, 0) exactly 1
        x, w = _gl_rule(self.nodes_per_t0)
        starts = -self.support + self.T0 * np.arange(2 * self.span)
        t = (starts[:, None] + 0.5 * self.T0 * (x[None, :] + 1.0)).ravel()
        weights = np.tile(0.5 * self.T0 * w, 2 * self.span)
        energy = float(weights @ self._raw_amplitude(t) ** 2)
        return 1.0 / np.sqrt(energy)

    def _raw_amplitude(self, t: np.ndarray) -> np.ndarray:
        u = t / self.T0
        scale = 1.0 / np.sqrt(self.T0)
        out = np.zeros_like(u)
        inside = np.abs(t) <= self.support

        if self.theta == 0.0:
            out[inside] = scale * np.sinc(u[inside])
            return out

        th = self.theta
        # masks for the two removable singularities
        near0 = np.abs(u) < 1e-8
        nears = np.abs(np.abs(u) - 1.0 / (4.0 * th)) < 1e-8
        regular = inside & ~near0 & ~nears

        ur = u[regular]
        num = np.sin(np.pi * ur * (1.0 - th)) + 4.0 * th * ur * np.cos(np.pi * ur * (1.0 + th))
        den = np.pi * ur * (1.0 - (4.0 * th * ur) ** 2)
        out[regular] = scale * num / den

        out[inside & near0] = scale * (1.0 - th + 4.0 * th / np.pi)
        lim = (th / np.sqrt(2.0)) * (
            (1.0 + 2.0 / np.pi) * np.sin(np.pi / (4.0 * th))
            + (1.0 - 2.0 / np.pi) * np.cos(np.pi / (4.0 * th))
        )
        out[inside & nears] = scale * lim
        return out

    def amplitude(self, t) -> np.ndarray:
        """Pulse value g(t), vectorized; zero outside the truncated support."""
        t = np.asarray(t, dtype=float)
        out = self._norm * self._raw_amplitude(t)
        return out if out.ndim else float(out)

    def _overlap(self, tau: float) -> tuple[float, float]:
        lo = max(-self.support, tau - self.support)
        hi = min(self.support, tau + self.support)
        return lo, hi

    def ambiguity_batch(self, f_values: np.ndarray, tau: float) -> np.ndarray:
        """A(f, tau) for a batch of frequency offsets at one delay offset.

        Composite Gauss-Legendre over the support overlap, one panel per T0,
        shared nodes for the whole batch. Exact zero when the supports of
        g(t) and g(t - tau) no longer overlap.
        """
        f_values = np.atleast_1d(np.asarray(f_values, dtype=float))
        lo, hi = self._overlap(tau)
        if hi <= lo:
            return np.zeros(f_values.shape, dtype=complex)

        n_panels = max(1, int(np.ceil((hi - lo) / self.T0 - 1e-12)))
        x, w = _gl_rule(self.nodes_per_t0)
        width = (hi - lo) / n_panels
        starts = lo + width * np.arange(n_panels)
        t = (starts[:, None] + 0.5 * width * (x[None, :] + 1.0)).ravel()
        weights = np.tile(0.5 * width * w, n_panels)

        profile = self.amplitude(t - tau) * self.amplitude(t) * weights
        phases = np.exp(-2j * np.pi * np.outer(f_values, t - tau))
        return phases @ profile

    def ambiguity(self, f, tau) -> np.ndarray:
        """Cross-ambiguity A(f, tau); broadcasts over both arguments."""
        f_arr, tau_arr = np.broadcast_arrays(np.asarray(f, float), np.asarray(tau, float))
        out = np.zeros(f_arr.shape, dtype=complex)
        flat_f = f_arr.ravel()
        flat_tau = tau_arr.ravel()
        flat_out = out.ravel()
        for tval in np.unique(flat_tau):
            sel = flat_tau == tval
            flat_out[sel] = self.ambiguity_batch(flat_f[sel], float(tval))
        out = flat_out.reshape(f_arr.shape)
        return out if out.ndim else complex(out)


@dataclass(frozen=True)
class SincPulse:
    """Ideal sinc pulse with analytic ambiguity. Experimental.

    g(t) = sinc(t/T0)/sqrt(T0) has the flat spectrum sqrt(T0) on
    |f| <= 1/(2 T0), so the ambiguity is the spectral overlap integral

        A(f, tau) = T0 * integral_a^b exp(2j pi nu tau) d nu

    over the intersection of the two band intervals; it vanishes identically
    for |f| >= 1/T0. Provided for rectangular-filter comparisons where the
    theta = 0 raised cosine limit is numerically unusable; the 1/t amplitude
    tails mean no finite truncation is honest, so `amplitude` reports the
    untruncated sinc and the ambiguity is computed in closed form instead.
    """

    T0: float = 1.0

    def amplitude(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        out = np.sinc(t / self.T0) / np.sqrt(self.T0)
        return out if out.ndim else float(out)

    def ambiguity(self, f, tau) -> np.ndarray:
        f_arr, tau_arr = np.broadcast_arrays(np.asarray(f, float), np.asarray(tau, float))
        half = 0.5 / self.T0
        a = np.maximum(-half, f_arr - half)
        b = np.minimum(half, f_arr + half)
        out = np.zeros(f_arr.shape, dtype=complex)
        open_band = b > a
        small = np.abs(tau_arr) < 1e-15
        flat = open_band & small
        out[flat] = self.T0 * (b[flat] - a[flat])
        osc = open_band & ~small
        tau_o = tau_arr[osc]
        out[osc] = self.T0 * (
            np.exp(2j * np.pi * tau_o * b[osc]) - np.exp(2j * np.pi * tau_o * a[osc])
        ) / (2j * np.pi * tau_o)
        return out if out.ndim else complex(out)

    def ambiguity_batch(self, f_values: np.ndarray, tau: float) -> np.ndarray:
        return np.atleast_1d(self.ambiguity(np.asarray(f_values, float), tau))


@dataclass
class GramMatrix:
    """Pulse Gram with its eigendecomposition and matrix square roots.

    Eigenvalues are stored in descending order. Modes whose eigenvalue falls
    below `floor` (a relative threshold times the largest eigenvalue) are
    deactivated: they are kept in `sqrt` (clipped at zero, so sqrt @ sqrt
    still reproduces the Gram) but excluded from `inv_sqrt`, which projects
    onto the active subspace.
    """

    matrix: np.ndarray
    eigenvalues: np.ndarray          # descending, real
    eigenvectors: np.ndarray         # columns match eigenvalue order
    active: np.ndarray               # bool mask over modes
    floor: float                     # absolute deactivation threshold
    sqrt: np.ndarray = field(repr=False, default=None)
    inv_sqrt: np.ndarray = field(repr=False, default=None)

    FLOOR_REL = 1e-10
    PSD_TOL = 1e-8
    HERMITIAN_TOL = 1e-10

    @classmethod
    def from_matrix(cls, g: np.ndarray, floor_rel: float = FLOOR_REL) -> "GramMatrix":
        """Validate and decompose a Gram candidate.

        Raises NumericalError if the matrix is visibly non-Hermitian or
        indefinite beyond tolerance, DegenerateConfigurationError if every
        mode falls below the eigenvalue floor.
        """
        g = np.asarray(g, dtype=complex)
        if g.ndim != 2 or g.shape[0] != g.shape[1]:
            raise ConfigError(f"gram matrix must be square, got shape {g.shape}")
        asym = np.max(np.abs(g - g.conj().T))
        scale = max(1.0, float(np.max(np.abs(g))))
        if asym > cls.HERMITIAN_TOL * scale:
            raise NumericalError(f"gram matrix asymmetry {asym:.3e} exceeds tolerance")
        herm = 0.5 * (g + g.conj().T)
        evals, evecs = np.linalg.eigh(herm)
        evals = evals[::-1]
        evecs = evecs[:, ::-1]
        lam_max = float(evals[0])
        if lam_max <= 0.0:
            raise DegenerateConfigurationError("gram matrix has no positive eigenvalue")
        if float(evals[-1]) < -cls.PSD_TOL * lam_max:
            raise NumericalError(
                f"gram matrix indefinite: min eigenvalue {evals[-1]:.3e} "
                f"vs max {lam_max:.3e}"
            )
        floor = floor_rel * lam_max
        active = evals >= floor
        if not np.any(active):
            raise DegenerateConfigurationError("all gram eigenvalues below the floor")

        clipped = np.maximum(evals, 0.0)
        sqrt = (evecs * np.sqrt(clipped)) @ evecs.conj().T
        inv_diag = np.where(active, 1.0 / np.sqrt(np.maximum(evals, floor)), 0.0)
        inv_sqrt = (evecs * inv_diag) @ evecs.conj().T
        return cls(
            matrix=herm,
            eigenvalues=evals,
            eigenvectors=evecs,
            active=active,
            floor=floor,
            sqrt=sqrt,
            inv_sqrt=inv_sqrt,
        )

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_active(self) -> int:
        return int(np.count_nonzero(self.active))

    @property
    def condition_number(self) -> float:
        """Ratio of the largest eigenvalue to the smallest active one."""
        active_vals = self.eigenvalues[self.active]
        return float(active_vals[0] / active_vals[-1])


def ambiguity_table(pulse, cfg: SystemConfig, delays: np.ndarray, doppler: float = 0.0,
                    delay_shift: float = 0.0) -> np.ndarray:
    """A(dm*beta*delta_f0 - doppler, tau - delay_shift) for all grid offsets.

    Returns a (len(delays), 2M-1) table indexed by [dn + N - 1, dm + M - 1]
    when `delays` is the signed tau lattice. One quadrature batch per row,
    which is what makes Gram and channel assembly cheap.
    """
    dm = np.arange(-(cfg.M - 1), cfg.M)
    f_values = dm * cfg.beta * cfg.delta_f0 - doppler
    table = np.empty((len(delays), len(dm)), dtype=complex)
    for i, tau in enumerate(delays):
        table[i] = pulse.ambiguity_batch(f_values, float(tau) - delay_shift)
    return table


def build_gram(cfg: SystemConfig, pulse=None) -> GramMatrix:
    """Gram matrix of the compressed time-frequency pulse family.

    Entry (row = n1*M + m1, col = n2*M + m2):

        G[row, col] = A((m1-m2) beta delta_f0, (n1-n2) alpha T0)
                      * exp(2j pi m2 beta delta_f0 (n1-n2) alpha T0)

    Only the (2N-1)(2M-1) distinct ambiguity values are integrated; the rest
    is phase bookkeeping. Hermitian symmetry is a property of that formula,
    not enforced here, so the validation in GramMatrix.from_matrix is a real
    check on the quadrature.
    """
    if pulse is None:
        pulse = RrcPulse(cfg.theta, cfg.T0)
    if isinstance(pulse, RrcPulse) and pulse.theta == 0.0 and (cfg.alpha != 1.0 or cfg.beta != 1.0):
        raise ConfigError(
            "theta = 0 raised cosine tails decay like 1/t and defeat truncation; "
            "use SincPulse or a small positive roll-off for compressed grids"
        )

    dn = np.arange(-(cfg.N - 1), cfg.N)
    taus = dn * cfg.alpha * cfg.T0
    table = ambiguity_table(pulse, cfg, taus)

    idx = np.arange(cfg.mn)
    m_idx = idx % cfg.M
    n_idx = idx // cfg.M
    dm_grid = m_idx[:, None] - m_idx[None, :]
    dn_grid = n_idx[:, None] - n_idx[None, :]

    amb = table[dn_grid + cfg.N - 1, dm_grid + cfg.M - 1]
    phase = np.exp(
        2j * np.pi * m_idx[None, :] * cfg.beta * cfg.delta_f0 * dn_grid * cfg.alpha * cfg.T0
    )
    return GramMatrix.from_matrix(amb * phase)
