"""Rotating-wave lattice model assembly.

Builds the matrices that drive the correlation-matrix equation of motion

    dC/dt = i [W, C] + {L, C} + M

W holds the per-site frequencies on the diagonal and the phonon hopping rates
g_ij off it, L the feedback cooling (-Gamma/2) or amplification (+Gamma/2)
rates, and M the thermal injection Gamma_j n_j on lossy sites.  Everything is
in rad/s.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .optical_binding import BeamParams, SphereParams, pair_stiffness

COUPLING_MODELS = (
    "full_long_range",
    "nearest_neighbor",
    "inverse_square",
    "next_nearest",
)


class UnstableTrapError(ValueError):
    """Raised when binding shifts would push a site's total stiffness negative."""


@dataclass
class ArrayConfig:
    """Geometry and per-site trap settings for a 1-D array.

    ``trap_frequencies`` accepts a scalar (uniform array) or one value per
    site, rad/s.  ``coupling_matrix`` overrides the physical couplings with an
    explicit symmetric g_ij matrix (rad/s); ``coupling_model`` selects how the
    physical profile is synthesized otherwise.  ``coupling_scale`` is a
    dimensionless knob multiplying every g_ij (normalization conventions for
    the hopping rate differ across the literature; 1.0 keeps
    g_ij = -k_ij / (2 m sqrt(Omega_i Omega_j)) as is).
    """

    n_sites: int
    spacing: float
    beam: BeamParams
    sphere: SphereParams
    trap_frequencies: np.ndarray
    coupling_model: str = "full_long_range"
    coupling_matrix: np.ndarray | None = None
    coupling_scale: float = 1.0

    def __post_init__(self):
        if self.n_sites < 2:
            raise ValueError(f"n_sites must be >= 2, got {self.n_sites}")
        if self.spacing <= 0:
            raise ValueError(f"spacing must be > 0, got {self.spacing}")
        omega = np.atleast_1d(np.asarray(self.trap_frequencies, dtype=float))
        if omega.size == 1:
            omega = np.full(self.n_sites, omega[0])
        if omega.shape != (self.n_sites,):
            raise ValueError(
                f"trap_frequencies must be scalar or length {self.n_sites}"
            )
        if np.any(omega <= 0):
            raise ValueError("all trap frequencies must be > 0")
        self.trap_frequencies = omega
        if self.coupling_model not in COUPLING_MODELS:
            raise ValueError(
                f"unknown coupling model {self.coupling_model!r}; "
                f"expected one of {COUPLING_MODELS}"
            )
        if self.coupling_matrix is not None:
            g = np.asarray(self.coupling_matrix, dtype=float)
            if g.shape != (self.n_sites, self.n_sites):
                raise ValueError("coupling_matrix must be N x N")
            if not np.allclose(g, g.T, rtol=0, atol=1e-12 * max(1.0, np.abs(g).max())):
                raise ValueError("coupling_matrix must be symmetric")
            g = 0.5 * (g + g.T)
            np.fill_diagonal(g, 0.0)
            self.coupling_matrix = g


@dataclass
class DissipationSpec:
    """Per-site damping/amplification rates and bath occupations.

    ``kinds[j]`` is one of "none", "loss", "gain".  Gain sites enter only the
    anti-damping diagonal L and inject no thermal quanta (their bath term in M
    is zero); loss sites contribute Gamma_j * n_j to M.
    """

    rates: np.ndarray
    kinds: tuple
    bath_occupations: np.ndarray

    def __post_init__(self):
        self.rates = np.asarray(self.rates, dtype=float)
        self.bath_occupations = np.asarray(self.bath_occupations, dtype=float)
        n = self.rates.size
        self.kinds = tuple(self.kinds)
        if len(self.kinds) != n or self.bath_occupations.size != n:
            raise ValueError("rates, kinds, bath_occupations must share one length")
        for k in self.kinds:
            if k not in ("none", "loss", "gain"):
                raise ValueError(f"unknown dissipation kind {k!r}")
        if np.any(self.rates < 0):
            raise ValueError("rates must be >= 0")
        if np.any(self.bath_occupations < 0):
            raise ValueError("bath occupations must be >= 0")

    @classmethod
    def closed(cls, n_sites: int) -> "DissipationSpec":
        return cls(np.zeros(n_sites), ("none",) * n_sites, np.zeros(n_sites))

    @classmethod
    def single_loss(
        cls, n_sites: int, site: int, rate: float, bath_occupation: float = 0.0
    ) -> "DissipationSpec":
        rates = np.zeros(n_sites)
        rates[site] = rate
        kinds = tuple("loss" if j == site else "none" for j in range(n_sites))
        baths = np.zeros(n_sites)
        baths[site] = bath_occupation
        return cls(rates, kinds, baths)


@dataclass
class CouplingModel:
    """Assembled evolution matrices: W (symmetric), L and M (diagonal), rad/s."""

    w: np.ndarray
    l: np.ndarray
    m: np.ndarray

    @property
    def n_sites(self) -> int:
        return self.w.shape[0]

    @property
    def is_closed(self) -> bool:
        return not (np.any(self.l) or np.any(self.m))

    @property
    def max_coupling(self) -> float:
        off = self.w - np.diag(np.diag(self.w))
        return float(np.abs(off).max())


@dataclass
class CorrelationState:
    """Second-moment matrix C_ij = <b_i^dag b_j> at time t (dimensionless)."""

    c: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=complex)
        if self.c.ndim != 2 or self.c.shape[0] != self.c.shape[1]:
            raise ValueError("C must be a square matrix")

    @property
    def n_sites(self) -> int:
        return self.c.shape[0]

    def populations(self) -> np.ndarray:
        return np.real(np.diag(self.c)).copy()

    def trace(self) -> float:
        return float(np.real(np.trace(self.c)))

    def validate(self, hermiticity_tol: float = 1e-10, psd_tol: float = 1e-8) -> None:
        scale = max(1.0, float(np.abs(self.c).max()))
        herm = np.abs(self.c - self.c.conj().T).max()
        if herm > hermiticity_tol * scale:
            raise ValueError(f"C is not Hermitian within tolerance (dev {herm:.3e})")
        eigs = np.linalg.eigvalsh(0.5 * (self.c + self.c.conj().T))
        if eigs.min() < -psd_tol * scale:
            raise ValueError(
                f"C has a negative eigenvalue beyond tolerance ({eigs.min():.3e})"
            )


def kick_occupations(
    n_sites: int,
    site: int | None,
    magnitude: float = 1e3,
    background: float = 1e-2,
) -> np.ndarray:
    """Thermal occupation profile with one strongly excited site.

    ``site`` is 0-based; None returns the flat background.  Only the ratio
    magnitude/background matters for the normalized observables.
    """
    if magnitude < 0 or background < 0:
        raise ValueError("kick magnitude and background must be >= 0")
    n = np.full(n_sites, background, dtype=float)
    if site is not None:
        if not 0 <= site < n_sites:
            raise ValueError(f"kick site must lie in [0, {n_sites})")
        n[site] = magnitude
    return n


def thermal_state(occupations) -> CorrelationState:
    """Diagonal thermal correlation matrix C_ij = n_i delta_ij at t = 0."""
    n = np.asarray(occupations, dtype=float)
    if n.ndim != 1:
        raise ValueError("occupations must be a 1-D array")
    if np.any(n < 0):
        raise ValueError("occupations must be >= 0")
    return CorrelationState(np.diag(n.astype(complex)), t=0.0)


def _physical_couplings(config: ArrayConfig) -> tuple[np.ndarray, np.ndarray]:
    """Pair stiffness ladder kappa_n and the bare hopping profile for the tag."""
    n = config.n_sites
    dist = np.arange(1, n)
    kappa = np.atleast_1d(
        pair_stiffness(dist * config.spacing, config.beam, config.sphere)
    )
    return dist, kappa


def build_model(
    config: ArrayConfig,
    dissipation: DissipationSpec | None = None,
    dress_frequencies: bool = True,
) -> CouplingModel:
    """Assemble W, L, M for the configured array.

    The full long-range model dresses the diagonal with the binding shifts,
    Omega_i = sqrt((k0_i + sum_j k_ij) / m) with k0_i = m Omega0_i^2
    (set ``dress_frequencies=False`` to keep the bare values, e.g. when
    checking the polarization-mixing identity at fixed frequencies).
    Synthesized variants (nearest_neighbor, inverse_square, next_nearest) and
    explicit coupling matrices take the trap frequencies as given, so
    frequency profiles and couplings can be dialed independently.
    """
    n = config.n_sites
    mass = config.sphere.mass
    omega0 = config.trap_frequencies

    if config.coupling_matrix is not None:
        omega = omega0.copy()
        g = config.coupling_matrix * config.coupling_scale
    else:
        dist, kappa = _physical_couplings(config)
        if config.coupling_model == "full_long_range" and dress_frequencies:
            k0 = mass * omega0**2
            k_tot = np.empty(n)
            for i in range(n):
                others = np.abs(np.arange(n) - i)
                k_tot[i] = k0[i] + kappa[others[others > 0] - 1].sum()
            if np.any(k_tot <= 0):
                bad = int(np.argmin(k_tot))
                raise UnstableTrapError(
                    f"total stiffness at site {bad} is {k_tot[bad]:.3e} N/m <= 0; "
                    "binding shifts destabilize the trap at this spacing"
                )
            omega = np.sqrt(k_tot / mass)
        else:
            omega = omega0.copy()

        g = np.zeros((n, n))
        sqrt_omega = np.sqrt(omega)
        if config.coupling_model in ("full_long_range",):
            for sep, k_sep in zip(dist, kappa):
                for i in range(n - sep):
                    j = i + sep
                    g[i, j] = g[j, i] = -k_sep / (
                        2 * mass * sqrt_omega[i] * sqrt_omega[j]
                    )
        elif config.coupling_model == "nearest_neighbor":
            for i in range(n - 1):
                g[i, i + 1] = g[i + 1, i] = -kappa[0] / (
                    2 * mass * sqrt_omega[i] * sqrt_omega[i + 1]
                )
        elif config.coupling_model == "inverse_square":
            for sep in dist:
                for i in range(n - sep):
                    j = i + sep
                    g1 = -kappa[0] / (2 * mass * sqrt_omega[i] * sqrt_omega[j])
                    g[i, j] = g[j, i] = g1 / sep**2
        elif config.coupling_model == "next_nearest":
            for sep in (1, 2):
                if sep > n - 1:
                    continue
                for i in range(n - sep):
                    j = i + sep
                    g1 = -kappa[0] / (2 * mass * sqrt_omega[i] * sqrt_omega[j])
                    g[i, j] = g[j, i] = g1 if sep == 1 else g1 / 2
        g *= config.coupling_scale

    w = np.diag(omega) + g

    if dissipation is None:
        dissipation = DissipationSpec.closed(n)
    if dissipation.rates.size != n:
        raise ValueError("dissipation spec length does not match the array")
    l_diag = np.zeros(n)
    m_diag = np.zeros(n)
    for j, kind in enumerate(dissipation.kinds):
        if kind == "loss":
            l_diag[j] = -dissipation.rates[j] / 2
            m_diag[j] = dissipation.rates[j] * dissipation.bath_occupations[j]
        elif kind == "gain":
            l_diag[j] = +dissipation.rates[j] / 2
    return CouplingModel(w=w, l=np.diag(l_diag), m=np.diag(m_diag))
