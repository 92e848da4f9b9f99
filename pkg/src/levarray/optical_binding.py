"""Optical binding between dipole-approximated nanospheres.

Two sub-wavelength spheres sitting on the x axis, each held by its own
linearly polarized Gaussian tweezer, exchange momentum through the field that
each induced dipole scatters onto the other.  The axial force splits into a
contribution from the field component parallel to the array (``F_xx``) and one
from the perpendicular component (``F_xy``); mixing between them is set by the
polarization angle ``theta`` through ``E_x = E0 cos(theta)``,
``E_y = E0 sin(theta)``.

Conventions
-----------
* All quantities are SI.  ``R`` is the centre-to-centre separation.
* ``F_x = F_xx + F_xy`` is the axial force on the outer sphere of the pair,
  positive pointing away from its partner (positive = repulsive).  With this
  orientation the perpendicular-polarization force has stable zeros near
  integer multiples of the wavelength, which is where arrays are parked.
* ``spring_constant`` is the literal derivative ``dF_x/dR``; the restoring
  stiffness of the pair potential is its negative, ``pair_stiffness``
  (= V''(R)), and that is what enters chain dynamics and phonon hopping.
* The mid-range term of the parallel-field bracket is kept as
  ``-3 kR cos kR``; some point-dipole derivations carry a sine there instead.
  The far-field power laws targeted by this toolkit are unaffected.

Far-field behaviour: ``|F_x| ~ R^-2`` for polarization along the array
(Coulomb-like) and ``|F_x| ~ R^-1`` for perpendicular polarization.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .constants import EPSILON_0, SPEED_OF_LIGHT


@dataclass(frozen=True)
class BeamParams:
    """Trapping-beam parameters shared by every tweezer in the array.

    Parameters
    ----------
    power : float
        Optical power per beam (W).
    waist : float
        Focal waist w0 (m).
    wavelength : float
        Vacuum wavelength (m).
    polarization_angle : float
        Angle between the linear polarization and the array (x) axis, in
        [0, pi/2] rad.  0 = parallel, pi/2 = perpendicular.
    """

    power: float
    waist: float
    wavelength: float
    polarization_angle: float = np.pi / 2

    def __post_init__(self):
        if self.power < 0:
            raise ValueError(f"beam power must be >= 0, got {self.power}")
        if self.waist <= 0:
            raise ValueError(f"beam waist must be > 0, got {self.waist}")
        if self.wavelength <= 0:
            raise ValueError(f"wavelength must be > 0, got {self.wavelength}")
        if not 0 <= self.polarization_angle <= np.pi / 2 + 1e-12:
            raise ValueError(
                "polarization_angle must lie in [0, pi/2], got "
                f"{self.polarization_angle}"
            )

    @property
    def wavenumber(self) -> float:
        return 2 * np.pi / self.wavelength

    @property
    def peak_field_squared(self) -> float:
        """E0^2 at the focus of a Gaussian beam: 4 P / (pi eps0 c w0^2)."""
        return 4 * self.power / (np.pi * EPSILON_0 * SPEED_OF_LIGHT * self.waist**2)


@dataclass(frozen=True)
class SphereParams:
    """Dielectric nanosphere parameters.

    Defaults are fused silica at telecom wavelengths.
    """

    diameter: float
    mass_density: float = 2200.0
    relative_permittivity: float = 2.1

    def __post_init__(self):
        if self.diameter <= 0:
            raise ValueError(f"diameter must be > 0, got {self.diameter}")
        if self.mass_density <= 0:
            raise ValueError(f"mass_density must be > 0, got {self.mass_density}")
        if self.relative_permittivity <= 0:
            raise ValueError(
                "relative_permittivity must be > 0, got "
                f"{self.relative_permittivity}"
            )

    @property
    def radius(self) -> float:
        return self.diameter / 2

    @property
    def volume(self) -> float:
        return 4 / 3 * np.pi * self.radius**3

    @property
    def mass(self) -> float:
        return self.mass_density * self.volume


@dataclass(frozen=True)
class ForceDecomposition:
    """Axial binding force at separation ``separation``, split by field component.

    ``f_xx`` comes from the field component along the array, ``f_xy`` from the
    perpendicular one.  Values are forces on the outer sphere (positive =
    repulsive), in newtons.  Fields may be scalars or arrays.
    """

    separation: np.ndarray
    f_xx: np.ndarray
    f_xy: np.ndarray

    @property
    def f_x(self) -> np.ndarray:
        return self.f_xx + self.f_xy


def polarizability(sphere: SphereParams) -> float:
    """Clausius-Mossotti point-dipole polarizability, alpha (C m^2 / V).

    alpha = 4 pi eps0 a^3 (eps - 1) / (eps + 2)
    """
    eps = sphere.relative_permittivity
    a = sphere.radius
    return 4 * np.pi * EPSILON_0 * a**3 * (eps - 1) / (eps + 2)


def _check_dipole_regime(beam: BeamParams, sphere: SphereParams) -> None:
    if sphere.diameter >= beam.wavelength / 5:
        warnings.warn(
            "sphere diameter is not small against the wavelength "
            f"({sphere.diameter:.3g} m vs lambda/5 = {beam.wavelength / 5:.3g} m); "
            "the dipole approximation degrades",
            stacklevel=3,
        )


def _bracket_xx(u):
    # -3 cos u - 3u cos u + u^2 cos u
    return (u**2 - 3 * u - 3) * np.cos(u)


def _bracket_xx_prime(u):
    return (2 * u - 3) * np.cos(u) - (u**2 - 3 * u - 3) * np.sin(u)


def _bracket_xy(u):
    return 3 * np.cos(u) + 3 * u * np.sin(u) - 2 * u**2 * np.cos(u) - u**3 * np.sin(u)


def _bracket_xy_prime(u):
    return -u * (1 + u**2) * np.cos(u) - u**2 * np.sin(u)


def _amplitudes(beam: BeamParams, sphere: SphereParams) -> tuple[float, float]:
    """Prefactors C_xx, C_xy with F = C * bracket(kR) / R^4."""
    alpha = polarizability(sphere)
    e0_sq = beam.peak_field_squared
    ex_sq = e0_sq * np.cos(beam.polarization_angle) ** 2
    ey_sq = e0_sq * np.sin(beam.polarization_angle) ** 2
    c_xx = 2 * alpha**2 * ex_sq / (8 * np.pi * EPSILON_0)
    c_xy = alpha**2 * ey_sq / (8 * np.pi * EPSILON_0)
    return c_xx, c_xy


def binding_force(
    separation, beam: BeamParams, sphere: SphereParams
) -> ForceDecomposition:
    """Optical binding force between a sphere pair at the given separation(s).

    Parameters
    ----------
    separation : float or array
        Centre-to-centre distance R (m); must exceed the sphere diameter.

    Returns
    -------
    ForceDecomposition
        F_xx and F_xy evaluated at each separation, newtons.
    """
    r = np.asarray(separation, dtype=float)
    if np.any(r <= 0):
        raise ValueError("separation must be > 0")
    if np.any(r <= sphere.diameter):
        raise ValueError(
            f"separation must exceed the sphere diameter ({sphere.diameter:.3g} m); "
            "spheres overlap"
        )
    _check_dipole_regime(beam, sphere)
    u = beam.wavenumber * r
    c_xx, c_xy = _amplitudes(beam, sphere)
    f_xx = c_xx * _bracket_xx(u) / r**4
    f_xy = c_xy * _bracket_xy(u) / r**4
    if np.ndim(separation) == 0:
        return ForceDecomposition(float(r), float(f_xx), float(f_xy))
    return ForceDecomposition(r, f_xx, f_xy)


def spring_constant(separation, beam: BeamParams, sphere: SphereParams):
    """Analytic derivative dF_x/dR of the binding force, N/m.

    Closed form; tested against central finite differences of
    :func:`binding_force`.  Note this is the raw derivative; the restoring
    stiffness used by the chain model is :func:`pair_stiffness` = -dF_x/dR.
    """
    r = np.asarray(separation, dtype=float)
    if np.any(r <= 0):
        raise ValueError("separation must be > 0")
    k = beam.wavenumber
    u = k * r
    c_xx, c_xy = _amplitudes(beam, sphere)
    d_xx = c_xx * (k * _bracket_xx_prime(u) / r**4 - 4 * _bracket_xx(u) / r**5)
    d_xy = c_xy * (k * _bracket_xy_prime(u) / r**4 - 4 * _bracket_xy(u) / r**5)
    out = d_xx + d_xy
    return float(out) if np.ndim(separation) == 0 else out


def pair_stiffness(separation, beam: BeamParams, sphere: SphereParams):
    """Restoring stiffness V''(R) = -dF_x/dR of the pair potential, N/m.

    Positive at the stable binding separations (near integer multiples of the
    wavelength for perpendicular polarization); this is the spring constant
    that enters the chain equations of motion and the phonon hopping rates.
    """
    return -np.asarray(spring_constant(separation, beam, sphere)) + 0.0


@dataclass(frozen=True)
class SpringConstants:
    """Chain stiffnesses k_n for pair distances n*d, n = 1..n_max.

    ``omega_n = sqrt(k_n / m)`` is only defined where k_n >= 0; entries with
    negative stiffness hold NaN there.
    """

    spacing: float
    k_n: np.ndarray
    omega_n: np.ndarray


def chain_spring_constants(
    n_max: int, spacing: float, beam: BeamParams, sphere: SphereParams
) -> SpringConstants:
    """Stiffness ladder for a uniformly spaced chain (pair distances 1..n_max)."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    if spacing <= 0:
        raise ValueError("spacing must be > 0")
    n = np.arange(1, n_max + 1)
    k_n = pair_stiffness(n * spacing, beam, sphere)
    with np.errstate(invalid="ignore"):
        omega = np.where(k_n >= 0, np.sqrt(np.abs(k_n) / sphere.mass), np.nan)
    return SpringConstants(spacing, k_n, omega)


def coupling_strength(i: int, j: int, config) -> float:
    """Phonon hopping rate g_ij between sites i and j (rad/s).

    g_ij = -k_ij / (2 m sqrt(Omega_i Omega_j)) with k_ij the pair stiffness at
    separation |i-j| d and Omega the per-site trap frequencies taken as stored
    in the config (no dressing).  Symmetric in (i, j); negative for the stock
    perpendicular-polarization array at d = lambda.
    """
    if i == j:
        raise ValueError("coupling_strength requires i != j")
    n_sites = config.n_sites
    if not (0 <= i < n_sites and 0 <= j < n_sites):
        raise ValueError(f"site indices must lie in [0, {n_sites})")
    omega = np.asarray(config.trap_frequencies, dtype=float)
    if np.any(omega <= 0):
        raise ValueError("trap frequencies must be > 0")
    kappa = pair_stiffness(abs(i - j) * config.spacing, config.beam, config.sphere)
    scale = getattr(config, "coupling_scale", 1.0)
    m = config.sphere.mass
    return float(-scale * kappa / (2 * m * np.sqrt(omega[i] * omega[j])))


def trap_frequency_from_power_ratio(base_frequency: float, power_ratio) -> np.ndarray:
    """Map per-site laser power ratios to trap frequencies via Omega ~ sqrt(P)."""
    ratio = np.asarray(power_ratio, dtype=float)
    if np.any(ratio <= 0):
        raise ValueError("power ratios must be > 0")
    return base_frequency * np.sqrt(ratio)


def far_field_slope(
    beam: BeamParams,
    sphere: SphereParams,
    kr_min: float = 50.0,
    kr_max: float = 500.0,
    samples_per_period: int = 48,
) -> float:
    """Fitted log-log slope of the |F_x| envelope over kR in [kr_min, kr_max].

    The force oscillates on the wavelength scale, so the fit runs over the
    per-half-period maxima of |F_x| (one point per pi interval of kR), which
    tracks the envelope without being dragged down by the zeros.
    """
    k = beam.wavenumber
    m_lo = int(np.ceil(kr_min / np.pi))
    m_hi = int(np.floor(kr_max / np.pi))
    if m_hi - m_lo < 8:
        raise ValueError("kr range too narrow for an envelope fit")
    log_r = []
    log_f = []
    for m in range(m_lo, m_hi):
        u = np.linspace(m * np.pi, (m + 1) * np.pi, samples_per_period, endpoint=False)
        r = u / k
        f = np.abs(binding_force(r, beam, sphere).f_x)
        j = int(np.argmax(f))
        log_r.append(np.log(r[j]))
        log_f.append(np.log(f[j]))
    slope, _ = np.polyfit(log_r, log_f, 1)
    return float(slope)
