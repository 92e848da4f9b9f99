"""Nonreciprocal phonon scattering off an adjacent gain-loss site pair.

A plane wave rides an infinite tight-binding chain (hopping g = g1, optionally
g2 = g1/2 between next-nearest neighbors) and hits a defect made of one lossy
site (-i Gamma/2) and one amplified site (+i Gamma/2).  Everything here is
dimensionless: energies delta = E - Omega and rates Gamma are in units of g1,
positions in units of the spacing b.

Geometry and phase conventions (fixed so the closed forms below hold):

* sites sit at integer x; the loss site is x = 1 and the gain site x = 2 for
  incidence from the left ("loss_to_gain"); the opposite incidence direction
  is equivalent to Gamma -> -Gamma on the same geometry,
* incident wave e^{i k x}; the reflection coefficient multiplies e^{-i k x}
  referenced to x = 0 (last free site before the defect) and the transmission
  coefficient multiplies e^{i k (x - 3)} (first free site after it),
* transmission is reciprocal, gamma_lg = gamma_gl; reflection is not.

The closed-form coefficients exist for nearest hopping; the numeric solver
handles both hoppings by solving the exact finite window around the defect.
For next-nearest hopping the dispersion quartic has extra roots (evanescent,
or at the bottom of the band a second propagating channel); the solver closes
the window with every outgoing/decaying branch, which is required for the site
equations to be satisfied exactly.  The reported coefficients always belong to
the principal (incident) branch.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

HOPPINGS = ("nearest", "next_nearest")
DIRECTIONS = ("loss_to_gain", "gain_to_loss")
NEXT_NEAREST_RATIO = 0.5  # g2 / g1


class ScatteringSingularError(RuntimeError):
    """Linear system at a resonance; carries the condition number."""

    def __init__(self, cond: float):
        self.condition_number = cond
        super().__init__(
            f"scattering linear system is singular or near-singular "
            f"(condition number {cond:.3e})"
        )


def _hop_list(hopping: str) -> list[float]:
    if hopping == "nearest":
        return [1.0]
    if hopping == "next_nearest":
        return [1.0, NEXT_NEAREST_RATIO]
    raise ValueError(f"unknown hopping model {hopping!r}; expected {HOPPINGS}")


def band_edges(hopping: str) -> tuple[float, float]:
    """Propagating band of delta = 2 sum_n g_n cos(n k b) over k in (0, pi)."""
    g = _hop_list(hopping)
    ks = np.linspace(0.0, np.pi, 20001)
    disp = sum(2 * gn * np.cos((n + 1) * ks) for n, gn in enumerate(g))
    return float(disp.min()), float(disp.max())


def _dispersion(kb, hopping: str):
    g = _hop_list(hopping)
    return sum(2 * gn * np.cos((n + 1) * np.asarray(kb)) for n, gn in enumerate(g))


def _group_velocity(kb: float, hopping: str) -> float:
    """Transport velocity of e^{i k x}: positive = rightward-moving."""
    g = _hop_list(hopping)
    return float(sum(2 * (n + 1) * gn * np.sin((n + 1) * kb) for n, gn in enumerate(g)))


def wavevector(delta: float, hopping: str = "nearest") -> float:
    """k b of the incident branch for an in-band energy offset delta.

    Nearest hopping: kb = arccos(delta/2) on (0, pi).  Next-nearest: the root
    of 2 cos kb + cos 2kb = delta on the monotone branch kb in (0, 2 pi / 3),
    which connects continuously to the nearest-hopping solution and carries a
    positive transport velocity.
    """
    lo, hi = band_edges(hopping)
    if not lo < delta < hi:
        raise ValueError(
            f"delta = {delta:.6g} lies outside the propagating band "
            f"({lo:.6g}, {hi:.6g}) for {hopping} hopping"
        )
    if hopping == "nearest":
        return float(np.arccos(delta / 2.0))
    k_max = 2 * np.pi / 3  # band minimum of the principal branch

    def f(kb):
        return _dispersion(kb, hopping) - delta

    return float(brentq(f, 1e-15, k_max, xtol=1e-15, rtol=8.9e-16))


@dataclass(frozen=True)
class ScatterParams:
    """One scattering evaluation: energy offset, defect rate, geometry."""

    delta: float
    gamma: float
    hopping: str = "nearest"
    direction: str = "loss_to_gain"

    def __post_init__(self):
        _hop_list(self.hopping)
        if self.direction not in DIRECTIONS:
            raise ValueError(
                f"unknown direction {self.direction!r}; expected {DIRECTIONS}"
            )
        lo, hi = band_edges(self.hopping)
        if not lo < self.delta < hi:
            raise ValueError(
                f"delta = {self.delta:.6g} outside the propagating band "
                f"({lo:.6g}, {hi:.6g})"
            )


@dataclass(frozen=True)
class ScatteringSolution:
    delta: float
    gamma: float
    hopping: str
    direction: str
    kb: float
    reflection: complex
    transmission: complex
    residual: float | None = None  # max site-equation residual (numeric route)


def scatter_closed_form(params: ScatterParams) -> ScatteringSolution:
    """Closed-form reflection/transmission for the nearest-hopping defect.

    Loss-to-gain incidence; the opposite direction follows from
    Gamma -> -Gamma (which leaves the transmission unchanged, the shared
    denominator being even in Gamma).
    """
    if params.hopping != "nearest":
        raise ValueError("closed form exists for nearest hopping only")
    delta = params.delta
    if abs(abs(delta) - 2.0) < 1e-12:
        raise ValueError("band edge |delta| = 2: sqrt(4 - delta^2) branch degenerate")
    g = params.gamma if params.direction == "loss_to_gain" else -params.gamma
    s = np.sqrt(4.0 - delta**2)
    denom = (
        16j
        - 2j * g**2
        - 20j * delta**2
        + 1j * g**2 * delta**2
        + 4j * delta**4
        - 12 * delta * s
        + g**2 * delta * s
        + 4 * delta**3 * s
    )
    transmission = 8 * s / denom
    reflection = -2j * (g**2 + 2 * g * s) / denom
    return ScatteringSolution(
        delta=params.delta,
        gamma=params.gamma,
        hopping=params.hopping,
        direction=params.direction,
        kb=float(np.arccos(delta / 2.0)),
        reflection=complex(reflection),
        transmission=complex(transmission),
    )


def _dispersion_roots(delta: float, hopping: str) -> np.ndarray:
    """Roots z of sum_n g_n (z^n + z^-n) = delta (palindromic polynomial)."""
    g = _hop_list(hopping)
    if len(g) == 1:
        coeffs = [g[0], -delta, g[0]]
    else:
        coeffs = [g[1], g[0], -delta, g[0], g[1]]
    return np.roots(coeffs)


def _classify_modes(delta: float, hopping: str, z0: complex):
    """Split dispersion roots into left-outgoing and right-outgoing closures.

    Left of the defect the solution may contain, besides the incident wave,
    any branch that travels left or decays toward x -> -inf; mirrored on the
    right.  Reciprocal-pair structure guarantees an even split.
    """
    roots = _dispersion_roots(delta, hopping)
    left, right = [], []
    for z in roots:
        if abs(abs(z) - 1.0) < 1e-8:
            kb = float(np.angle(z))
            v = _group_velocity(kb, hopping)
            (right if v > 0 else left).append(z / abs(z))
        elif abs(z) > 1.0:
            left.append(z)
        else:
            right.append(z)
    # order so that beta / gamma modes come first
    zr = np.conj(z0)
    left.sort(key=lambda z: abs(z - zr))
    right.sort(key=lambda z: abs(z - z0))
    if abs(left[0] - zr) > 1e-8 or abs(right[0] - z0) > 1e-8:
        raise RuntimeError("failed to locate the principal scattering branches")
    return left, right


def scatter_numeric(
    params: ScatterParams, chain_half_length: int = 30
) -> ScatteringSolution:
    """Exact finite-window solve of the defect-chain equations.

    Site amplitudes inside the window [-m, m+3] are explicit unknowns; outside
    it the field is incident wave plus outgoing/evanescent closure modes.
    Every site equation that touches an unknown is imposed, which makes the
    system square; the max residual over all imposed equations is returned.
    """
    if chain_half_length < 20:
        raise ValueError("chain_half_length must be >= 20")
    m_half = chain_half_length
    g = _hop_list(params.hopping)
    r = len(g)
    delta = params.delta
    gam = params.gamma if params.direction == "loss_to_gain" else -params.gamma

    kb = wavevector(delta, params.hopping)
    z0 = np.exp(1j * kb)
    left_modes, right_modes = _classify_modes(delta, params.hopping, z0)

    window = list(range(-m_half, m_half + 4))
    idx = {x: i for i, x in enumerate(window)}
    n_amp = len(window)
    n_unknown = n_amp + len(left_modes) + len(right_modes)
    left_cols = {i: n_amp + i for i in range(len(left_modes))}
    right_cols = {i: n_amp + len(left_modes) + i for i in range(len(right_modes))}
    x_left, x_right = -m_half, m_half + 3  # window edges / mode reference points

    def left_basis(mode_i, p):
        return left_modes[mode_i] ** (p - x_left)

    def right_basis(mode_i, p):
        return right_modes[mode_i] ** (p - x_right)

    eq_sites = list(range(-m_half - r, m_half + 4 + r))
    a = np.zeros((len(eq_sites), n_unknown), dtype=complex)
    b = np.zeros(len(eq_sites), dtype=complex)

    def add_field(row, p, w):
        if p in idx:
            a[row, idx[p]] += w
        elif p < x_left:
            b[row] -= w * z0**p
            for mi in left_cols:
                a[row, left_cols[mi]] += w * left_basis(mi, p)
        else:
            for mi in right_cols:
                a[row, right_cols[mi]] += w * right_basis(mi, p)

    for row, x in enumerate(eq_sites):
        if x == 1:
            d_x = delta + 1j * gam / 2  # loss site
        elif x == 2:
            d_x = delta - 1j * gam / 2  # gain site
        else:
            d_x = delta + 0j
        add_field(row, x, d_x)
        for n, gn in enumerate(g, start=1):
            add_field(row, x - n, -gn)
            add_field(row, x + n, -gn)

    try:
        sol = np.linalg.solve(a, b)
    except np.linalg.LinAlgError as exc:
        raise ScatteringSingularError(float(np.linalg.cond(a))) from exc
    residual = float(np.abs(a @ sol - b).max())
    if residual > 1e-8:
        raise ScatteringSingularError(float(np.linalg.cond(a)))

    # coefficient of e^{-ikx} at absolute origin / of e^{ik(x-3)} after the defect
    beta = sol[left_cols[0]] * np.conj(z0) ** (-x_left)
    gamma_amp = sol[right_cols[0]] * z0 ** (-x_right) * z0**3
    return ScatteringSolution(
        delta=params.delta,
        gamma=params.gamma,
        hopping=params.hopping,
        direction=params.direction,
        kb=kb,
        reflection=complex(beta),
        transmission=complex(gamma_amp),
        residual=residual,
    )


def scatter(
    params: ScatterParams, solver: str = "auto", chain_half_length: int = 30
) -> ScatteringSolution:
    if solver == "auto":
        solver = "closed_form" if params.hopping == "nearest" else "numeric"
    if solver == "closed_form":
        return scatter_closed_form(params)
    if solver == "numeric":
        return scatter_numeric(params, chain_half_length)
    raise ValueError(f"unknown solver {solver!r}")


# ---------------------------------------------------------------------------
# asymmetry maps and zero-reflection loci


def worker_count(requested: int | None = None) -> int:
    """Sweep parallelism, capped by the PHONON_THREADS environment variable."""
    n = requested if requested is not None else (os.cpu_count() or 1)
    cap = os.environ.get("PHONON_THREADS")
    if cap is not None:
        n = min(n, max(1, int(cap)))
    return max(1, n)


@dataclass
class AsymmetryMap:
    """eta = ln(|beta_gl|^2 / |beta_lg|^2) over a (delta, Gamma) grid.

    Arrays are indexed [i_gamma, i_delta].  Where a reflection underflows the
    log is clamped to +-eta_max; points with both reflections zero (Gamma = 0)
    are indeterminate and reported as 0.
    """

    deltas: np.ndarray
    gammas: np.ndarray
    eta: np.ndarray
    beta_lg: np.ndarray
    beta_gl: np.ndarray
    transmission: np.ndarray
    eta_max: float


def _eta_value(beta_gl: complex, beta_lg: complex, eta_max: float) -> float:
    bg, bl = abs(beta_gl) ** 2, abs(beta_lg) ** 2
    if bg < 1e-24 and bl < 1e-24:
        return 0.0
    if bg < 1e-300:
        return -eta_max
    if bl < 1e-300:
        return +eta_max
    # difference of logs keeps eta(-Gamma) = -eta(Gamma) exact in floating point
    return float(np.clip(np.log(bg) - np.log(bl), -eta_max, eta_max))


def asymmetry_map(
    deltas,
    gammas,
    hopping: str = "nearest",
    solver: str = "auto",
    eta_max: float = 30.0,
    chain_half_length: int = 30,
    threads: int | None = 1,
) -> AsymmetryMap:
    """Directional reflection asymmetry over the grid (embarrassingly parallel)."""
    deltas = np.asarray(deltas, dtype=float)
    gammas = np.asarray(gammas, dtype=float)
    lo, hi = band_edges(hopping)
    for d in deltas:
        if not lo < d < hi:
            raise ValueError(f"grid delta = {d:.6g} outside the band ({lo}, {hi})")
    shape = (gammas.size, deltas.size)
    eta = np.zeros(shape)
    beta_lg = np.zeros(shape, dtype=complex)
    beta_gl = np.zeros(shape, dtype=complex)
    trans = np.zeros(shape, dtype=complex)

    def column(j):
        d = deltas[j]
        for i, gm in enumerate(gammas):
            p_lg = ScatterParams(d, gm, hopping, "loss_to_gain")
            p_gl = ScatterParams(d, gm, hopping, "gain_to_loss")
            s_lg = scatter(p_lg, solver, chain_half_length)
            s_gl = scatter(p_gl, solver, chain_half_length)
            beta_lg[i, j] = s_lg.reflection
            beta_gl[i, j] = s_gl.reflection
            trans[i, j] = s_lg.transmission
            eta[i, j] = _eta_value(s_gl.reflection, s_lg.reflection, eta_max)

    n_workers = worker_count(threads)
    if n_workers > 1 and deltas.size > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            list(pool.map(column, range(deltas.size)))
    else:
        for j in range(deltas.size):
            column(j)
    return AsymmetryMap(deltas, gammas, eta, beta_lg, beta_gl, trans, eta_max)


@dataclass
class ZeroReflectionLocus:
    """Per-delta rates where the amplified-side-incidence reflection vanishes.

    Up to two branches; NaN marks a branch that is absent at that delta.  The
    residual columns hold the squared reflectivity that survives in the
    opposite (damped-side) incidence direction on each branch.  Branch rates
    are signed: a negative rate means the roles of the pair are swapped (the
    site hit first carries the amplification), which is how the second ridge
    of the eta map appears; see the notes on :func:`zero_reflection_locus`.
    """

    deltas: np.ndarray
    gamma1: np.ndarray
    gamma2: np.ndarray
    beta_sq_residual1: np.ndarray
    beta_sq_residual2: np.ndarray


def _amplified_side_reflection(d, s, hopping, solver, chain_half_length) -> complex:
    """Reflection for incidence arriving at the physically amplified site.

    For signed rate s > 0 that is the usual gain-to-loss direction; for s < 0
    the pair order is swapped, so left incidence onto the (now amplified)
    first site is the loss_to_gain tag evaluated at the negative rate.
    """
    direction = "gain_to_loss" if s >= 0 else "loss_to_gain"
    p = ScatterParams(d, s, hopping, direction)
    return scatter(p, solver, chain_half_length).reflection


def _damped_side_reflection(d, s, hopping, solver, chain_half_length) -> complex:
    direction = "loss_to_gain" if s >= 0 else "gain_to_loss"
    p = ScatterParams(d, s, hopping, direction)
    return scatter(p, solver, chain_half_length).reflection


def zero_reflection_locus(
    deltas,
    hopping: str = "next_nearest",
    gamma_max: float = 10.0,
    chain_half_length: int = 30,
    scan_points: int = 220,
    beta_tol: float = 1e-8,
    solver: str = "numeric",
    signed_rates: bool = False,
) -> ZeroReflectionLocus:
    """Find defect rates with vanishing amplified-side reflection.

    |beta|^2 is scanned over the rate grid; every interior local minimum
    brackets a sign change of d|beta|^2/dGamma, which brentq refines to
    1e-12.  A minimum only counts as a locus point when |beta| < beta_tol
    there (avoided crossings stay out).

    With ``signed_rates=False`` the scan covers Gamma in (0, gamma_max] and
    the exact defect equations admit a single branch there (for next-nearest
    hopping it tracks 2 sqrt(4 g^2 - (delta - g)^2) numerically).  With
    ``signed_rates=True`` the sweep also covers the swapped pair order
    (negative rates), picking up the second ridge of the eta map as a
    genuinely distinct branch; on it the wave that enters through the
    amplified site is still perfectly transmitted while the opposite
    incidence reflects.
    """
    deltas = np.asarray(deltas, dtype=float)

    def refl_sq(d, s):
        return abs(_amplified_side_reflection(d, s, hopping, solver, chain_half_length)) ** 2

    def surviving_sq(d, s):
        return abs(_damped_side_reflection(d, s, hopping, solver, chain_half_length)) ** 2

    base = np.linspace(gamma_max / scan_points, gamma_max, scan_points)
    sweeps = [base] if not signed_rates else [base, -base]
    g1 = np.full(deltas.size, np.nan)
    g2 = np.full(deltas.size, np.nan)
    r1 = np.full(deltas.size, np.nan)
    r2 = np.full(deltas.size, np.nan)
    h = 1e-7 * gamma_max
    for col, d in enumerate(deltas):
        roots = []
        for grid in sweeps:
            phi = np.array([refl_sq(d, s) for s in grid])
            for j in range(1, scan_points - 1):
                if phi[j] < phi[j - 1] and phi[j] <= phi[j + 1]:
                    dphi = lambda s: refl_sq(d, s + h) - refl_sq(d, s - h)
                    lo, hi = sorted((grid[j - 1], grid[j + 1]))
                    try:
                        s_star = brentq(dphi, lo, hi, xtol=1e-12)
                    except ValueError:
                        continue
                    if np.sqrt(refl_sq(d, s_star)) < beta_tol:
                        roots.append(s_star)
        # positive rates first (ascending), then swapped-order rates
        roots.sort(key=lambda s: (s < 0, abs(s)))
        if roots:
            g1[col] = roots[0]
            r1[col] = surviving_sq(d, roots[0])
        if len(roots) > 1:
            g2[col] = roots[1]
            r2[col] = surviving_sq(d, roots[1])
    return ZeroReflectionLocus(deltas, g1, g2, r1, r2)


def nearest_zero_reflection_gamma(delta: float) -> float:
    """Analytic nearest-hopping locus Gamma = 2 sqrt(4 - delta^2) (units of g)."""
    if abs(delta) >= 2:
        raise ValueError("delta outside the nearest-hopping band")
    return float(2 * np.sqrt(4 - delta**2))
