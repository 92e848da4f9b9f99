"""Relaxation observables: phonon asymmetry, mode-population predictions,
plateau detection, and the trap-frequency profiles used in the quench runs.

The asymmetry A(t) = sum_i f_i n_i(t) / sum_i n_i(0), with weights
f_i = (2i - N - 1)/(N - 1), tracks the population-weighted mean position:
-1 with everything on the leftmost site, +1 on the rightmost, 0 for any
mirror-symmetric profile.  Abar(t) is its running time average.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .lattice import CorrelationState, CouplingModel

PROFILE_SHAPES = ("uniform", "middle_lower", "middle_higher")


def position_weights(n_sites: int) -> np.ndarray:
    """f_i = (2i - N - 1)/(N - 1) for i = 1..N; antisymmetric about the middle."""
    if n_sites < 2:
        raise ValueError("need at least 2 sites")
    i = np.arange(1, n_sites + 1)
    return (2 * i - n_sites - 1) / (n_sites - 1)


@dataclass
class AsymmetrySeries:
    times: np.ndarray
    a: np.ndarray
    a_bar: np.ndarray


def _weighted_asymmetry(populations: np.ndarray, norm: float) -> np.ndarray:
    """Mirror-paired evaluation of sum_i f_i n_i; exact zero for symmetric n."""
    n_sites = populations.shape[1]
    f = position_weights(n_sites)
    half = n_sites // 2
    left = populations[:, :half]
    right = populations[:, : n_sites - half - 1 : -1]  # mirrored columns
    return (left - right) @ f[:half] / norm


def asymmetry(samples, initial_populations=None) -> AsymmetrySeries:
    """A(t) and its running average from a recorded trajectory.

    ``samples`` is a sequence of TrajectorySample (or any objects with ``t``
    and ``populations``).  Abar uses cumulative trapezoidal quadrature on the
    recorded grid; if the series starts after t = 0 the missing head is
    approximated by the first recorded value.
    """
    samples = list(samples)
    if not samples:
        raise ValueError("empty trajectory")
    times = np.array([s.t for s in samples], dtype=float)
    pops = np.array([s.populations for s in samples], dtype=float)
    if pops.shape[1] < 2:
        raise ValueError("need at least 2 sites")
    n0 = pops[0] if initial_populations is None else np.asarray(initial_populations)
    norm = float(n0.sum())
    if norm <= 0:
        raise ValueError("total initial population must be > 0")
    a = _weighted_asymmetry(pops, norm)
    a_bar = np.empty_like(a)
    integral = cumulative_trapezoid(a, times, initial=0.0) + a[0] * times[0]
    nonzero = times > 0
    a_bar[nonzero] = integral[nonzero] / times[nonzero]
    a_bar[~nonzero] = a[~nonzero]
    return AsymmetrySeries(times=times, a=a, a_bar=a_bar)


def _mode_decomposition(model: CouplingModel, state0: CorrelationState):
    if not model.is_closed:
        raise ValueError("closed system required (L = M = 0)")
    w = model.w
    if not np.allclose(w, w.T, rtol=0, atol=1e-10 * max(1.0, np.abs(w).max())):
        raise ValueError("W must be symmetric (orthogonal diagonalization)")
    lam, v = np.linalg.eigh(w)
    m0 = v.T @ state0.c @ v
    return lam, v, m0


@dataclass
class GGEPrediction:
    """Quasi-stationary site populations from conserved mode occupations."""

    mode_frequencies: np.ndarray
    mode_occupations: np.ndarray
    site_populations: np.ndarray
    min_gap: float
    degenerate: bool


def gge_predict(model: CouplingModel, state0: CorrelationState) -> GGEPrediction:
    """Dephased (generalized-Gibbs) site populations of a closed array.

    Diagonalize W = V diag(eps) V^T; conserved occupations are the diagonal of
    C0 in the mode basis and the prediction is n_i = sum_k V_ik^2 <c_k^dag c_k>.
    Equality with the long-time average requires a non-degenerate spectrum;
    gaps below 1e-9 * max|eps| set the ``degenerate`` flag.
    """
    lam, v, m0 = _mode_decomposition(model, state0)
    mode_occ = np.real(np.diag(m0)).copy()
    site = (v**2) @ mode_occ
    gaps = np.diff(np.sort(lam))
    min_gap = float(gaps.min()) if gaps.size else np.inf
    degenerate = bool(min_gap < 1e-9 * max(np.abs(lam).max(), 1e-300))
    return GGEPrediction(
        mode_frequencies=lam,
        mode_occupations=mode_occ,
        site_populations=site,
        min_gap=min_gap,
        degenerate=degenerate,
    )


def _phase_average(x: np.ndarray) -> np.ndarray:
    """(1/T) int_0^T e^{i D t} dt = (e^{ix} - 1)/(ix) elementwise, phi(0) = 1."""
    small = np.abs(x) < 1e-12
    safe = np.where(small, 1.0, x)
    return np.where(small, 1.0, (np.exp(1j * safe) - 1.0) / (1j * safe))


def time_averaged_populations(
    model: CouplingModel,
    state0: CorrelationState,
    t_avg: float,
    method: str = "exact",
    n_samples: int = 20001,
) -> np.ndarray:
    """Mean site populations over [0, t_avg] for a closed system.

    "exact" integrates the spectral solution in closed form; "trapezoid"
    averages densely sampled populations and exists as a cross-check.
    """
    if t_avg <= 0:
        raise ValueError("t_avg must be > 0")
    lam, v, m0 = _mode_decomposition(model, state0)
    if method == "exact":
        d = lam[:, None] - lam[None, :]
        phi = _phase_average(d * t_avg)
        return np.real(np.einsum("ik,il,kl,kl->i", v, v, m0, phi))
    if method == "trapezoid":
        ts = np.linspace(0.0, t_avg, n_samples)
        pops = _populations_spectral(lam, v, m0, ts)
        return np.trapezoid(pops, ts, axis=0) / t_avg
    raise ValueError(f"unknown method {method!r}")


def _populations_spectral(lam, v, m0, times) -> np.ndarray:
    d = lam[:, None] - lam[None, :]
    out = np.empty((len(times), lam.size))
    for idx, t in enumerate(times):
        ph = np.exp(1j * d * t)
        out[idx] = np.real(np.einsum("ik,il,kl,kl->i", v, v, m0, ph))
    return out


def asymmetry_exact(
    model: CouplingModel, state0: CorrelationState, times
) -> AsymmetrySeries:
    """Closed-system A(t) and Abar(t) without quadrature error.

    Both the instantaneous value and the running integral of the spectral
    solution have closed forms in the mode basis, so arbitrary (e.g.
    logarithmic) time grids are fine.  Cross-checked against the trapezoidal
    route of :func:`asymmetry` on dense grids.
    """
    lam, v, m0 = _mode_decomposition(model, state0)
    n_sites = lam.size
    f = position_weights(n_sites)
    norm = float(np.real(np.trace(state0.c)))
    if norm <= 0:
        raise ValueError("total initial population must be > 0")
    p = np.einsum("i,ik,il,kl->kl", f, v, v, m0) / norm
    d = lam[:, None] - lam[None, :]
    times = np.atleast_1d(np.asarray(times, dtype=float))
    a = np.empty(times.size)
    a_bar = np.empty(times.size)
    for idx, t in enumerate(times):
        a[idx] = np.real(np.sum(p * np.exp(1j * d * t)))
        a_bar[idx] = np.real(np.sum(p * _phase_average(d * t)))
    return AsymmetrySeries(times=times, a=a, a_bar=a_bar)


@dataclass
class PlateauReport:
    present: bool
    t_start: float = np.nan
    t_end: float = np.nan
    level: float = np.nan

    @property
    def duration(self) -> float:
        return self.t_end - self.t_start if self.present else 0.0


def detect_plateau(
    series: AsymmetrySeries, window: float, flatness: float = 0.02
) -> PlateauReport:
    """Longest stretch where Abar is flat (within ``flatness``) and nonzero.

    A window [t, t + window] qualifies when max |Abar - mean| < flatness and
    |mean| > 3 * flatness; overlapping qualifying windows merge into one
    plateau.  The series must span at least 10x the window.
    """
    t = series.times
    y = series.a_bar
    span = t[-1] - t[0]
    if span < 10 * window:
        raise ValueError(
            f"series span {span:.3g} must cover >= 10x the window ({window:.3g})"
        )
    intervals = []
    j = 0
    for s in range(t.size):
        j = max(j, s)
        while j < t.size and t[j] <= t[s] + window:
            j += 1
        if j - s < 3:
            continue
        seg = y[s:j]
        mu = seg.mean()
        if np.abs(seg - mu).max() < flatness and abs(mu) > 3 * flatness:
            intervals.append((t[s], t[j - 1]))
    if not intervals:
        return PlateauReport(present=False)
    merged = [list(intervals[0])]
    for lo, hi in intervals[1:]:
        if lo <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], hi)
        else:
            merged.append([lo, hi])
    lo, hi = max(merged, key=lambda iv: iv[1] - iv[0])
    mask = (t >= lo) & (t <= hi)
    return PlateauReport(present=True, t_start=lo, t_end=hi, level=float(y[mask].mean()))


def trap_frequency_profile(
    n_sites: int,
    base_frequency: float,
    shape: str = "uniform",
    depth_fraction: float = 0.02,
) -> np.ndarray:
    """Parabolic trap-frequency profiles for the quench presets.

    The edges sit at ``base_frequency``; "middle_lower" dips and
    "middle_higher" bulges by ``depth_fraction * base_frequency`` at the
    center.  The default depth is calibrated against the stock array
    parameters (where it is about twice the nearest-neighbor coupling) so the
    profile gates transport without freezing it.
    """
    if shape not in PROFILE_SHAPES:
        raise ValueError(f"unknown profile shape {shape!r}; expected {PROFILE_SHAPES}")
    if base_frequency <= 0:
        raise ValueError("base_frequency must be > 0")
    if depth_fraction < 0:
        raise ValueError("depth_fraction must be >= 0")
    f = position_weights(n_sites)
    bump = 1.0 - f**2
    sign = {"uniform": 0.0, "middle_lower": -1.0, "middle_higher": +1.0}[shape]
    return base_frequency * (1.0 + sign * depth_fraction * bump)
