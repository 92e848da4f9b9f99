"""Time evolution of the correlation matrix, plus a classical-trajectory oracle.

Two routes:

* ``evolve_rk4`` integrates dC/dt = i[W,C] + {L,C} + M with a fixed-step
  classical RK4.  Writing A = iW + L the right-hand side is A C + C A^dag + M,
  two matrix products per stage.
* ``evolve_spectral`` uses the exact propagator C(t) = e^{iWt} C0 e^{-iWt},
  available when L = M = 0.  It is the default for closed systems and the only
  sane option for the long quench runs.

``classical_evolve`` integrates the Newtonian chain
x_i'' + Omega0_i^2 x_i + sum_n omega_n^2 (2 x_i - x_{i+n} - x_{i-n}) = 0 with
open boundaries (missing neighbors dropped), as an independent cross-check of
the rotating-wave populations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .lattice import ArrayConfig, CorrelationState, CouplingModel, _physical_couplings

OVERFLOW_LIMIT = 1e12


class IntegrationUnstableError(RuntimeError):
    """Raised when the integrator blows up; carries the offending step."""

    def __init__(self, step: int, t: float, peak: float):
        self.step = step
        self.t = t
        self.peak = peak
        super().__init__(
            f"correlation matrix exceeded {OVERFLOW_LIMIT:.0e} "
            f"(max |C_ij| = {peak:.3e}) at step {step}, t = {t:.6e} s"
        )


@dataclass
class EvolutionSettings:
    """Fixed-step integrator settings.

    ``dt`` defaults to 1e-3 of the fastest trap period, 2 pi / max W_ii.
    Samples are recorded every ``sample_stride`` steps; the Hermitian
    projection C <- (C + C^dag)/2 runs every ``hermitize_every`` steps to
    arrest round-off drift.
    """

    t_end: float
    dt: float | None = None
    sample_stride: int = 1
    hermitize_every: int = 100
    record_states: bool = False

    def __post_init__(self):
        if self.t_end <= 0:
            raise ValueError("t_end must be > 0")
        if self.dt is not None and self.dt <= 0:
            raise ValueError("dt must be > 0")
        if self.sample_stride < 1:
            raise ValueError("sample_stride must be >= 1")
        if self.hermitize_every < 1:
            raise ValueError("hermitize_every must be >= 1")


@dataclass
class TrajectorySample:
    t: float
    populations: np.ndarray
    state: CorrelationState | None = None


def default_timestep(model: CouplingModel) -> float:
    return 1e-3 * 2 * np.pi / float(np.abs(np.diag(model.w)).max())


def _hermitize(c: np.ndarray) -> np.ndarray:
    return 0.5 * (c + c.conj().T)


def evolve_rk4(
    state0: CorrelationState, model: CouplingModel, settings: EvolutionSettings
) -> list[TrajectorySample]:
    """Fixed-step RK4 on the matrix equation of motion."""
    if state0.n_sites != model.n_sites:
        raise ValueError("state and model dimensions do not match")
    dt = settings.dt if settings.dt is not None else default_timestep(model)
    n_steps = max(1, round(settings.t_end / dt))
    a = 1j * model.w + model.l
    a_dag = a.conj().T
    m_mat = model.m.astype(complex)

    def rhs(c):
        return a @ c + c @ a_dag + m_mat

    c = state0.c.copy()
    t0 = state0.t
    samples = [_sample(t0, c, settings.record_states)]
    for step in range(1, n_steps + 1):
        k1 = rhs(c)
        k2 = rhs(c + 0.5 * dt * k1)
        k3 = rhs(c + 0.5 * dt * k2)
        k4 = rhs(c + dt * k3)
        c = c + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        peak = np.abs(c).max()
        if not np.isfinite(peak) or peak > OVERFLOW_LIMIT:
            raise IntegrationUnstableError(step, t0 + step * dt, float(peak))
        if step % settings.hermitize_every == 0:
            c = _hermitize(c)
        if step % settings.sample_stride == 0 or step == n_steps:
            samples.append(_sample(t0 + step * dt, _hermitize(c), settings.record_states))
    return samples


def _sample(t: float, c: np.ndarray, record: bool) -> TrajectorySample:
    pops = np.real(np.diag(c)).copy()
    state = CorrelationState(c.copy(), t=t) if record else None
    return TrajectorySample(t=t, populations=pops, state=state)


def evolve_spectral(
    state0: CorrelationState,
    model: CouplingModel,
    times,
    record_states: bool = False,
) -> list[TrajectorySample]:
    """Exact closed-system evolution sampled at the given absolute times."""
    if not model.is_closed:
        raise ValueError("spectral evolution requires L = M = 0 (closed system)")
    if state0.n_sites != model.n_sites:
        raise ValueError("state and model dimensions do not match")
    lam, v = np.linalg.eigh(model.w)
    m0 = v.T @ state0.c @ v
    samples = []
    for t in np.atleast_1d(np.asarray(times, dtype=float)):
        phase = np.exp(1j * lam * (t - state0.t))
        c_t = v @ ((phase[:, None] * m0) * phase.conj()[None, :]) @ v.T
        samples.append(_sample(float(t), _hermitize(c_t), record_states))
    return samples


def evolve(
    state0: CorrelationState,
    model: CouplingModel,
    settings: EvolutionSettings,
    method: str = "auto",
) -> list[TrajectorySample]:
    """Evolve the correlation state; spectral path when closed, RK4 otherwise."""
    if method not in ("auto", "rk4", "spectral"):
        raise ValueError(f"unknown method {method!r}")
    if method == "auto":
        method = "spectral" if model.is_closed else "rk4"
    if method == "spectral":
        dt = settings.dt if settings.dt is not None else default_timestep(model)
        stride_dt = dt * settings.sample_stride
        n_rec = max(1, round(settings.t_end / stride_dt))
        times = state0.t + np.arange(n_rec + 1) * stride_dt
        return evolve_spectral(state0, model, times, settings.record_states)
    return evolve_rk4(state0, model, settings)


# ---------------------------------------------------------------------------
# classical oracle


@dataclass
class ClassicalTrajectory:
    t: np.ndarray
    x: np.ndarray  # (n_samples, n_sites)
    v: np.ndarray


def _stiffness_matrix(config: ArrayConfig) -> np.ndarray:
    """K with x'' = -K x, open boundaries; units s^-2."""
    n = config.n_sites
    _, kappa = _physical_couplings(config)
    omega_n_sq = kappa / config.sphere.mass
    k = np.diag(np.asarray(config.trap_frequencies, dtype=float) ** 2)
    for i in range(n):
        for sep in range(1, n):
            for j in (i - sep, i + sep):
                if 0 <= j < n:
                    k[i, i] += omega_n_sq[sep - 1]
                    k[i, j] -= omega_n_sq[sep - 1]
    return k


def classical_evolve(
    x0,
    v0,
    config: ArrayConfig,
    t_end: float,
    n_samples: int = 1000,
    rtol: float = 1e-10,
    atol: float | None = None,
) -> ClassicalTrajectory:
    """Integrate the Newtonian chain with an adaptive high-order scheme."""
    x0 = np.asarray(x0, dtype=float)
    v0 = np.asarray(v0, dtype=float)
    if not (np.all(np.isfinite(x0)) and np.all(np.isfinite(v0))):
        raise ValueError("initial conditions must be finite")
    if x0.shape != (config.n_sites,) or v0.shape != (config.n_sites,):
        raise ValueError("x0 and v0 must have one entry per site")
    k = _stiffness_matrix(config)
    n = config.n_sites
    scale = max(np.abs(x0).max(), np.abs(v0).max() / config.trap_frequencies.max(), 1e-30)
    if atol is None:
        atol = 1e-14 * scale

    def rhs(_, y):
        x, v = y[:n], y[n:]
        return np.concatenate([v, -k @ x])

    t_eval = np.linspace(0.0, t_end, n_samples)
    sol = solve_ivp(
        rhs,
        (0.0, t_end),
        np.concatenate([x0, v0]),
        method="DOP853",
        t_eval=t_eval,
        rtol=rtol,
        atol=atol,
    )
    if not sol.success:
        raise IntegrationUnstableError(0, float(sol.t[-1]) if sol.t.size else 0.0, np.nan)
    return ClassicalTrajectory(t=sol.t, x=sol.y[:n].T, v=sol.y[n:].T)


def classical_total_energy(traj: ClassicalTrajectory, config: ArrayConfig) -> np.ndarray:
    """Conserved energy: kinetic + trap + pairwise binding potential."""
    m = config.sphere.mass
    omega0 = np.asarray(config.trap_frequencies, dtype=float)
    _, kappa = _physical_couplings(config)
    e = 0.5 * m * (traj.v**2).sum(axis=1)
    e += 0.5 * m * (omega0**2 * traj.x**2).sum(axis=1)
    n = config.n_sites
    for sep in range(1, n):
        for i in range(n - sep):
            e += 0.5 * kappa[sep - 1] * (traj.x[:, i] - traj.x[:, i + sep]) ** 2
    return e


def classical_site_energies(
    traj: ClassicalTrajectory, config: ArrayConfig, frequencies=None
) -> np.ndarray:
    """Local energies E_i = m v_i^2 / 2 + m Omega_i^2 x_i^2 / 2 per sample."""
    m = config.sphere.mass
    omega = np.asarray(
        config.trap_frequencies if frequencies is None else frequencies, dtype=float
    )
    return 0.5 * m * traj.v**2 + 0.5 * m * omega**2 * traj.x**2


def windowed_average(t: np.ndarray, values: np.ndarray, window: float) -> np.ndarray:
    """Centered moving average over a time window (uniform grid assumed)."""
    dt = t[1] - t[0]
    half = max(1, int(round(window / dt / 2)))
    kernel = np.ones(2 * half + 1) / (2 * half + 1)
    out = np.empty_like(values)
    for col in range(values.shape[1]):
        out[:, col] = np.convolve(values[:, col], kernel, mode="same")
    return out


# ---------------------------------------------------------------------------
# trajectory output


def write_trajectory_csv(samples, path, time_unit: float = 1.0) -> None:
    """CSV with header ``t, n_1..n_N``; times divided by ``time_unit``."""
    samples = list(samples)
    n = samples[0].populations.size
    header = "t," + ",".join(f"n_{i + 1}" for i in range(n))
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for s in samples:
            row = [f"{s.t / time_unit:.17g}"] + [f"{x:.17g}" for x in s.populations]
            fh.write(",".join(row) + "\n")


def write_state_snapshots(samples, path) -> None:
    """Raw dump of the full C at each recorded sample.

    Fixed layout, no header: snapshots concatenated in time order, each one
    N*N little-endian float64 pairs (re, im interleaved), row-major.  The
    sample times and N live in the trajectory CSV / run manifest.
    """
    with open(path, "wb") as fh:
        for s in samples:
            if s.state is None:
                raise ValueError("snapshot dump requires record_states=True samples")
            c = np.ascontiguousarray(s.state.c)
            inter = np.empty(c.size * 2, dtype="<f8")
            inter[0::2] = c.real.ravel()
            inter[1::2] = c.imag.ravel()
            fh.write(inter.tobytes())


def read_state_snapshots(path, n_sites: int) -> np.ndarray:
    """Inverse of :func:`write_state_snapshots`; returns (n_snapshots, N, N)."""
    raw = np.fromfile(path, dtype="<f8")
    per = 2 * n_sites * n_sites
    if raw.size % per:
        raise ValueError("snapshot file length is not a whole number of matrices")
    raw = raw.reshape(-1, per)
    return (raw[:, 0::2] + 1j * raw[:, 1::2]).reshape(-1, n_sites, n_sites)
