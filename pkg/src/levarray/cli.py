"""Command-line front end: five batch workflows writing CSV + manifest.

Commands::

    levarray forces     --config cfg.ini --theta-deg 0,45,90 --r-range 0.5:5:200
    levarray couplings  --config cfg.ini
    levarray evolve     --config cfg.ini --t-end 20
    levarray pretherm   --config cfg.ini --preset middle-lower --coupling long_range
    levarray scatter    --grid -1.9:1.9:101,-6:6:101 --hopping nearest

All runs are deterministic (no RNG anywhere; --seedless records that
assertion in the manifest).  Dimensionless time axes are in units of
1/g_max, the largest coupling rate; the manifest records the conversion.
CSV floats carry 17 significant digits so identical inputs give
byte-identical data files.  Exit codes: 0 ok, 2 usage/config error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .config import ConfigError, SimulationConfig, load_config
from .dynamics import (
    EvolutionSettings,
    IntegrationUnstableError,
    evolve,
    write_state_snapshots,
    write_trajectory_csv,
)
from .lattice import build_model, thermal_state
from .optical_binding import binding_force
from .scattering import (
    ScatteringSingularError,
    asymmetry_map,
    band_edges,
    scatter_closed_form,
    worker_count,
    zero_reflection_locus,
)
from .thermo import (
    asymmetry_exact,
    detect_plateau,
    gge_predict,
    time_averaged_populations,
    trap_frequency_profile,
)

_PRESET_SHAPES = {
    "middle-lower": "middle_lower",
    "uniform": "uniform",
    "middle-higher": "middle_higher",
}
_PRESET_COUPLINGS = {
    "long_range": "full_long_range",
    "nearest_neighbor": "nearest_neighbor",
    "inverse_square": "inverse_square",
}


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _write_csv(path, header: str, rows) -> None:
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _parse_range(spec: str, name: str) -> np.ndarray:
    try:
        lo, hi, n = spec.split(":")
        lo, hi, n = float(lo), float(hi), int(n)
    except ValueError as exc:
        raise ConfigError(f"{name} must look like min:max:count, got {spec!r}") from exc
    if n < 1:
        raise ConfigError(f"{name} count must be >= 1")
    return np.linspace(lo, hi, n) if n > 1 else np.array([lo])


def _manifest(out_dir, command, options, config: SimulationConfig | None, outputs,
              started, extra=None) -> None:
    doc = {
        "command": command,
        "toolkit_version": __version__,
        "options": options,
        "config": config.raw if config is not None else None,
        "outputs": sorted(outputs),
        "duration_s": time.time() - started,
    }
    if extra:
        doc.update(extra)
    with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _khz(omega_rad_s: float) -> float:
    return omega_rad_s / (2 * np.pi) / 1e3


# ---------------------------------------------------------------------------
# commands


def _cmd_forces(args) -> int:
    started = time.time()
    cfg = load_config(args.config)
    thetas_deg = [float(t) for t in args.theta_deg.split(",") if t.strip()]
    if not thetas_deg:
        raise ConfigError("empty theta list; give at least one angle")
    lam = cfg.array.beam.wavelength
    r_values = _parse_range(args.r_range, "--r-range") * lam
    if r_values.min() <= cfg.array.sphere.diameter:
        raise ConfigError(
            f"R range starts at {r_values.min():.3g} m, inside the sphere "
            f"diameter {cfg.array.sphere.diameter:.3g} m"
        )
    os.makedirs(args.out, exist_ok=True)
    rows = []
    for theta_deg in thetas_deg:
        theta = np.deg2rad(theta_deg)
        beam = type(cfg.array.beam)(
            power=cfg.array.beam.power,
            waist=cfg.array.beam.waist,
            wavelength=lam,
            polarization_angle=theta,
        )
        fd = binding_force(r_values, beam, cfg.array.sphere)
        for i, r in enumerate(r_values):
            rows.append((r, theta, fd.f_xx[i], fd.f_xy[i], fd.f_x[i]))
    path = os.path.join(args.out, "forces.csv")
    _write_csv(path, "R,theta,F_xx,F_xy,F_x", rows)
    sample = rows[len(r_values) - 1]
    print(
        f"forces: {len(rows)} rows -> {path} "
        f"(F_x at R = {sample[0] * 1e6:.2f} um, theta = {np.rad2deg(sample[1]):.0f} deg: "
        f"{sample[4] * 1e15:+.3f} fN)"
    )
    _manifest(args.out, "forces", _opts(args), cfg, ["forces.csv"], started)
    return 0


def _cmd_couplings(args) -> int:
    started = time.time()
    cfg = load_config(args.config)
    model = build_model(cfg.array, cfg.dissipation)
    n = model.n_sites
    omega = np.diag(model.w)
    g = model.w - np.diag(omega)
    os.makedirs(args.out, exist_ok=True)
    mat_path = os.path.join(args.out, "coupling_matrix.csv")
    _write_csv(
        mat_path,
        "site," + ",".join(f"g_{j + 1}" for j in range(n)),
        [(i + 1, *g[i]) for i in range(n)],
    )
    freq_path = os.path.join(args.out, "frequencies.csv")
    _write_csv(freq_path, "site,omega_rad_s", [(i + 1, omega[i]) for i in range(n)])
    print(
        f"couplings: N = {n}, g_1 = {_khz(abs(model.max_coupling)):.4f} kHz, "
        f"dressed Omega_1 = {_khz(omega[0]):.2f} kHz"
    )
    _manifest(
        args.out, "couplings", _opts(args), cfg,
        ["coupling_matrix.csv", "frequencies.csv"], started,
    )
    return 0


def _cmd_evolve(args) -> int:
    started = time.time()
    cfg = load_config(args.config)
    model = build_model(cfg.array, cfg.dissipation)
    g_max = model.max_coupling
    if g_max <= 0:
        raise ConfigError("all couplings vanish; no dimensionless time unit")
    time_unit = 1.0 / g_max
    settings = EvolutionSettings(
        t_end=args.t_end * time_unit,
        dt=args.dt * time_unit if args.dt is not None else None,
        sample_stride=args.stride,
        record_states=args.snapshots,
    )
    state0 = thermal_state(cfg.occupations())
    samples = evolve(state0, model, settings, method=args.method)
    os.makedirs(args.out, exist_ok=True)
    traj_path = os.path.join(args.out, "trajectory.csv")
    write_trajectory_csv(samples, traj_path, time_unit=time_unit)
    outputs = ["trajectory.csv"]
    if args.snapshots:
        snap_path = os.path.join(args.out, "states.bin")
        write_state_snapshots(samples, snap_path)
        outputs.append("states.bin")
    print(
        f"evolve: {len(samples)} samples over t*g_max = {args.t_end:g} -> {traj_path}"
    )
    _manifest(
        args.out, "evolve", _opts(args), cfg, outputs, started,
        extra={"time_unit_s": time_unit, "n_sites": model.n_sites},
    )
    return 0


def _cmd_pretherm(args) -> int:
    started = time.time()
    cfg = load_config(args.config)
    arr = cfg.array
    shape = _PRESET_SHAPES[args.preset]
    base = float(arr.trap_frequencies[0])
    profile = trap_frequency_profile(arr.n_sites, base, shape, args.depth_fraction)
    preset_cfg = type(arr)(
        n_sites=arr.n_sites,
        spacing=arr.spacing,
        beam=arr.beam,
        sphere=arr.sphere,
        trap_frequencies=profile,
        coupling_model=_PRESET_COUPLINGS[args.coupling],
        coupling_scale=arr.coupling_scale,
    )
    # frequencies and couplings are dialed independently in the quench runs
    model = build_model(preset_cfg, dress_frequencies=False)
    g_max = model.max_coupling
    time_unit = 1.0 / g_max
    kick_site = args.kick_site - 1
    occ = np.full(arr.n_sites, cfg.kick_background)
    occ[kick_site] = cfg.kick_magnitude
    state0 = thermal_state(occ)
    tau = np.linspace(0.0, args.t_end, args.samples)
    series = asymmetry_exact(model, state0, tau * time_unit)
    series.times = tau  # report dimensionless time
    window = args.window if args.window is not None else 0.1 * args.t_end
    plateau = detect_plateau(series, window=window, flatness=args.flatness)
    gge = gge_predict(model, state0)
    avg = time_averaged_populations(model, state0, args.t_end * time_unit)

    os.makedirs(args.out, exist_ok=True)
    asym_path = os.path.join(args.out, "asymmetry.csv")
    _write_csv(
        asym_path, "t,A,Abar",
        zip(series.times, series.a, series.a_bar),
    )
    gge_path = os.path.join(args.out, "gge.csv")
    _write_csv(
        gge_path, "site,n_gge,n_timeavg",
        [(i + 1, gge.site_populations[i], avg[i]) for i in range(arr.n_sites)],
    )
    report = {
        "present": plateau.present,
        "t_start": None if not plateau.present else plateau.t_start,
        "t_end": None if not plateau.present else plateau.t_end,
        "level": None if not plateau.present else plateau.level,
        "window": window,
        "flatness": args.flatness,
        "degenerate_spectrum": gge.degenerate,
    }
    with open(os.path.join(args.out, "plateau.json"), "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    if plateau.present:
        print(
            f"pretherm [{args.preset} x {args.coupling}]: plateau at "
            f"Abar = {plateau.level:+.3f} over t*g in "
            f"[{plateau.t_start:.0f}, {plateau.t_end:.0f}]"
        )
    else:
        print(f"pretherm [{args.preset} x {args.coupling}]: no plateau detected")
    _manifest(
        args.out, "pretherm", _opts(args), cfg,
        ["asymmetry.csv", "gge.csv", "plateau.json"], started,
        extra={"time_unit_s": time_unit, "plateau": report},
    )
    return 0


def _cmd_scatter(args) -> int:
    started = time.time()
    try:
        delta_spec, gamma_spec = args.grid.split(",")
    except ValueError as exc:
        raise ConfigError(
            f"--grid must look like dmin:dmax:n,gmin:gmax:n, got {args.grid!r}"
        ) from exc
    deltas = _parse_range(delta_spec, "--grid deltas")
    gammas = _parse_range(gamma_spec, "--grid gammas")
    hopping = args.hopping.replace("-", "_")
    lo, hi = band_edges(hopping)
    in_band = (deltas > lo) & (deltas < hi)
    skipped = int((~in_band).sum())
    if skipped:
        print(
            f"warning: skipped {skipped} delta grid points at or outside the "
            f"band ({lo:g}, {hi:g})",
            file=sys.stderr,
        )
    deltas = deltas[in_band]
    if deltas.size == 0:
        raise ConfigError("no delta grid points inside the propagating band")

    os.makedirs(args.out, exist_ok=True)
    outputs = []
    threads = worker_count(args.threads)

    def write_map(path, amap):
        rows = []
        for i, gm in enumerate(amap.gammas):
            for j, d in enumerate(amap.deltas):
                rows.append(
                    (
                        d, gm, amap.eta[i, j],
                        amap.beta_lg[i, j].real, amap.beta_lg[i, j].imag,
                        amap.beta_gl[i, j].real, amap.beta_gl[i, j].imag,
                        amap.transmission[i, j].real, amap.transmission[i, j].imag,
                    )
                )
        _write_csv(
            path,
            "delta,gamma_rate,eta,beta_lg_re,beta_lg_im,beta_gl_re,beta_gl_im,"
            "trans_re,trans_im",
            rows,
        )

    if hopping == "nearest":
        amap = asymmetry_map(
            deltas, gammas, hopping, solver="closed_form", eta_max=args.eta_max
        )
        write_map(os.path.join(args.out, "eta_map.csv"), amap)
        outputs.append("eta_map.csv")
        amap_num = asymmetry_map(
            deltas, gammas, hopping, solver="numeric",
            eta_max=args.eta_max, chain_half_length=args.half_length, threads=threads,
        )
        write_map(os.path.join(args.out, "eta_map_numeric.csv"), amap_num)
        outputs.append("eta_map_numeric.csv")
    else:
        amap = asymmetry_map(
            deltas, gammas, hopping, solver="numeric",
            eta_max=args.eta_max, chain_half_length=args.half_length, threads=threads,
        )
        write_map(os.path.join(args.out, "eta_map.csv"), amap)
        outputs.append("eta_map.csv")

    margin = 0.05 * (hi - lo)
    locus_deltas = np.linspace(lo + margin, hi - margin, args.locus_points)
    locus = zero_reflection_locus(
        locus_deltas, hopping,
        gamma_max=args.locus_gamma_max, chain_half_length=args.half_length,
        signed_rates=True,
    )
    locus_path = os.path.join(args.out, "locus.csv")
    _write_csv(
        locus_path,
        "delta,gamma1,gamma2,beta2_residual",
        zip(locus.deltas, locus.gamma1, locus.gamma2, locus.beta_sq_residual1),
    )
    outputs.append("locus.csv")
    n_b1 = int(np.isfinite(locus.gamma1).sum())
    n_b2 = int(np.isfinite(locus.gamma2).sum())
    print(
        f"scatter [{hopping}]: {deltas.size}x{gammas.size} eta map, "
        f"locus branches found at {n_b1}/{locus.deltas.size} "
        f"(branch 1) and {n_b2}/{locus.deltas.size} (branch 2) deltas"
    )
    _manifest(
        args.out, "scatter", _opts(args), None, outputs, started,
        extra={"skipped_grid_points": skipped, "threads": threads},
    )
    return 0


# ---------------------------------------------------------------------------
# argument wiring


def _opts(args) -> dict:
    skip = {"func"}
    return {k: v for k, v in vars(args).items() if k not in skip}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="levarray",
        description="Phonon transport in optically bound levitated nanosphere arrays",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_config=True):
        if needs_config:
            p.add_argument("--config", required=True, help="INI config file")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument(
            "--seedless", action="store_true",
            help="assert the run uses no RNG (always true; recorded in manifest)",
        )

    p = sub.add_parser("forces", help="binding-force table over separation and angle")
    common(p)
    p.add_argument("--r-range", default="0.5:5:200",
                   help="separations, units of the wavelength, min:max:count")
    p.add_argument("--theta-deg", required=True,
                   help="comma list of polarization angles in degrees")
    p.set_defaults(func=_cmd_forces)

    p = sub.add_parser("couplings", help="coupling matrix and dressed frequencies")
    common(p)
    p.set_defaults(func=_cmd_couplings)

    p = sub.add_parser("evolve", help="integrate the correlation-matrix dynamics")
    common(p)
    p.add_argument("--t-end", type=float, default=20.0,
                   help="end time in units of 1/g_max")
    p.add_argument("--dt", type=float, default=None,
                   help="step in units of 1/g_max (default: 1e-3 trap periods)")
    p.add_argument("--stride", type=int, default=1, help="steps per recorded sample")
    p.add_argument("--snapshots", action="store_true",
                   help="also dump full C matrices (states.bin)")
    p.add_argument("--method", choices=("auto", "rk4", "spectral"), default="auto")
    p.set_defaults(func=_cmd_evolve)

    p = sub.add_parser("pretherm", help="quench run: asymmetry, GGE, plateau report")
    common(p)
    p.add_argument("--preset", choices=sorted(_PRESET_SHAPES), required=True,
                   help="trap-frequency profile preset")
    p.add_argument("--coupling", choices=sorted(_PRESET_COUPLINGS),
                   default="long_range", help="coupling model preset")
    p.add_argument("--t-end", type=float, default=1000.0,
                   help="span in units of 1/g_max")
    p.add_argument("--samples", type=int, default=2001)
    p.add_argument("--depth-fraction", type=float, default=0.02,
                   help="profile depth as a fraction of the edge frequency")
    p.add_argument("--kick-site", type=int, default=1, help="1-based kicked site")
    p.add_argument("--window", type=float, default=None,
                   help="plateau window, units of 1/g_max (default 10%% of span)")
    p.add_argument("--flatness", type=float, default=0.02,
                   help="plateau flatness threshold on Abar")
    p.set_defaults(func=_cmd_pretherm)

    p = sub.add_parser("scatter", help="nonreciprocal reflection maps and loci")
    common(p, needs_config=False)
    p.add_argument("--grid", default="-1.9:1.9:101,-6:6:101",
                   help="dmin:dmax:n,gmin:gmax:n in units of g")
    p.add_argument("--hopping", choices=("nearest", "next-nearest"),
                   default="nearest")
    p.add_argument("--eta-max", type=float, default=30.0,
                   help="clamp for log asymmetry when a reflection underflows")
    p.add_argument("--half-length", type=int, default=30,
                   help="half length of the numeric solver window")
    p.add_argument("--locus-points", type=int, default=50,
                   help="delta samples for the zero-reflection locus")
    p.add_argument("--locus-gamma-max", type=float, default=10.0)
    p.add_argument("--threads", type=int, default=None,
                   help="sweep workers (capped by PHONON_THREADS)")
    p.set_defaults(func=_cmd_scatter)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (IntegrationUnstableError, ScatteringSingularError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
