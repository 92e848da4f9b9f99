"""Config-file parsing for the command-line front end.

Flat INI-style key/value schema, all physical quantities SI with the unit in
the key name.  Sections and keys::

    [beam]                       required
    power_w                      beam power, W
    waist_m                      focal waist, m
    wavelength_m                 vacuum wavelength, m
    polarization_angle_rad       angle to the array axis, [0, pi/2]

    [sphere]                     required
    diameter_m
    mass_density_kg_m3           default 2200
    relative_permittivity        default 2.1

    [array]                      required
    n_sites
    spacing_m
    trap_frequency_rad_s         uniform value, or
    trap_frequencies_rad_s       comma list, one per site
    coupling_model               full_long_range | nearest_neighbor |
                                 inverse_square | next_nearest (default full_long_range)
    coupling_scale               dimensionless, default 1.0

    [dissipation]                optional; parallel comma lists
    sites                        1-based site indices
    kinds                        loss | gain per entry
    rates_rad_s                  Gamma_j per entry
    bath_occupations             n_j per entry (loss sites; default 0)

    [kick]                       optional
    site                         1-based kicked site (omit for flat background)
    magnitude                    default 1e3 quanta
    background                   default 1e-2 quanta

Unknown sections or keys are rejected so typos fail fast.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field

import numpy as np

from .lattice import COUPLING_MODELS, ArrayConfig, DissipationSpec, kick_occupations
from .optical_binding import BeamParams, SphereParams


class ConfigError(ValueError):
    """Malformed or physically invalid configuration file."""


_SCHEMA = {
    "beam": {"power_w", "waist_m", "wavelength_m", "polarization_angle_rad"},
    "sphere": {"diameter_m", "mass_density_kg_m3", "relative_permittivity"},
    "array": {
        "n_sites",
        "spacing_m",
        "trap_frequency_rad_s",
        "trap_frequencies_rad_s",
        "coupling_model",
        "coupling_scale",
    },
    "dissipation": {"sites", "kinds", "rates_rad_s", "bath_occupations"},
    "kick": {"site", "magnitude", "background"},
}
_REQUIRED_SECTIONS = ("beam", "sphere", "array")


@dataclass
class SimulationConfig:
    array: ArrayConfig
    dissipation: DissipationSpec
    kick_site: int | None  # 0-based
    kick_magnitude: float
    kick_background: float
    raw: dict = field(default_factory=dict)

    def occupations(self) -> np.ndarray:
        return kick_occupations(
            self.array.n_sites, self.kick_site, self.kick_magnitude, self.kick_background
        )


def _get_float(section, key, where, default=None) -> float:
    if key not in section:
        if default is not None:
            return default
        raise ConfigError(f"missing required key '{key}' in section [{where}]")
    try:
        return float(section[key])
    except ValueError as exc:
        raise ConfigError(
            f"key '{key}' in section [{where}] is not a number: {section[key]!r}"
        ) from exc


def _get_int(section, key, where, default=None) -> int:
    v = _get_float(section, key, where, default)
    if v != int(v):
        raise ConfigError(f"key '{key}' in section [{where}] must be an integer")
    return int(v)


def _float_list(text: str, key: str, where: str) -> list[float]:
    try:
        return [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise ConfigError(
            f"key '{key}' in section [{where}] must be a comma-separated "
            f"number list: {text!r}"
        ) from exc


def load_config(path) -> SimulationConfig:
    """Parse, validate, and assemble the full simulation configuration."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"config parse error in {path}: {exc}") from exc

    for sec in parser.sections():
        if sec not in _SCHEMA:
            raise ConfigError(f"unknown section [{sec}] in {path}")
        for key in parser[sec]:
            if key not in _SCHEMA[sec]:
                raise ConfigError(f"unknown key '{key}' in section [{sec}] of {path}")
    for sec in _REQUIRED_SECTIONS:
        if sec not in parser:
            raise ConfigError(f"missing required section [{sec}] in {path}")

    try:
        beam = BeamParams(
            power=_get_float(parser["beam"], "power_w", "beam"),
            waist=_get_float(parser["beam"], "waist_m", "beam"),
            wavelength=_get_float(parser["beam"], "wavelength_m", "beam"),
            polarization_angle=_get_float(
                parser["beam"], "polarization_angle_rad", "beam", default=np.pi / 2
            ),
        )
        sphere = SphereParams(
            diameter=_get_float(parser["sphere"], "diameter_m", "sphere"),
            mass_density=_get_float(
                parser["sphere"], "mass_density_kg_m3", "sphere", default=2200.0
            ),
            relative_permittivity=_get_float(
                parser["sphere"], "relative_permittivity", "sphere", default=2.1
            ),
        )

        arr = parser["array"]
        n_sites = _get_int(arr, "n_sites", "array")
        if "trap_frequencies_rad_s" in arr and "trap_frequency_rad_s" in arr:
            raise ConfigError(
                "give either trap_frequency_rad_s or trap_frequencies_rad_s, not both"
            )
        if "trap_frequencies_rad_s" in arr:
            freqs = np.array(
                _float_list(arr["trap_frequencies_rad_s"], "trap_frequencies_rad_s", "array")
            )
            if freqs.size != n_sites:
                raise ConfigError(
                    f"trap_frequencies_rad_s has {freqs.size} entries, expected {n_sites}"
                )
        else:
            freqs = np.full(n_sites, _get_float(arr, "trap_frequency_rad_s", "array"))
        model = arr.get("coupling_model", "full_long_range").strip()
        if model not in COUPLING_MODELS:
            raise ConfigError(
                f"unknown coupling_model {model!r}; expected one of {COUPLING_MODELS}"
            )
        array = ArrayConfig(
            n_sites=n_sites,
            spacing=_get_float(arr, "spacing_m", "array"),
            beam=beam,
            sphere=sphere,
            trap_frequencies=freqs,
            coupling_model=model,
            coupling_scale=_get_float(arr, "coupling_scale", "array", default=1.0),
        )

        if "dissipation" in parser:
            dis = parser["dissipation"]
            for key in ("sites", "kinds", "rates_rad_s"):
                if key not in dis:
                    raise ConfigError(f"missing key '{key}' in section [dissipation]")
            sites = [int(s) for s in _float_list(dis["sites"], "sites", "dissipation")]
            kinds_list = [tok.strip() for tok in dis["kinds"].split(",") if tok.strip()]
            rates = _float_list(dis["rates_rad_s"], "rates_rad_s", "dissipation")
            baths = (
                _float_list(dis["bath_occupations"], "bath_occupations", "dissipation")
                if "bath_occupations" in dis
                else [0.0] * len(sites)
            )
            if not len(sites) == len(kinds_list) == len(rates) == len(baths):
                raise ConfigError("[dissipation] lists must have equal lengths")
            all_rates = np.zeros(n_sites)
            all_kinds = ["none"] * n_sites
            all_baths = np.zeros(n_sites)
            for s, kind, rate, bath in zip(sites, kinds_list, rates, baths):
                if not 1 <= s <= n_sites:
                    raise ConfigError(
                        f"[dissipation] site {s} out of range 1..{n_sites}"
                    )
                if kind not in ("loss", "gain"):
                    raise ConfigError(
                        f"[dissipation] kind must be 'loss' or 'gain', got {kind!r}"
                    )
                all_rates[s - 1] = rate
                all_kinds[s - 1] = kind
                all_baths[s - 1] = bath
            dissipation = DissipationSpec(all_rates, tuple(all_kinds), all_baths)
        else:
            dissipation = DissipationSpec.closed(n_sites)

        kick_site = None
        kick_magnitude, kick_background = 1e3, 1e-2
        if "kick" in parser:
            kick = parser["kick"]
            if "site" in kick:
                site_1b = _get_int(kick, "site", "kick")
                if not 1 <= site_1b <= n_sites:
                    raise ConfigError(f"[kick] site {site_1b} out of range 1..{n_sites}")
                kick_site = site_1b - 1
            kick_magnitude = _get_float(kick, "magnitude", "kick", default=1e3)
            kick_background = _get_float(kick, "background", "kick", default=1e-2)
            if kick_magnitude < 0 or kick_background < 0:
                raise ConfigError("[kick] magnitude and background must be >= 0")
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"invalid configuration in {path}: {exc}") from exc

    raw = {sec: dict(parser[sec]) for sec in parser.sections()}
    return SimulationConfig(
        array=array,
        dissipation=dissipation,
        kick_site=kick_site,
        kick_magnitude=kick_magnitude,
        kick_background=kick_background,
        raw=raw,
    )
