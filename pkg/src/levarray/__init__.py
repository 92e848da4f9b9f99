"""levarray: phonon transport in optically bound levitated nanosphere arrays."""

__version__ = "0.1.0"

from .lattice import (
    ArrayConfig,
    CorrelationState,
    CouplingModel,
    DissipationSpec,
    build_model,
    kick_occupations,
    thermal_state,
)
from .optical_binding import (
    BeamParams,
    ForceDecomposition,
    SphereParams,
    binding_force,
    coupling_strength,
    pair_stiffness,
    polarizability,
    spring_constant,
)

__all__ = [
    "ArrayConfig",
    "BeamParams",
    "CorrelationState",
    "CouplingModel",
    "DissipationSpec",
    "ForceDecomposition",
    "SphereParams",
    "binding_force",
    "build_model",
    "coupling_strength",
    "kick_occupations",
    "pair_stiffness",
    "polarizability",
    "spring_constant",
    "thermal_state",
    "__version__",
]
