"""Multimode squeezed-light generation in a lossy ring resonator.

Simulates dual-pump spontaneous four-wave mixing (one strong CW pump, one
weak pulsed pump) in a ring coupled to a waveguide, propagating the full
Gaussian state including pump depletion and self-consistent phase evolution,
alongside the first-order approximation for comparison.
"""

from .ring import (
    HBAR,
    ResonanceSpec,
    KGrid,
    PumpSpec,
    CouplingTensor,
    build_resonance,
    cw_amplitude,
    coupling_tensor,
    default_grids,
    initial_pump,
)
from .dynamics import (
    GaussianState,
    EvolveResult,
    evolve,
    first_order,
)
from . import algebra, fock, observables
from .config import ConfigError, RunConfig, load_config, parse_config

__all__ = [
    "HBAR",
    "ResonanceSpec",
    "KGrid",
    "PumpSpec",
    "CouplingTensor",
    "build_resonance",
    "cw_amplitude",
    "coupling_tensor",
    "default_grids",
    "initial_pump",
    "GaussianState",
    "EvolveResult",
    "evolve",
    "first_order",
    "algebra",
    "fock",
    "observables",
    "ConfigError",
    "RunConfig",
    "load_config",
    "parse_config",
]

__version__ = "0.1.0"
