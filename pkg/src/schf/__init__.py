"""schf: spectral semiclassical Hartree-Fock simulator and verification lab."""

from .grid import TorusGrid
from .state import MixedState, coherent_state_lattice, new_mixed_state, random_mixed_state
from .interaction import InteractionKernel, riesz_constant
from .dynamics import PropagatorConfig, evolve, hf_energy, strang_step

__version__ = "0.1.0"

__all__ = [
    "TorusGrid",
    "MixedState",
    "new_mixed_state",
    "coherent_state_lattice",
    "random_mixed_state",
    "InteractionKernel",
    "riesz_constant",
    "PropagatorConfig",
    "strang_step",
    "evolve",
    "hf_energy",
    "__version__",
]
