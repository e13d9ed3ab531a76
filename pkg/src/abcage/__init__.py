"""Aharonov-Bohm caging with synthetic U(2) link fields on a trapped-ion spin-phonon lattice."""
from .dynamics import (
    IntegrationError,
    NoiseModel,
    Trajectory,
    evolve_lindblad,
    evolve_unitary,
    p0,
    prepare_state,
    site_populations,
    thermal_density_matrix,
    wilson_loop_protocol,
)
from .gauge import (
    Plaquette,
    UnitaryLink,
    caging_order,
    classify_plaquette,
    interference_matrix,
    wilson_loop,
)
from .kernels import BACKEND
from .lattice import LatticeConfig, SiteIndex, add_detuning, build_hamiltonian, index_to_site, site_index

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "IntegrationError",
    "LatticeConfig",
    "NoiseModel",
    "Plaquette",
    "SiteIndex",
    "Trajectory",
    "UnitaryLink",
    "add_detuning",
    "build_hamiltonian",
    "caging_order",
    "classify_plaquette",
    "evolve_lindblad",
    "evolve_unitary",
    "index_to_site",
    "interference_matrix",
    "p0",
    "prepare_state",
    "site_index",
    "site_populations",
    "thermal_density_matrix",
    "wilson_loop",
    "wilson_loop_protocol",
]
