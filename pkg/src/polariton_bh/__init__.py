"""Dark-state polariton Bose-Hubbard simulator for driven atom-cavity arrays."""

from .bh_model import (
    BHParams,
    SiteStatistics,
    build_bh_hamiltonian,
    build_photonic_hamiltonian,
    ground_state,
    site_statistics,
)
from .fock_space import (
    CavityGraph,
    FockBasis,
    enumerate_basis,
    hopping_operator,
    ladder_operator,
    state_index,
)
from .microscopic import (
    build_hi,
    compare_kappa_shift,
    dark_excitation_state,
    extract_kappa_shift,
    symmetric_basis,
)
from .open_dynamics import (
    IntegratorControl,
    ObservableSeries,
    evolve,
    initial_mott_state,
    lindblad_derivative,
)
from .polariton_params import (
    EffectiveParams,
    PhysicalParams,
    RampSchedule,
    ValidityReport,
    adiabatic_margin,
    effective_parameters,
    make_ramp,
    params_at_time,
    toroidal_2005,
    validity_report,
)

__all__ = [
    "adiabatic_margin",
    "BHParams",
    "build_bh_hamiltonian",
    "build_hi",
    "build_photonic_hamiltonian",
    "CavityGraph",
    "compare_kappa_shift",
    "dark_excitation_state",
    "effective_parameters",
    "EffectiveParams",
    "enumerate_basis",
    "evolve",
    "extract_kappa_shift",
    "FockBasis",
    "ground_state",
    "hopping_operator",
    "initial_mott_state",
    "IntegratorControl",
    "ladder_operator",
    "lindblad_derivative",
    "make_ramp",
    "ObservableSeries",
    "params_at_time",
    "PhysicalParams",
    "RampSchedule",
    "site_statistics",
    "SiteStatistics",
    "state_index",
    "symmetric_basis",
    "toroidal_2005",
    "validity_report",
    "ValidityReport",
]

__version__ = "0.1.0"
