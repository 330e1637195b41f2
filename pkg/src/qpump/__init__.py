"""Numerics for energy-conserving quantum pumps: two-time and one-time
measurement heat statistics, exchange fluctuation theorems, conditional
thermal states and entropy-production bounds."""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    ConservationError,
    DimensionError,
    HermiticityError,
    InvalidModelError,
    NotBipartiteError,
    NotPsdError,
    QPumpError,
)
from .model import (
    PauliTerm,
    PumpModel,
    build_pauli_operator,
    evolution_operator,
    gibbs_initial_state,
    product_eigenbasis,
    validate,
)
from .otm import (
    conditional_energies,
    conditional_partition,
    conditional_thermal_state,
    otm_heat_distribution,
    otm_report,
)
from .ttm import HeatDistribution, bipartite_reduction, ttm_heat_distribution, ttm_report
