"""Simulation and analysis of a levitated-magnet energy harvester with two coupled circuits."""
from .diagnostics import (BifurcationDiagram, PoincareSection, ResponseClass, average_power,
                          bifurcation_sweep, classify, poincare)
from .errors import (ChartError, ConfigError, DivergenceError, GridMismatchError,
                     ParameterError, ResonantDenominatorError)
from .integrator import IntegrationConfig, Trajectory, energy_audit, integrate, integrate_legacy
from .internal import freq_response_internal, solve_equilibria_internal
from .model import BASELINE, REF17, DimlessParams, PhysicalParams, fit_physical, normalize
from .primary import freq_response_primary, solve_equilibrium_primary
from .sweeps import chaos_grid, family_sweep, power_compare, retune_capacitance

__version__ = "0.1.0"

__all__ = [
    "BASELINE", "REF17", "DimlessParams", "PhysicalParams", "normalize", "fit_physical",
    "IntegrationConfig", "Trajectory", "integrate", "integrate_legacy", "energy_audit",
    "PoincareSection", "ResponseClass", "BifurcationDiagram", "poincare", "classify",
    "bifurcation_sweep", "average_power",
    "freq_response_internal", "solve_equilibria_internal",
    "freq_response_primary", "solve_equilibrium_primary",
    "retune_capacitance", "family_sweep", "chaos_grid", "power_compare",
    "ParameterError", "DivergenceError", "ChartError", "ResonantDenominatorError",
    "GridMismatchError", "ConfigError",
]
