"""Age- and telomere-length-structured cell population model.

Subpackages split along the math: `model` holds grids, coefficient fields
and scenarios, `spectral` the renewal-operator eigenproblem, `solver` the
characteristic time stepper, `steady` equilibrium location and stability,
`bounds` the per-band decay/growth certificates, and `cli` the command-line
artifacts.
"""

from . import bounds, cli, model, solver, spectral, steady
from .errors import (
    ConfigurationError,
    ContractViolation,
    EigenConvergenceError,
    NoCharacteristicRoot,
    NotCertifiable,
    SimulationBlowup,
)
from .model import (
    CoefficientField,
    CrowdingLaw,
    DensityField,
    DivisionKernel,
    Grid,
    Scenario,
    example_scenario,
    scenario_from_json,
    scenario_to_json,
)
from .solver import SimulationTrace, simulate
from .spectral import growth_rate, spectral_radius
from .steady import find_equilibrium

__version__ = "0.1.0"

__all__ = [
    "bounds", "cli", "model", "solver", "spectral", "steady",
    "ConfigurationError", "ContractViolation", "EigenConvergenceError",
    "NoCharacteristicRoot", "NotCertifiable", "SimulationBlowup",
    "CoefficientField", "CrowdingLaw", "DensityField", "DivisionKernel",
    "Grid", "Scenario", "example_scenario", "scenario_from_json",
    "scenario_to_json", "SimulationTrace", "simulate", "growth_rate",
    "spectral_radius", "find_equilibrium", "__version__",
]
