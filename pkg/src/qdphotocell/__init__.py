"""Three-level quantum-dot photocell: steady states, thermodynamics, optimization.

A four-state quantum dot (empty, two quasi-degenerate ground levels, one
excited level) exchanges electrons with two leads and photons with thermal
radiation.  Shared couplings of the ground doublet to the same baths sustain
a steady quantum coherence that reshapes the converter's current, power, and
efficiency at maximum power.
"""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    DomainError,
    NoUniqueSteadyStateError,
    QdpcError,
    SecondLawViolationError,
    StepInstabilityError,
)
from .model import (
    INFINITE,
    ModelParams,
    RateSet,
    bose_occupation,
    build_rates,
    fermi_occupation,
    params_from_scaled,
    scaled_energies,
)
from .dynamics import (
    DensityState,
    Generator,
    SteadySolution,
    build_generator,
    evolve,
    steady_state,
)
from .thermo import (
    CoherenceStructure,
    ThermoReport,
    analytic_coherence_structure,
    currents,
    reference_efficiencies,
    thermo_report,
)
from .optimize import (
    DEFAULT_BOUNDS,
    CurvePoint,
    OptResult,
    efficiency_at_max_power_curve,
    grid_search_power,
    maximize_power,
    steady_observables_grid,
)
from .experiments import (
    SweepTable,
    default_eta_c_grid,
    default_r_grid,
    run_fig2,
    run_fig3a,
    run_fig3b,
)

__all__ = [
    "__version__",
    "INFINITE",
    "ModelParams",
    "RateSet",
    "bose_occupation",
    "fermi_occupation",
    "scaled_energies",
    "params_from_scaled",
    "build_rates",
    "DensityState",
    "Generator",
    "SteadySolution",
    "build_generator",
    "steady_state",
    "evolve",
    "ThermoReport",
    "CoherenceStructure",
    "currents",
    "thermo_report",
    "analytic_coherence_structure",
    "reference_efficiencies",
    "OptResult",
    "CurvePoint",
    "DEFAULT_BOUNDS",
    "maximize_power",
    "efficiency_at_max_power_curve",
    "grid_search_power",
    "steady_observables_grid",
    "SweepTable",
    "run_fig2",
    "run_fig3a",
    "run_fig3b",
    "default_r_grid",
    "default_eta_c_grid",
    "QdpcError",
    "DomainError",
    "ConfigError",
    "NoUniqueSteadyStateError",
    "StepInstabilityError",
    "SecondLawViolationError",
]
