"""Numerical laboratory for a crane cable with delayed boundary feedback.

The package discretizes a hybrid PDE/ODE closed loop (wave dynamics on
the cable, rigid platform and load at the ends, a transported delay line
feeding the control) so that the structural facts of the continuous
model hold exactly in floating point: a conserved linear functional, a
dissipative energy, and a one-dimensional kernel spanned by rigid
displacement.  On top of the discrete generator it provides time
stepping, energy and equilibrium diagnostics, spectral and resolvent
certificates, and a scenario-driven command line interface.
"""

from .diagnostics import (DecayFit, DiagnosticsError, EnergyReport,
                          decay_inequality_residual, energy_e0, energy_e1,
                          energy_report, equilibrium_omega, fit_decay, rho)
from .discretize import (AssemblyError, CraneState, DiscreteOperator, Grid,
                         assemble, export_matrices, inner_product,
                         norm_equivalence_bounds, project_to_dot_space)
from .evolve import (CayleyStepper, InitialData, Trajectory, make_initial,
                     run, sample_initial, step)
from .model import (CableCoefficient, ConfigError, ControlGains, CraneModel,
                    FixedConstants, InnerProductWeights, ModelError,
                    PhysicalParams, ValidationReport, affine_coefficient,
                    config_sha256, params_from_config, physical_coefficient,
                    read_config, tabulated_coefficient, validate_model,
                    validate_params)
from .presets import PRESETS, initial_from_spec, rough_preset, smooth_preset
from .spectral import (DissipativityReport, ResolventSweep, RestrictedOperator,
                       SpectrumReport, default_gammas, dissipativity_check,
                       eigenvalues, resolution_cutoff, resolvent_solve_reduced,
                       resolvent_sweep, restrict_operator)

__version__ = "0.1.0"

__all__ = [
    "AssemblyError", "CableCoefficient", "CayleyStepper", "ConfigError",
    "ControlGains", "CraneModel", "CraneState", "DecayFit",
    "DiagnosticsError", "DiscreteOperator", "DissipativityReport",
    "EnergyReport", "FixedConstants", "Grid", "InitialData",
    "InnerProductWeights", "ModelError", "PhysicalParams", "PRESETS",
    "ResolventSweep", "RestrictedOperator", "SpectrumReport", "Trajectory",
    "ValidationReport", "affine_coefficient", "assemble", "config_sha256",
    "decay_inequality_residual", "default_gammas", "dissipativity_check",
    "eigenvalues", "energy_e0", "energy_e1", "energy_report",
    "equilibrium_omega", "export_matrices", "fit_decay", "initial_from_spec",
    "inner_product", "make_initial", "norm_equivalence_bounds",
    "params_from_config", "physical_coefficient", "project_to_dot_space",
    "read_config", "resolution_cutoff", "resolvent_solve_reduced",
    "resolvent_sweep", "restrict_operator", "rho", "rough_preset", "run",
    "sample_initial", "smooth_preset", "step", "tabulated_coefficient",
    "validate_model", "validate_params",
]
