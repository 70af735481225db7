"""Desk-scale Eulerian simulator for thermo-visco-elastic solids at finite
strains: regularized stress/heat coupling, trigonometric Galerkin velocity and
temperature spaces, spectral collocation transport, and an energy/entropy
ledger that certifies the discrete balances.
"""

__version__ = "0.1.0"

from . import (cli, config, diagnostics, dynamics, galerkin, materials,
               oracles, regularization, tensors, transport)
from .diagnostics import (EnergyLedger, balance_residuals, clausius_duhem_check,
                          compute_ledger)
from .dynamics import Scenario, State, Trajectory, initial_state, run, step
from .errors import ThermoKVError
from .galerkin import (Domain, Loads, assemble_heat_residual,
                       assemble_momentum_residual, build_temperature_space,
                       build_velocity_space, project)
from .materials import (MaterialModel, SampleBox, cauchy_stress, enthalpy,
                        entropy_density, heat_capacity, invert_enthalpy,
                        neo_hookean_multiplicative, neo_hookean_thermal,
                        registry, sma_two_phase, validate_hypotheses,
                        volumetric_pt)
from .regularization import RegularizationParams, pi_lambda, regularized_stress
from .transport import (ClosedFormVelocity, TransportField, UniformGrid, advect,
                        consistency_monitors, parabolic_regularized_advect)
