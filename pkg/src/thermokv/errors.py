"""Typed exceptions raised by the solver.

Guard rails raise instead of clamping, so property tests can see violations.
"""


class ThermoKVError(Exception):
    """Base class for all solver errors."""


class NonInvertibleDeformation(ThermoKVError):
    """det F <= 0 where an actual (per-current-volume) quantity was requested."""


class NonMonotoneEnthalpy(ThermoKVError):
    """The enthalpy map w = omega(F, .) is not increasing on the bracket."""


class DegenerateHeatCapacity(ThermoKVError):
    """Heat capacity c(F, theta) fell below the configured floor."""

    def __init__(self, message, sample=None):
        super().__init__(message)
        self.sample = sample


class NegativeInitialTemperature(ThermoKVError):
    """Initial temperature field is negative somewhere."""


class InvalidState(ThermoKVError):
    """Positivity hard-fail: rho <= 0 or det F below the lambda/4 guard."""


class StepRejected(ThermoKVError):
    """Adaptive controller rejected the step; carries a suggested dt."""

    def __init__(self, message, suggested_dt):
        super().__init__(message)
        self.suggested_dt = suggested_dt


class SingularMass(ThermoKVError):
    """The density-weighted Gram matrix is numerically singular."""


class SingularGram(ThermoKVError):
    """L2 Gram matrix is numerically singular."""


class CFLViolation(ThermoKVError):
    """Upwind transport step exceeds the configured CFL limit."""


class QuadratureUnderResolved(ThermoKVError):
    """Two-level quadrature estimate of the p-power term exceeds tolerance."""


class NotIsolated(ThermoKVError):
    """Entropy verdict requested for a scenario with boundary exchange."""


class InsufficientDecay(ThermoKVError):
    """Richardson errors plateaued at round-off; no order can be fit."""


class UnsupportedDomain(ThermoKVError):
    """Non-rectangular domains are not supported."""


class ParseError(ThermoKVError):
    """Scenario config could not be parsed; message carries position info."""


class ValidationError(ThermoKVError):
    """Scenario config parsed but violates a documented constraint."""


class UsageError(ThermoKVError):
    """Command-line usage error (bad arguments, empty sample box, ...)."""
