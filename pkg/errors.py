"""
Exception hierarchy for the simulator

The CLI maps each family to an exit code: configuration problems exit with 2,
numerical failures (singular detunings, failed fits, missing minima) exit with 3.
"""
from typing import Any, Dict, Optional


class CavityArrayError(Exception):
    """Base class for all simulator errors"""
    exit_code = 1


class ConfigError(CavityArrayError):
    """Invalid or unreadable run configuration"""
    exit_code = 2


class PreconditionError(CavityArrayError, ValueError):
    """Inputs violate the documented preconditions of an operation"""
    exit_code = 2


class NumericalError(CavityArrayError):
    """A numerical procedure could not produce a result"""
    exit_code = 3


class SingularityError(NumericalError):
    """Detuning sits on (or within tolerance of) an excited-state pole"""

    def __init__(self, delta_ca: float, pole: float):
        self.delta_ca = delta_ca
        self.pole = pole
        super().__init__(f"detuning {delta_ca} MHz is on the excited-state pole at {pole} MHz")


class NoSolutionError(NumericalError):
    """Solver found no interior minimum"""

    def __init__(self, message: str, reason: str = "boundary"):
        self.reason = reason
        super().__init__(message)


class FitError(NumericalError):
    """Least-squares fit did not converge"""

    def __init__(self, message: str, diagnostics: Optional[Dict[str, Any]] = None):
        self.diagnostics = diagnostics or {}
        super().__init__(message)


class FitPreconditionError(FitError):
    """Curve has no interior maximum to fit"""
