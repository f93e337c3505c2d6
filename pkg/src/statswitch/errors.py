"""Exception hierarchy shared across the package."""


class StatSwitchError(Exception):
    """Base class for all package errors."""


class SizeError(StatSwitchError):
    """A requested basis or enumeration exceeds the configured maximum."""


class ContractViolation(StatSwitchError):
    """An operation received input that breaks its documented contract."""


class LayoutError(StatSwitchError):
    """Operator, state and register layout dimensions do not agree."""


class PreconditionError(StatSwitchError):
    """Inputs fail a physical precondition (e.g. non-orthonormal orbitals)."""


class DegenerateInputError(PreconditionError):
    """Antisymmetrization of the given inputs vanishes identically."""


class CapabilityError(StatSwitchError):
    """The requested backend cannot handle the given Hamiltonian or state."""


class NumericalError(StatSwitchError):
    """An iterative numerical routine failed to converge."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class ScenarioError(StatSwitchError):
    """A scenario file failed validation."""
