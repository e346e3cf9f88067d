"""Exception hierarchy for the solver library."""


class SubcellimError(Exception):
    """Base class for all library errors."""


class ConfigurationError(SubcellimError):
    """Invalid user-facing configuration (bad key, value out of range, ...)."""


class ContractViolationError(SubcellimError):
    """An internal API was called with arguments violating its contract."""


class AdmissibilityError(SubcellimError):
    """A state left the admissible set (e.g. nonpositive density/pressure)."""

    def __init__(self, message, element=None, node=None, stage=None):
        super().__init__(message)
        self.element = element
        self.node = node
        self.stage = stage


class NumericsError(SubcellimError):
    """Non-finite values or a failed numeric safeguard."""


class InternalConsistencyError(SubcellimError):
    """A redundancy check failed (wrong residual split, broken invariant)."""


class InfeasibleLPError(SubcellimError):
    """The entropy linear program lost feasibility of the low-order point."""
