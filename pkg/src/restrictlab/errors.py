"""Exception types shared across the lab."""


class LabError(Exception):
    """Base class for all errors raised by restrictlab."""


class DomainError(LabError, ValueError):
    """An argument lies outside the domain of the operation."""


class EvaluationError(LabError, ArithmeticError):
    """A derivative or density evaluated to a non-finite value."""

    def __init__(self, message, j=None, t=None):
        super().__init__(message)
        self.j = j
        self.t = t


class InvariantViolation(LabError):
    """A structural invariant failed; ``inequality`` names which one."""

    def __init__(self, message, inequality=None):
        super().__init__(message)
        self.inequality = inequality


class CapabilityError(LabError):
    """The requested evaluator cannot handle this size of problem."""


class ConditioningError(LabError):
    """Nodes are too close together for a stable closed-form evaluation."""


class DegenerateInputError(LabError, ValueError):
    """Input makes the requested quantity zero or undefined."""


class MembershipError(LabError, ValueError):
    """A point is not in the permutohedron; ``violated`` holds the failing constraint."""

    def __init__(self, message, violated=None):
        super().__init__(message)
        self.violated = violated


class PreconditionError(LabError, ValueError):
    pass


class ResolutionError(LabError):
    """Oscillatory quadrature would need more panels than the configured cap."""


class ConfigError(LabError):
    """Experiment configuration is malformed; ``field`` names the offending key."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field
