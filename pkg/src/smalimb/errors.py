"""Exception types shared across the toolkit."""


class SmalimbError(Exception):
    """Base class for toolkit errors."""


class InvalidArgumentError(SmalimbError, ValueError):
    pass


class ContractViolationError(SmalimbError):
    """An operation was called outside the configuration it is defined for."""


class SingularDynamicsError(SmalimbError):
    pass


class IntegrationDivergedError(SmalimbError):
    def __init__(self, step, message=None):
        self.step = step
        super().__init__(message or f"integration produced non-finite state at step {step}")


class ConvergenceError(SmalimbError):
    """An iterative procedure hit its iteration limit.

    ``history`` holds whatever iterates were recorded before giving up.
    """

    def __init__(self, message, history=None):
        self.history = history if history is not None else []
        super().__init__(message)


class UnfittableError(SmalimbError):
    pass


class DatasetInsufficientError(SmalimbError):
    pass


class InfeasibleProblemError(SmalimbError):
    def __init__(self, message, report=None):
        self.report = report
        super().__init__(message)
