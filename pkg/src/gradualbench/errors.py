"""Exception types shared across the package."""


class GradualBenchError(Exception):
    pass


class RewardOutOfRange(GradualBenchError, ValueError):
    pass


class StepAfterTermination(GradualBenchError, RuntimeError):
    pass


class AgentFailure(GradualBenchError, RuntimeError):
    """Raised when an agent faults; carries whatever log was recorded so far."""

    def __init__(self, message, log=None):
        super().__init__(message)
        self.log = log


class BudgetExceeded(GradualBenchError, RuntimeError):
    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class ConfigError(GradualBenchError, ValueError):
    pass


class InvalidDistribution(GradualBenchError, ValueError):
    pass


class InvalidMachine(GradualBenchError, ValueError):
    pass


class NonErgodic(GradualBenchError, ValueError):
    def __init__(self, message, classes=()):
        super().__init__(message)
        self.classes = [list(c) for c in classes]


class NotUnifilar(GradualBenchError, ValueError):
    def __init__(self, message, witnesses=()):
        super().__init__(message)
        self.witnesses = list(witnesses)


class InsufficientData(GradualBenchError, ValueError):
    pass


class StateExplosion(GradualBenchError, RuntimeError):
    pass
