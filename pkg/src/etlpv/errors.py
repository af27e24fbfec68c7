"""Exception hierarchy shared by all etlpv modules."""


class EtlpvError(Exception):
    """Base class for every error raised by this package."""


# graph / lpv
class DisconnectedGraph(EtlpvError):
    pass


class InvalidGraph(EtlpvError):
    pass


class OutOfPolytope(EtlpvError):
    """A scheduling value left the parameter polytope."""

    def __init__(self, message, theta=None, agent=None, step=None):
        super().__init__(message)
        self.theta = theta
        self.agent = agent
        self.step = step


class InvalidPhysicalParameter(EtlpvError):
    pass


class DimensionMismatch(EtlpvError):
    pass


# synthesis
class Infeasible(EtlpvError):
    pass


class IllConditioned(EtlpvError):
    pass


class BackendFailure(EtlpvError):
    pass


# verification
class VerificationError(EtlpvError):
    """Common parent of the numerical certificate checks."""


class StabilityViolation(VerificationError):
    def __init__(self, message, theta=None, lam=None, radius=None):
        super().__init__(message)
        self.theta = theta
        self.lam = lam
        self.radius = radius


class EquivalenceFailure(VerificationError):
    pass


class DissipationViolation(VerificationError):
    def __init__(self, message, step=None, slack=None):
        super().__init__(message)
        self.step = step
        self.slack = slack


class NonConvergence(VerificationError):
    pass


# estimators / simulation / config
class UnknownSender(EtlpvError):
    pass


class ScenarioError(EtlpvError):
    pass


class NumericalInstability(EtlpvError):
    pass


class ConfigError(EtlpvError):
    pass
