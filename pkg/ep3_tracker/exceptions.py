class EP3TrackerException(Exception):
    """
    Base class of every error raised by ep3_tracker.
    """
    pass


class ConfigurationError(EP3TrackerException):
    pass


class SettingsError(EP3TrackerException):
    pass


class DomainError(EP3TrackerException, ValueError):
    """
    Raised for arguments outside an operation's domain: m < 2 for the
    parameter budget, empty scan boxes, sweeps that run backwards.
    """
    pass


class OracleConvergenceError(EP3TrackerException):

    def __init__(self, message, residual):
        super().__init__(message)
        self.residual = residual


class EigenvectorResidualError(EP3TrackerException):

    def __init__(self, message, residual):
        super().__init__(message)
        self.residual = residual


class MatcherError(EP3TrackerException):
    pass


class InconsistentTraceError(EP3TrackerException):
    """
    Both the real and the imaginary parts of a pair flip sign inside one
    interaction window. The sweep stepped over an EP; refine it.
    """
    pass


class NoEPBracketError(EP3TrackerException):
    pass


class DriftedSeedError(EP3TrackerException):
    pass


class NewtonDivergenceError(EP3TrackerException):

    def __init__(self, message, iterates):
        super().__init__(message)
        self.iterates = iterates


class DegenerateContourError(EP3TrackerException):
    pass


class BisectionExhaustedError(EP3TrackerException):
    """
    Step refinement hit its depth limit, which means the loop passes
    numerically through an EP. Perturb the contour.
    """

    def __init__(self, message, theta):
        super().__init__(message)
        self.theta = theta


class MonodromyError(EP3TrackerException):
    pass


class StaleTrajectoryError(EP3TrackerException):
    pass
