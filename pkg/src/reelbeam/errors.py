"""Exception types raised across the package."""


class ReelBeamError(Exception):
    """Base class for all package errors."""


class InvalidInputError(ReelBeamError, ValueError):
    """Malformed or out-of-range input data."""


class NotPsdError(ReelBeamError):
    """A matrix expected to be positive semidefinite is not."""

    def __init__(self, message, eigenvalue=None):
        super().__init__(message)
        self.eigenvalue = eigenvalue


class EigenConvergenceError(ReelBeamError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class SdpInfeasibleError(ReelBeamError):
    """The SDP relaxation is infeasible; ``solution`` carries the certificate."""

    def __init__(self, message, solution=None):
        super().__init__(message)
        self.solution = solution


class SdpNumericalError(ReelBeamError):
    """The interior-point solver stopped without meeting its tolerances."""

    def __init__(self, message, solution=None):
        super().__init__(message)
        self.solution = solution


class DegenerateSolutionError(ReelBeamError):
    """The information-beam power of a rotated solution is not positive."""


class KTooSmallError(ReelBeamError):
    def __init__(self, message, user=None, rank=None, k=None):
        super().__init__(message)
        self.user = user
        self.rank = rank
        self.k = k


class RankReductionError(ReelBeamError):
    def __init__(self, message, ranks=None):
        super().__init__(message)
        self.ranks = ranks
