"""Exception hierarchy shared across the package."""


class FieldTransferError(Exception):
    """Base class for all fieldxfer errors."""


class FormatError(FieldTransferError):
    """Malformed input file (FDF/QM1/RHS)."""


class DomainError(FieldTransferError):
    """Evaluation point outside the grid domain (no extrapolation)."""


class ConvergenceError(FieldTransferError):
    """Newton iteration failed to converge within the iteration budget."""

    def __init__(self, message, point_index=None, residual=None):
        super().__init__(message)
        self.point_index = point_index
        self.residual = residual


class SingularMapError(FieldTransferError):
    """Jacobian of the element mapping is (numerically) singular."""
