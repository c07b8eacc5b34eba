class CurflowError(Exception):
    """Base class for all library errors."""


class DomainError(CurflowError):
    pass


class UnsafeRadiusError(CurflowError):
    """A cutting radius sits on (or too close to) the norm of a vertex."""


class OverlapError(CurflowError):
    """Collinear segments overlap on more than a point."""


class SpaceMismatchError(CurflowError):
    pass


class ModeError(CurflowError):
    """Operation not available for this kind of ambient space."""


class ContractError(CurflowError):
    """A precondition of a decomposition routine was violated."""


class OracleScaleError(CurflowError):
    """Instance too large for a brute-force routine."""


class GeneratorInconsistency(CurflowError):
    def __init__(self, msg, radii=None):
        super().__init__(msg)
        self.radii = radii
