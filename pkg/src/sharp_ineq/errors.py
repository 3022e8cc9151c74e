"""Exception types shared by all modules."""


class SharpIneqError(Exception):
    pass


class DomainError(SharpIneqError, ValueError):
    """Argument outside the admissible parameter region."""


class PreconditionError(SharpIneqError, ValueError):
    """An input violates a hypothesis (orthogonality, normalization, ...)."""


class PositivityError(PreconditionError):
    pass


class RegularityError(SharpIneqError):
    """Spectral tail too heavy for the requested norm."""


class LiftError(SharpIneqError):
    """A stereographic lift is unbounded near the north pole."""


class SingularityError(SharpIneqError, ValueError):
    """Evaluation at the pole of the stereographic chart."""


class AccuracyError(SharpIneqError):
    """A numerical estimate failed to stabilize under refinement."""


class RangeError(SharpIneqError, ValueError):
    """Perturbation amplitudes outside the asymptotic regime."""


class StiffnessError(SharpIneqError):
    """Time step collapsed below the floor."""


class InsufficientDataError(SharpIneqError):
    pass
