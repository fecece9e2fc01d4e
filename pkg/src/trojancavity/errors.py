"""Exception hierarchy.

``UsageError`` maps to CLI exit status 2, every ``NumericalError`` to 1.
"""


class TrojanCavityError(Exception):
    pass


class UsageError(TrojanCavityError, ValueError):
    pass


class NumericalError(TrojanCavityError, ArithmeticError):
    pass


class ParameterDomainError(NumericalError):
    """Inputs outside the domain where the model quantity is defined."""


class ResonanceError(ParameterDomainError):
    """kappa == 1: only the trivial (collapsed) equilibrium exists."""


class BranchDomainError(ParameterDomainError):
    pass


class SingularityError(NumericalError):
    """Evaluation at the Coulomb singularity r = 0."""


class TrajectoryTerminated(NumericalError):
    """Integration stopped early; ``partial`` holds what was computed."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class CloseApproachError(TrajectoryTerminated):
    pass


class StiffnessError(TrajectoryTerminated):
    pass


class SolverError(NumericalError):
    """Newton failed to converge; ``best`` holds the best iterate."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class NonNormalizableError(NumericalError):
    pass


class DegenerateStateError(NumericalError):
    pass
