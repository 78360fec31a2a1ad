"""Exception types raised across the package.

Each error carries the exit code the command-line front end maps it to.
"""


class PwstabError(Exception):
    exit_code = 1


class DegenerateLeadingCoefficient(PwstabError):
    exit_code = 64


class UnsupportedModel(PwstabError):
    exit_code = 64


class NoOrbit(PwstabError):
    exit_code = 2


class InvalidOrbit(NoOrbit):
    pass


class OrbitLostUnderPerturbation(NoOrbit):
    pass


class QuadratureNotConverged(PwstabError):
    exit_code = 3

    def __init__(self, msg, achieved=None):
        super().__init__(msg)
        self.achieved = achieved


class StepUnderflow(QuadratureNotConverged):
    pass


class IntegratorToleranceFailure(QuadratureNotConverged):
    pass


class SingularSylvester(PwstabError):
    """A pair of branch points has (nearly) merged; the Picard-Fuchs matrix is singular."""
    exit_code = 5


class HypothesisViolated(PwstabError):
    exit_code = 5

    def __init__(self, quantity, value, tol):
        super().__init__(f"{quantity} = {value:.3e} is within the sign dead-band (tol {tol:.1e})")
        self.quantity = quantity
        self.value = value
        self.tol = tol


class DegenerateRoots(HypothesisViolated):
    pass


class InternalInconsistency(PwstabError):
    exit_code = 1


class MethodDisagreement(PwstabError):
    exit_code = 4


class ContourThroughRoot(PwstabError):
    pass


class WindingInconsistent(PwstabError):
    pass


class DiscretizationNotConverged(PwstabError):
    pass


class NotOnAxis(PwstabError):
    pass


class FormNotReal(PwstabError):
    pass


class NotBracketed(PwstabError):
    pass


class NearDegenerateOrbit(UserWarning):
    """A turning point sits within the degeneracy tolerance of another root of R."""
