"""Exception hierarchy.

Every error the toolkit raises derives from FrontlabError and carries an
exit code family used by the CLI (0 = success is implicit):

    2  configuration / usage
    3  model registry (unknown model, parameter range)
    4  numerical convergence (Newton, tracking, eigensolves)
    5  problem structure (invalid bracket, nothing pinched, no solutions)
    6  degenerate dispersion relations
    7  simulation runtime (blowup)
"""


class FrontlabError(Exception):
    exit_code = 1


class ConfigError(FrontlabError):
    exit_code = 2


class UnknownModel(FrontlabError):
    exit_code = 3


class ParameterOutOfRange(FrontlabError):
    exit_code = 3


class NumericalError(FrontlabError):
    exit_code = 4


class NoConvergence(NumericalError):
    def __init__(self, message, iterations=None, residual=None):
        super().__init__(message)
        self.iterations = iterations
        self.residual = residual


class DegenerateLeadingCoefficient(NumericalError):
    pass


class TrackingLost(NumericalError):
    pass


class StepFailure(NumericalError):
    def __init__(self, message, parameter=None, branch=None):
        super().__init__(message)
        self.parameter = parameter
        self.branch = branch


class SingularJacobian(NumericalError):
    def __init__(self, message, sigma_min=None):
        super().__init__(message)
        self.sigma_min = sigma_min


# frontbvp historically spells this the other way around; keep both names.
JacobianSingular = SingularJacobian


class EigFailure(NumericalError):
    pass


class InsufficientSamples(NumericalError):
    pass


class WeakCoreDecay(NumericalError):
    def __init__(self, message, tail_rate=None, eta=None):
        super().__init__(message)
        self.tail_rate = tail_rate
        self.eta = eta


class TailBelowNoise(NumericalError):
    pass


class NotSimple(NumericalError):
    pass


class NotApplicable(FrontlabError):
    exit_code = 3


class StructureError(FrontlabError):
    exit_code = 5


class BracketInvalid(StructureError):
    pass


class NonePinched(StructureError):
    def __init__(self, message, roots=None):
        super().__init__(message)
        self.roots = roots or []


class StableState(StructureError):
    pass


class NoSolutions(StructureError):
    pass


class NoSolutionInRange(StructureError):
    pass


class NoSignChange(StructureError):
    pass


class FoldDetected(StructureError):
    def __init__(self, message, k=None, curve=None):
        super().__init__(message)
        self.k = k
        self.curve = curve


class DegenerateFamily(FrontlabError):
    """The resultant of (d, d_nu) vanishes identically: a continuum of
    double roots, e.g. repeated uncoupled factors."""

    exit_code = 6


class Blowup(FrontlabError):
    exit_code = 7

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class FrontReachedBoundary(FrontlabError):
    """Front hit 0.9 L; partial results are attached."""

    exit_code = 7

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial
