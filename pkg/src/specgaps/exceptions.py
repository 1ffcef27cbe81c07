"""Exception types shared across the package."""


class SpecgapsError(Exception):
    """Base class for all package-specific errors."""


class SingularShift(SpecgapsError):
    """A shift landed (numerically) on an eigenvalue; retry with a nudged value."""


class NotPSD(SpecgapsError):
    """A matrix required to be positive semidefinite is not."""


class HypothesisViolation(SpecgapsError):
    """A genericity precondition failed (endpoint too close to a spectrum)."""


class EigenvalueInBand(SpecgapsError):
    """An eigenvalue handed to a gap sum lies inside an essential-spectrum band."""


class ClosedGap(SpecgapsError):
    """The requested spectral gap has zero width."""


class DegenerateEdge(SpecgapsError):
    """The band edge has no quadratic expansion (vanishing curvature)."""


class DefinitionMismatch(SpecgapsError):
    """Independent definitions of the same integer disagree (tolerance breakdown)."""


class QuadratureFailure(SpecgapsError):
    """An integral identity failed to close at the requested tolerance."""


class DivergenceSuspected(SpecgapsError):
    """Partial integrals fail the Cauchy criterion under node doubling."""


class ScenarioError(SpecgapsError):
    """Scenario file failed to parse or validate."""
