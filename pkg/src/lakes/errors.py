"""Exception types shared across the package."""


class LakesError(Exception):
    """Base class for all package-specific errors."""


class NonHermitian(LakesError):
    """Operator flagged (or required) hermitian is not."""


class DimensionTooLarge(LakesError):
    """Dense-path operation requested above the configured dimension cap."""


class NoConvergence(LakesError):
    """Iterative solver exhausted its iteration budget."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class BasisMismatch(LakesError):
    """Two objects live on different bases."""


class NormDrift(LakesError):
    """State norm drifted during propagation beyond tolerance."""


class DegenerateSpectrum(LakesError):
    """Spectrum has a gap below tolerance where distinct levels are required."""


class ZeroProjection(LakesError):
    """Projection annihilated the state."""


class IndexOutOfRange(LakesError):
    """Eigenlevel or lattice index outside the valid range."""


class TooLarge(LakesError):
    """Lattice or basis exceeds the enumeration bound."""


class BadFactor(LakesError):
    """Blockade-radius factor admits an unintended distance shell."""


class GroupActionInvalid(LakesError):
    """A symmetry element does not map the site set to itself."""


class TooDeep(LakesError):
    """Commutator-ansatz order beyond the cost guard."""


class SingularSystem(LakesError):
    """Normal equations are rank deficient (minimum-norm solution returned)."""

    def __init__(self, message, rank=None):
        super().__init__(message)
        self.rank = rank


class EmptyLibrary(LakesError):
    """Sweep library has no entries."""


class NoCoverings(LakesError):
    """No fully dimer-covered configuration exists in the basis."""


class LoopExpectationNearZero(LakesError):
    """Closed-loop expectation too small to normalize a string ratio."""


class OptimizerStall(LakesError):
    """Derivative-free search made no progress; best-so-far attached."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class BurnInUnstable(LakesError):
    """Ensemble energy diverged during the coupling ramp."""


class DegenerateQuadratic(LakesError):
    """Quadratic coefficient of a 1-D fit vanished."""


class ConfigInvalid(LakesError):
    """Experiment configuration failed validation."""

    def __init__(self, message, keys=()):
        super().__init__(message)
        self.keys = tuple(keys)


class ResourceExceeded(LakesError):
    """Configured resource cap (basis size, sample count) exceeded."""
