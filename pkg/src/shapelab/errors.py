"""Exception hierarchy shared by all shapelab modules."""


class ShapeLabError(Exception):
    """Base class for every error raised by shapelab."""


class DomainError(ShapeLabError, ValueError):
    """Input violates a manifold constraint or an operation's precondition."""


class CutLocusError(DomainError):
    """Two points are too close to each other's cut locus for a unique log."""


class DegeneracyError(DomainError):
    """A plane or configuration is degenerate (e.g. collinear tangent vectors)."""


class SurrogateRangeError(DomainError):
    """The constant-curvature surrogate is evaluated beyond its injectivity radius."""


class StepSizeError(DomainError):
    """A discretised path jumps too far between consecutive samples."""


class PostBreakdownError(DomainError):
    """A Lagrangian reconstruction was requested after the flow left Diff(S^1)."""


class IntegrationError(ShapeLabError, RuntimeError):
    """An ODE integration failed."""


class BVPError(ShapeLabError, RuntimeError):
    """A geodesic boundary value problem did not converge."""


class NonConvergenceError(ShapeLabError, RuntimeError):
    """An iterative estimator exceeded its iteration budget."""


class UnsupportedError(ShapeLabError, NotImplementedError):
    """The operation is not available for the given manifold."""


class ConfigurationError(ShapeLabError, ValueError):
    """Invalid algorithm or experiment configuration."""


class CapacityError(ShapeLabError, ValueError):
    """Problem size exceeds the capacity of an exact desk-scale solver."""


class StatisticsError(ShapeLabError, ValueError):
    """Not enough samples for a requested statistic."""


class NumericError(ShapeLabError, ArithmeticError):
    """A quantity that must be nonnegative came out significantly negative."""
