"""Exception hierarchy shared by all modules."""


class PscLabError(Exception):
    """Base class for every error raised by psclab."""


class SingularMetric(PscLabError):
    pass


class OutOfChart(PscLabError):
    pass


class StencilUnderflow(OutOfChart):
    """A finite-difference stencil would leave the chart."""


class ChartMismatch(PscLabError):
    pass


class NonPositiveRadius(PscLabError):
    pass


class InvalidCap(PscLabError):
    pass


class DegenerateWarping(PscLabError):
    pass


class NonPositiveTau(PscLabError):
    pass


class PoleEvaluation(PscLabError):
    pass


class DomainError(PscLabError):
    pass


class IndefinitePerturbation(PscLabError):
    pass


class DistanceFieldUnavailable(PscLabError):
    pass


class ZeroKappaZeroEps(PscLabError):
    """The eps = 0 flow is undefined at fixed points of the circle action."""


class StepUnderflow(PscLabError):
    pass


class NotPositiveInitial(PscLabError):
    pass


class NoFeasibleEps(PscLabError):
    pass


class NotEmbeddable(PscLabError):
    def __init__(self, message: str, interval: tuple[float, float] | None = None):
        super().__init__(message)
        self.interval = interval


class ConfigError(PscLabError):
    pass
