"""Exception hierarchy shared by the engines, the CLI and the dashboard."""


class DualityLabError(ValueError):
    """Base class for every input or construction error raised by the lab."""


class GraphError(DualityLabError):
    pass


class StateSpaceError(DualityLabError):
    pass


class StateSpaceTooLarge(StateSpaceError):
    def __init__(self, size, cap):
        super().__init__(f"state space of size {size} exceeds the cap of {cap} states")
        self.size = size
        self.cap = cap


class KappaError(DualityLabError):
    """A 4-tuple failed one of the defining conditions.

    ``condition`` is 1, 2 or 3 for the three defining conditions, or one of
    ``"dimension"``, ``"probability"``, ``"complex"``, ``"degenerate"``.
    """

    def __init__(self, message, condition):
        super().__init__(message)
        self.condition = condition


class CharlierError(DualityLabError):
    pass


class OperatorError(DualityLabError):
    """Space, graph or dimension mismatch between operators."""


class RouteMismatchError(DualityLabError):
    """Two independent construction routes disagree beyond tolerance."""

    def __init__(self, message, residual):
        super().__init__(message)
        self.residual = residual


class UnitarityError(DualityLabError):
    def __init__(self, message, defect):
        super().__init__(message)
        self.defect = defect


class WindowExhaustedError(DualityLabError):
    """A Heisenberg word needs more raising slack than the window provides."""


class ConfigError(DualityLabError):
    """Invalid command-line or dashboard configuration."""
