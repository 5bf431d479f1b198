"""Exception types shared across the package."""


class DtvcnError(Exception):
    """Base class for all package errors."""


class GraphError(DtvcnError):
    pass


class SelfLoopError(GraphError):
    pass


class DuplicateEdgeError(GraphError):
    pass


class MissingEdgeError(GraphError):
    pass


class TimeOutOfRangeError(GraphError):
    pass


class EmptyGraphError(DtvcnError):
    pass


class NotAnEdgeError(DtvcnError):
    pass


class IsolatedNodeError(DtvcnError):
    pass


class InvalidParamsError(DtvcnError):
    pass


class TooFewRichNodesError(DtvcnError):
    pass


class InsufficientSamplesError(DtvcnError):
    pass


class NotPowerLawError(DtvcnError):
    pass


class NotApplicableError(DtvcnError):
    pass


class WindowTooShortError(DtvcnError):
    pass


class UnreachableError(DtvcnError):
    pass


class NoFixedPointError(DtvcnError):
    pass


class TooFewModelsError(DtvcnError):
    pass


class ConfigError(DtvcnError):
    """Invalid experiment configuration; `field` names the offending entry."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field
