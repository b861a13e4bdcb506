"""Exception types raised across the package."""


class LicsError(Exception):
    """Base class for all package-specific failures."""


class InvalidConfig(LicsError):
    """A configuration object violates its invariants."""


class ConnectivityFailure(LicsError):
    """World generation exhausted its retry budget without a start-goal path."""


class NoPath(LicsError):
    """No traversable path exists between the requested cells."""


class ParseError(LicsError):
    """A persisted file could not be decoded; message carries line/field info."""


class OutOfBounds(LicsError):
    """A pose or cell lies outside the world grid."""


class DegenerateGoal(LicsError):
    """The selected local goal coincides with the robot position."""


class ShapeMismatch(LicsError):
    """Tensor or scan shapes disagree with the model configuration."""


class NonFiniteParams(LicsError):
    """A parameter or gradient tensor contains NaN or infinity."""


class SchemaMismatch(LicsError):
    """Dataset metadata is incompatible with the requested model."""


class MissingPathLength(LicsError):
    """World carries no shortest-path metadata needed for scoring."""


class ExpertFailure(LicsError):
    """The expert policy raised while producing an action."""


class PortInUse(LicsError):
    """The teleop server port is already bound."""
