"""Exception hierarchy for estimation and I/O failures."""


class EstimationError(Exception):
    """Base class for all estimation failures."""


class EmptyWindow(EstimationError):
    """No observation has positive kernel weight in the requested window."""


class RankDeficient(EstimationError):
    """The in-window design matrix is numerically singular."""


class TooLarge(EstimationError):
    """Instance exceeds the size limit of an exact reference solver."""


class BoundaryUnsupported(EstimationError):
    """The requested method is not defined at boundary evaluation points."""


class DegenerateBias(EstimationError):
    """The plug-in bias constant is zero, so the AMSE bandwidth is undefined."""


class DegenerateDensity(EstimationError):
    """A density estimate needed in a denominator is not positive."""


class DegenerateSelection(EstimationError):
    """A selection-rate estimate needed in a denominator is not positive."""


class AllBandwidthsFailed(EstimationError):
    """No candidate bandwidth produced a valid fit."""


class NegativeScale(EstimationError):
    """The scale function is not positive at the queried point."""


class ParseError(Exception):
    """Malformed input data; carries row/column diagnostics in the message."""


class MissingColumn(Exception):
    """A required column is absent from the input file."""
