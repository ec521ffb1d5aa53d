"""Exception types raised by phasecal."""


class PhasecalError(Exception):
    """Base class for all phasecal errors."""


class ConfigurationError(PhasecalError, ValueError):
    """Invalid array, error or run configuration."""


class IncompletePlanError(PhasecalError):
    """A required measurement is missing from a record set."""


class DegenerateElementError(PhasecalError):
    """An element measured zero power, so no phase can be inferred from it."""


class ReferenceDegeneracyError(PhasecalError):
    """Two phase references are too close to collinear to resolve a phase."""
