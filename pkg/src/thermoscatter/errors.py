"""Exception types raised across the package."""


class ThermoscatterError(Exception):
    """Base class for all package errors."""


class ValidationError(ThermoscatterError, ValueError):
    """Invalid model parameters or configuration."""


class SingularWavenumber(ThermoscatterError, ValueError):
    """A wavenumber lies in (or too close to) the singular set."""


class NearSingularBand(SingularWavenumber):
    """A frequency lies within the exclusion band around a band edge."""


class OutOfBand(ThermoscatterError, ValueError):
    """A frequency lies outside [omega_min, omega_max]."""


class DomainError(ThermoscatterError, ValueError):
    """A Laplace variable outside the open right half-plane."""


class QuadratureFailure(ThermoscatterError, ArithmeticError):
    """An integral could not be computed to the requested tolerance."""


class WrapAround(ThermoscatterError, ValueError):
    """A wave packet does not fit into the periodic box."""


class ResolutionError(ThermoscatterError, ValueError):
    """A smoothing window violates the lattice / macroscopic scale separation."""


class PacketNotCleared(ThermoscatterError, RuntimeError):
    """Incoming energy is still present on the incident side of the interface."""
