"""Phonon scattering at a thermostatted site of a harmonic chain.

Submodules:

- ``dispersion``: dispersion relations, group velocities and inverse branches
- ``scattering``: interface coefficients and their identities
- ``chain``: event-driven microscopic simulation and ensembles
- ``wigner``: energy-density and interface-fraction estimators
- ``macro``: closed-form limit density with the interface condition
- ``experiments`` / ``cli``: experiment set-ups and the command line driver
"""

__version__ = "0.1.0"

from .errors import (  # noqa: F401
    DomainError,
    NearSingularBand,
    OutOfBand,
    PacketNotCleared,
    QuadratureFailure,
    ResolutionError,
    SingularWavenumber,
    ThermoscatterError,
    ValidationError,
    WrapAround,
)
from .dispersion import DispersionRelation, nearest_neighbor, tabulated_couplings  # noqa: F401
from .scattering import ScatteringTheory, ThermostatParams, interface_coefficients, identity_suite  # noqa: F401
