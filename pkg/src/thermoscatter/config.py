"""Experiment configuration: one TOML file, validated before any computation.

Every section and key is optional; defaults below describe the headline
transmission/reflection experiment.  Times in ``[ensemble]`` are macroscopic
(microscopic time = macroscopic time / eps).
"""

from __future__ import annotations

import hashlib
import json
import math
import sys
from dataclasses import asdict, dataclass, field, fields

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ValidationError

KINDS = ("coeffs", "identities", "simulate", "compare")


@dataclass
class DispersionSection:
    type: str = "nearest_neighbor"  # nearest_neighbor | tabulated
    omega_min: float = 0.0
    couplings: list = field(default_factory=list)
    couplings_file: str = ""
    radius: int = 0


@dataclass
class ThermostatSection:
    gamma: float = 1.0
    mu: float = 1.0
    T: float = 0.0


@dataclass
class GridSection:
    N: int = 4096
    k_points: int = 401
    delta_excl: float = 1e-3


@dataclass
class EnsembleSection:
    M: int = 4000
    initial: str = "packet"  # packet | thermal | zero
    t_end: float = 0.0  # 0: time for the packet centre to reach its mirror image
    n_outputs: int = 1
    chunk: int = 64
    spectrum_bins: int = 20
    band_std: float = 6.0
    band_min_bins: int = 6
    profiles: bool = False


@dataclass
class PacketSection:
    k0: float = 0.2
    x0: float = -8.0
    sigma: float = 1.0
    amplitude: float = 1.0
    eps: float = 0.01


@dataclass
class WignerSection:
    enabled: bool = True
    std_sites: float = 16.0
    hop_sites: int = 16


@dataclass
class IdentitiesSection:
    gammas: list = field(default_factory=lambda: [0.5, 1.0, 2.0])
    mus: list = field(default_factory=lambda: [0.5, 1.0, 2.0, 10.0])


@dataclass
class TolerancesSection:
    boundary_real_part: float = 1e-6
    unitarity: float = 1e-8
    gamma_identity: float = 1e-6
    absorption_scattering_sum: float = 1e-8
    balance: float = 1e-8
    flux_symmetry: float = 1e-10
    quadrature: float = 1e-12
    z_threshold: float = 3.0
    z_threshold_binned: float = 4.0
    abs_tolerance: float = 0.03


_SECTIONS = {
    "dispersion": DispersionSection,
    "thermostat": ThermostatSection,
    "grid": GridSection,
    "ensemble": EnsembleSection,
    "packet": PacketSection,
    "wigner": WignerSection,
    "identities": IdentitiesSection,
    "tolerances": TolerancesSection,
}


@dataclass
class ExperimentConfig:
    kind: str = "compare"
    seed: int = 20240601
    workers: int = 1
    out: str = "results"
    dispersion: DispersionSection = field(default_factory=DispersionSection)
    thermostat: ThermostatSection = field(default_factory=ThermostatSection)
    grid: GridSection = field(default_factory=GridSection)
    ensemble: EnsembleSection = field(default_factory=EnsembleSection)
    packet: PacketSection = field(default_factory=PacketSection)
    wigner: WignerSection = field(default_factory=WignerSection)
    identities: IdentitiesSection = field(default_factory=IdentitiesSection)
    tolerances: TolerancesSection = field(default_factory=TolerancesSection)

    def to_dict(self):
        return asdict(self)

    def content_hash(self):
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def validate(self):
        if self.kind not in KINDS:
            raise ValidationError(f"kind must be one of {KINDS}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValidationError("seed must be an unsigned 64-bit integer")
        if self.workers < 1:
            raise ValidationError("workers must be >= 1")
        th = self.thermostat
        if not th.gamma >= 0:
            raise ValidationError("gamma must be >= 0")
        if not th.mu >= 0.5:
            raise ValidationError("mu must be >= 1/2")
        if not th.T >= 0:
            raise ValidationError("T must be >= 0")
        for g in self.identities.gammas:
            if not g > 0:
                raise ValidationError("identity matrix gammas must be positive")
        for m in self.identities.mus:
            if not m >= 0.5:
                raise ValidationError("identity matrix mus must be >= 1/2")
        n = self.grid.N
        if n < 64 or n & (n - 1):
            raise ValidationError("grid.N must be a power of two >= 64")
        if self.ensemble.M < 1:
            raise ValidationError("ensemble.M must be >= 1")
        if self.ensemble.initial not in ("packet", "thermal", "zero"):
            raise ValidationError("ensemble.initial must be packet, thermal or zero")
        if self.ensemble.n_outputs < 1 or self.ensemble.chunk < 1:
            raise ValidationError("ensemble.n_outputs and ensemble.chunk must be >= 1")
        if self.ensemble.initial != "packet" and not self.ensemble.t_end > 0:
            raise ValidationError("ensemble.t_end must be set for non-packet runs")
        p = self.packet
        if not (p.sigma > 0 and p.eps > 0 and 0 < abs(p.k0) < 0.5):
            raise ValidationError("packet needs sigma > 0, eps > 0 and 0 < |k0| < 1/2")
        if self.dispersion.type not in ("nearest_neighbor", "tabulated"):
            raise ValidationError("dispersion.type must be nearest_neighbor or tabulated")
        if self.dispersion.type == "tabulated" and not (self.dispersion.couplings or self.dispersion.couplings_file):
            raise ValidationError("tabulated dispersion needs couplings or couplings_file")
        return self


def _build(cls, data, where):
    known = {f.name for f in fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ValidationError(f"unknown keys in [{where}]: {sorted(unknown)}")
    return cls(**data)


def from_dict(data: dict) -> ExperimentConfig:
    data = dict(data)
    kw = {}
    for name, cls in _SECTIONS.items():
        sec = data.pop(name, {})
        if not isinstance(sec, dict):
            raise ValidationError(f"[{name}] must be a table")
        kw[name] = _build(cls, sec, name)
    top = _build(ExperimentConfig, data, "top level")
    for name, val in kw.items():
        setattr(top, name, val)
    return top


def load_config(path=None, **overrides) -> ExperimentConfig:
    """Read a TOML file (or defaults), apply non-None overrides, validate."""
    data = {}
    if path is not None:
        try:
            with open(path, "rb") as fh:
                data = tomllib.load(fh)
        except (OSError, tomllib.TOMLDecodeError) as exc:
            raise ValidationError(f"cannot read config {path}: {exc}") from exc
    cfg = from_dict(data)
    for key, val in overrides.items():
        if val is not None:
            setattr(cfg, key, val)
    for num in (cfg.thermostat.gamma, cfg.thermostat.mu, cfg.thermostat.T):
        if isinstance(num, float) and not math.isfinite(num):
            raise ValidationError("thermostat parameters must be finite")
    return cfg.validate()
