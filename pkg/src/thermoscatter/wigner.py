"""Estimators for energy densities and interface fractions from ensembles.

The Wigner function is estimated by a Gaussian spectrogram: for a window ``g`` with
``sum g^2 = 1`` the squared windowed transform ``S(y, k)`` integrates over ``k`` to the
window-averaged site energy, and the density is ``W = S / 2`` per unit ``k`` and unit
macroscopic length (the thermal state has ``W = T`` and site energy ``2T``).
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .chain import Band, ChainConfig, EnsembleSummary, WavePacketSpec, WignerWindow, spectrum_bins
from .errors import PacketNotCleared, ResolutionError, ValidationError

__all__ = [
    "WignerGrid",
    "FractionReport",
    "SpectrumReport",
    "fraction_bands",
    "band_halfwidth",
    "validate_window",
    "empirical_wigner",
    "interface_fractions",
    "scattered_spectrum",
    "spectrum_bins",
]


# ---------------------------------------------------------------------------
# Wigner grid
# ---------------------------------------------------------------------------
@dataclass
class WignerGrid:
    x_grid: np.ndarray
    k_grid: np.ndarray
    values: np.ndarray  # shape (len(x_grid), len(k_grid))
    std_err: np.ndarray
    mass: float
    time: float

    @property
    def dx(self):
        return float(self.x_grid[1] - self.x_grid[0]) if len(self.x_grid) > 1 else 1.0

    @property
    def dk(self):
        return float(self.k_grid[1] - self.k_grid[0])

    def k_integrated(self):
        return self.values.sum(axis=1) * self.dk

    def to_csv(self, path):
        X, K = np.meshgrid(self.x_grid, self.k_grid, indexing="ij")
        cols = np.column_stack([X.ravel(), K.ravel(), self.values.ravel(), self.std_err.ravel()])
        np.savetxt(path, cols, delimiter=",", header="x,k,W,std_err", comments="", fmt="%.17g")


def validate_window(window: WignerWindow, eps, feature_scale=math.inf):
    """Window must be wide on the lattice scale and narrow on the macroscopic one."""
    if window.std_sites < 2.0:
        raise ResolutionError(f"window std {window.std_sites} sites does not average over the lattice")
    if eps * window.std_sites > 0.25 * feature_scale:
        raise ResolutionError("window is not small compared with the macroscopic feature scale")
    if window.hop_sites < 1 or window.hop_sites > 2 * window.std_sites:
        raise ResolutionError("hop must be between 1 site and two window widths")


def empirical_wigner(summary: EnsembleSummary, t=None, eps=None, feature_scale=None):
    """Ensemble-averaged spectrogram density at output time ``t``."""
    plan = summary.plan
    win = plan.wigner
    if win is None:
        raise ValidationError("ensemble was run without a Wigner window")
    if eps is None:
        eps = plan.packet.eps if plan.packet is not None else 1.0
    if feature_scale is None:
        feature_scale = plan.packet.sigma if plan.packet is not None else math.inf
    validate_window(win, eps, feature_scale)
    snap = summary.final if t is None else summary.snapshot(t)
    vals = snap.vector_mean["wigner"]
    se = snap.vector_se["wigner"]
    x = eps * win.centers.astype(float)
    k = win.k
    dx = eps * win.hop_sites
    dk = 1.0 / win.length
    return WignerGrid(x, k, vals, se, float(vals.sum() * dx * dk), snap.time)


# ---------------------------------------------------------------------------
# bands
# ---------------------------------------------------------------------------
def band_halfwidth(config: ChainConfig, spec: WavePacketSpec, n_std=6.0, min_bins=6):
    """Half-width in bins: the larger of ``min_bins`` and ``n_std`` spectral std."""
    return int(max(min_bins, math.ceil(n_std * spec.spectral_std * config.N)))


def _bin_band(name, j_lo, j_hi, N):
    # pad by a quarter bin so the inclusive mask is immune to rounding of j/N
    return Band(name, (j_lo - 0.25) / N, (j_hi + 0.25) / N)


def fraction_bands(config: ChainConfig, spec: WavePacketSpec, n_std=6.0, min_bins=6):
    """Main bands around ``+-k0`` plus equally wide flanking side bands.

    The side bands sample the smooth scattered background next to each main band
    so that its in-band share can be removed from the transmitted and reflected
    energies.
    """
    N = config.N
    hb = band_halfwidth(config, spec, n_std, min_bins)
    out = []
    for tag, kc in (("fwd", spec.k0), ("bwd", -spec.k0)):
        j0 = int(round(kc * N))
        if abs(j0) + 2 * hb + 1 >= N // 2 or abs(j0) - 2 * hb - 1 <= 0:
            raise ResolutionError("side bands overlap k=0 or k=1/2; refine N or the packet")
        out.append(_bin_band(tag, j0 - hb, j0 + hb, N))
        out.append(_bin_band(f"{tag}_lo", j0 - 2 * hb - 1, j0 - hb - 1, N))
        out.append(_bin_band(f"{tag}_hi", j0 + hb + 1, j0 + 2 * hb + 1, N))
    return tuple(out)


def _nbins(band: Band, N):
    return int(np.count_nonzero(band.mask(np.fft.fftfreq(N))))


# ---------------------------------------------------------------------------
# fractions
# ---------------------------------------------------------------------------
@dataclass
class FractionReport:
    transmitted: float
    reflected: float
    scattered: float
    absorbed: float
    transmitted_se: float
    reflected_se: float
    scattered_se: float
    absorbed_se: float
    raw_transmitted: float
    raw_reflected: float
    sum_se: float
    M: int
    band_halfwidth: float
    residual_near_interface: float

    def values(self):
        return np.array([self.transmitted, self.reflected, self.scattered, self.absorbed])

    def errors(self):
        return np.array([self.transmitted_se, self.reflected_se, self.scattered_se, self.absorbed_se])

    def z_scores(self, theory):
        th = np.asarray(theory, dtype=float)
        se = self.errors()
        with np.errstate(divide="ignore", invalid="ignore"):
            z = np.where(se > 0, (self.values() - th) / se, np.where(self.values() == th, 0.0, np.inf))
        return z

    def to_json(self, path, extra=None):
        payload = asdict(self)
        if extra:
            payload.update(extra)
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)


def _mean_se(x):
    x = np.asarray(x, dtype=float)
    if len(x) < 2:
        return float(x.mean()), 0.0
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(len(x)))


def per_trajectory_fractions(summary: EnsembleSummary, N=None):
    """Arrays ``(transmitted, reflected, scattered, absorbed, raw_t, raw_r, near)`` per realization."""
    N = summary.config.N if N is None else N
    bands = {b.name: b for b in summary.plan.bands}
    for need in ("fwd", "fwd_lo", "fwd_hi", "bwd", "bwd_lo", "bwd_hi"):
        if need not in bands:
            raise ValidationError("ensemble was not run with fraction bands")
    spec = summary.plan.packet
    if spec is None:
        raise ValidationError("fractions need packet initial data")
    v0 = float(summary.config.d.group_velocity(spec.k0))
    if v0 * spec.x0 >= 0:
        raise ValidationError("packet must start on one side and move toward the interface")
    # transmitted energy ends on the far side, reflected on the starting side
    far, near_side = ("pos", "neg") if spec.x0 < 0 else ("neg", "pos")
    sc = summary.final.scalars
    E0 = summary.per_trajectory["energy0"]
    Ef = sc["energy"]
    out = {}
    for tag, side in (("fwd", far), ("bwd", near_side)):
        nb_main = _nbins(bands[tag], N)
        nb_side = _nbins(bands[f"{tag}_lo"], N) + _nbins(bands[f"{tag}_hi"], N)
        ratio = nb_main / nb_side
        raw = sc[f"{tag}:{side}"] / E0
        bg = (sc[f"{tag}_lo:{side}"] + sc[f"{tag}_hi:{side}"]) / E0 * ratio
        near_bg = (sc[f"{tag}_lo:near"] + sc[f"{tag}_hi:near"]) / E0 * ratio
        out[tag] = raw - bg
        out[f"{tag}_raw"] = raw
        out[f"{tag}_near"] = sc[f"{tag}:near"] / E0 - near_bg
    absorbed = 1.0 - Ef / E0
    scattered = Ef / E0 - out["fwd"] - out["bwd"]
    return out["fwd"], out["bwd"], scattered, absorbed, out["fwd_raw"], out["bwd_raw"], out["fwd_near"] + out["bwd_near"]


def interface_fractions(summary: EnsembleSummary, clear_tol=2e-3):
    """Transmitted / reflected / scattered / absorbed energy fractions with standard errors.

    Transmitted is the ``k0`` band energy on the far side of the interface and
    reflected the ``-k0`` band energy on the starting side, each minus the scattered
    background interpolated from the side bands.  Absorbed is ``1 - E_final/E0``
    from exact energy bookkeeping, and scattered is the remainder, so the four
    fractions add to one for every realization.
    """
    if summary.config.params.T != 0:
        raise ValidationError("interface fractions need T = 0")
    tr, rf, sc, ab, raw_t, raw_r, near = per_trajectory_fractions(summary)
    near_mean = float(np.mean(near))
    if near_mean > clear_tol:
        raise PacketNotCleared(
            f"in-band energy {near_mean:.3g} of the incident energy is still near the interface"
        )
    m = [_mean_se(x) for x in (tr, rf, sc, ab)]
    total = tr + rf + sc + ab
    hb = (summary.plan.bands[0].kmax - summary.plan.bands[0].kmin) / 2
    return FractionReport(
        transmitted=m[0][0], reflected=m[1][0], scattered=m[2][0], absorbed=m[3][0],
        transmitted_se=m[0][1], reflected_se=m[1][1], scattered_se=m[2][1], absorbed_se=m[3][1],
        raw_transmitted=float(np.mean(raw_t)), raw_reflected=float(np.mean(raw_r)),
        sum_se=_mean_se(total)[1], M=summary.M, band_halfwidth=hb,
        residual_near_interface=near_mean,
    )


# ---------------------------------------------------------------------------
# scattered spectrum
# ---------------------------------------------------------------------------
@dataclass
class SpectrumReport:
    edges: np.ndarray
    energy: np.ndarray  # out-of-band energy per coarse bin / incident energy
    std_err: np.ndarray
    total: float
    total_se: float

    def to_csv(self, path, theory=None):
        cols = [self.edges[:-1], self.edges[1:], self.energy, self.std_err]
        header = "k_lo,k_hi,energy,std_err"
        if theory is not None:
            cols.append(np.asarray(theory))
            header += ",theory"
        np.savetxt(path, np.column_stack(cols), delimiter=",", header=header, comments="", fmt="%.17g")


def scattered_spectrum(summary: EnsembleSummary):
    """Out-of-band outgoing energy histogram over ``k`` (fraction of incident energy)."""
    snap = summary.final
    if "spectrum" not in snap.vector_mean:
        raise ValidationError("ensemble was run without spectrum bins")
    n_bins = summary.plan.spectrum_bins
    edges = np.linspace(-0.5, 0.5, n_bins + 1)
    energy = snap.vector_mean["spectrum"]
    se = snap.vector_se["spectrum"]
    total = snap.scalars["spectrum_total"]
    t, tse = _mean_se(total)
    return SpectrumReport(edges, energy, se, t, tse)
