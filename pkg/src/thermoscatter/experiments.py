"""Set-ups and micro/macro comparisons used by the command line and the tests."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats

from .chain import ChainConfig, EnsemblePlan, EnsembleSummary, WavePacketSpec, WignerWindow, spectrum_bins
from .config import ExperimentConfig
from .dispersion import DispersionRelation, load_couplings, nearest_neighbor, tabulated_couplings
from .errors import ValidationError
from .macro import InitialWigner, MacroSolution, evaluate_W
from .scattering import ScatteringTheory, ThermostatParams
from .wigner import FractionReport, WignerGrid, band_halfwidth, fraction_bands

FRACTION_NAMES = ("transmitted", "reflected", "scattered", "absorbed")

# Systematic floor (absolute) added in quadrature to Monte Carlo errors of the
# fractions: the band estimator leaks O(1e-9) of the packet, and with gamma = 0
# every realization is identical so the sample error is zero.
FRACTION_SE_FLOOR = 1e-6


def build_dispersion(cfg: ExperimentConfig) -> DispersionRelation:
    ds = cfg.dispersion
    radius = ds.radius or None
    if ds.type == "nearest_neighbor":
        return nearest_neighbor(ds.omega_min)
    if ds.couplings_file:
        return load_couplings(ds.couplings_file, radius=radius)
    return tabulated_couplings(ds.couplings, radius=radius)


def build_params(cfg: ExperimentConfig) -> ThermostatParams:
    th = cfg.thermostat
    return ThermostatParams(th.gamma, th.mu, th.T)


def packet_spec(cfg: ExperimentConfig) -> WavePacketSpec:
    p = cfg.packet
    return WavePacketSpec(p.k0, p.x0, p.sigma, p.amplitude, p.eps, cfg.grid.delta_excl)


def mirror_time(d: DispersionRelation, spec: WavePacketSpec):
    """Microscopic time for the packet centre to travel ``2 |x0|``."""
    v = abs(float(d.group_velocity(spec.k0)))
    return 2.0 * abs(spec.x0) / v / spec.eps


@dataclass
class Setup:
    config: ChainConfig
    plan: EnsemblePlan
    spec: WavePacketSpec | None
    eps: float
    t_end: float  # microscopic


def build_setup(cfg: ExperimentConfig, d=None) -> Setup:
    """Chain configuration and ensemble plan for a simulate/compare run."""
    d = build_dispersion(cfg) if d is None else d
    params = build_params(cfg)
    ens = cfg.ensemble
    eps = cfg.packet.eps
    spec = packet_spec(cfg) if ens.initial == "packet" else None
    if ens.t_end > 0:
        t_end = ens.t_end / eps
    else:
        t_end = mirror_time(d, spec)
    chain = ChainConfig(cfg.grid.N, params, d, seed=int(cfg.seed), t_end=t_end)
    times = tuple(float(t) for t in np.linspace(0.0, t_end, ens.n_outputs + 1)[1:])
    bands = ()
    near = 0
    if spec is not None:
        d.check_regular(spec.k0, cfg.grid.delta_excl)
        bands = fraction_bands(chain, spec, ens.band_std, ens.band_min_bins)
        near = int(math.ceil(3.0 * spec.sigma_sites))
    window = None
    if cfg.wigner.enabled:
        half = chain.N // 2
        std = cfg.wigner.std_sites
        tmp = WignerWindow(std, cfg.wigner.hop_sites, 0, 0)
        reach = half - tmp.length // 2
        window = WignerWindow(std, cfg.wigner.hop_sites, -reach, reach - 1)
    plan = EnsemblePlan(
        initial=ens.initial,
        packet=spec,
        output_times=times,
        bands=bands,
        near_sites=near,
        profiles=ens.profiles,
        wigner=window,
        spectrum_bins=ens.spectrum_bins if spec is not None else 0,
        chunk=ens.chunk,
    )
    return Setup(chain, plan, spec, eps, t_end)


# ---------------------------------------------------------------------------
# fractions
# ---------------------------------------------------------------------------
def theory_fractions(theory: ScatteringTheory, k0):
    """``(p_+, p_-, g int p_sc, p_abs g)`` at the carrier wavenumber."""
    g = float(theory.g_weight(k0))
    return np.array([
        float(theory.p_plus(k0)),
        float(theory.p_minus(k0)),
        g * theory.p_sc_integral,
        theory.p_abs * g,
    ])


def fraction_z(report: FractionReport, theory_values, floor=FRACTION_SE_FLOOR):
    se = np.sqrt(report.errors() ** 2 + floor**2)
    return (report.values() - np.asarray(theory_values)) / se


@dataclass
class Check:
    name: str
    empirical: float
    theory: float
    std_err: float
    z: float
    passed: bool
    note: str = ""


def fraction_checks(report: FractionReport, theory_values, z_max, abs_tol):
    z = fraction_z(report, theory_values)
    out = []
    for name, e, t, s, zz in zip(FRACTION_NAMES, report.values(), theory_values, report.errors(), z):
        ok = bool(abs(zz) <= z_max and abs(e - t) <= abs_tol)
        out.append(Check(name, float(e), float(t), float(s), float(zz), ok))
    return out


# ---------------------------------------------------------------------------
# scattered spectrum
# ---------------------------------------------------------------------------
def spectrum_theory(theory: ScatteringTheory, setup: Setup):
    """Expected out-of-band energy per coarse bin: ``g(k0) sum_j p_sc(k_j) / N``."""
    c = setup.config
    n_bins = setup.plan.spectrum_bins
    bins, k = spectrum_bins(c.N, n_bins, setup.plan.bands)
    keep = bins >= 0
    # p_sc is even in k; evaluate on |k| only, skipping the singular set
    ak = np.abs(k[keep])
    uk, inv = np.unique(ak, return_inverse=True)
    regular = theory.d.distance_to_singular(uk) > 0
    psc = np.zeros_like(uk)
    psc[regular] = theory.p_sc(uk[regular])
    weights = psc[inv] / c.N
    per_bin = np.bincount(bins[keep], weights=weights, minlength=n_bins)
    return float(theory.g_weight(setup.spec.k0)) * per_bin


def spectrum_checks(report, expected, z_max, floor=FRACTION_SE_FLOOR):
    out = []
    for i, (e, s, t) in enumerate(zip(report.energy, report.std_err, expected)):
        z = (e - t) / math.sqrt(s * s + floor * floor)
        lo, hi = report.edges[i], report.edges[i + 1]
        out.append(Check(f"spectrum[{lo:+.3f},{hi:+.3f})", float(e), float(t), float(s), float(z),
                         bool(abs(z) <= z_max)))
    return out


# ---------------------------------------------------------------------------
# macro density vs spectrogram
# ---------------------------------------------------------------------------
def macro_for_packet(theory: ScatteringTheory, spec: WavePacketSpec, delta_excl=1e-3):
    """Limit density for the packet, normalized like the spectrogram density.

    The spectrogram density integrates over ``k`` to ``(eps/2) |A(x - x0)|^2`` per unit
    macroscopic length, so the packet carries mass ``eps * amplitude^2 / 2``.
    """
    sk = spec.spectral_std
    W0 = InitialWigner.gaussian_packet(spec.x0, spec.sigma, spec.k0, sk,
                                       mass=0.5 * spec.eps * spec.amplitude**2)
    brk = [spec.k0 + s * 10 * sk for s in (-1, 1)]
    return MacroSolution(theory, W0, T=theory.params.T, delta_excl=delta_excl, extra_breaks=brk)


def smoothed_W(sol: MacroSolution, t, x, k, sx, sk, nx=7, nk=5):
    """Macro density convolved with the spectrogram kernel (Gaussian, std ``sx`` by ``sk``)."""
    gx, wx = np.polynomial.hermite_e.hermegauss(nx)
    gk, wk = np.polynomial.hermite_e.hermegauss(nk)
    wx = wx / wx.sum()
    wk = wk / wk.sum()
    x = np.asarray(x, float)
    k = np.asarray(k, float)
    X = x[:, None, None] + sx * gx[None, :, None]
    K = k[:, None, None] + sk * gk[None, None, :]
    X, K = np.broadcast_arrays(X, K)
    X, K = X.ravel(), K.ravel()
    vals = np.empty(X.size)
    step = 4096  # bounds the (points x kernel nodes) work array
    for a in range(0, X.size, step):
        vals[a:a + step] = evaluate_W(sol, t, X[a:a + step], K[a:a + step], check=False)
    return np.einsum("nij,i,j->n", vals.reshape(len(x), nx, nk), wx, wk)


def cell_threshold(z_max, n_cells, family_alpha=0.01):
    """Per-cell |z| threshold: the configured one, raised to a Bonferroni bound for many cells."""
    if n_cells <= 1:
        return z_max
    return max(z_max, float(stats.norm.isf(family_alpha / (2 * n_cells))))


def wigner_checks(grid: WignerGrid, sol: MacroSolution, setup: Setup, z_max, window_std_sites,
                  band_margin=None, rel_cut=0.05, edge_margin=4.0, settle=10.0):
    """Cell-by-cell z-scores of the spectrogram against the smoothed macro density.

    Only cells in the scattered region are compared: wavenumbers away from the
    incident bands and the singular set, positions strictly between the interface
    and the front ``v(k) t`` (a few window widths clear of both), and macro values
    above ``rel_cut`` of the largest candidate value.  Frequencies closer to a band
    edge than ``settle`` divided by the packet passage time are skipped too: there
    the thermostat response has not reached its limit while the packet passes.
    """
    spec = setup.spec
    eps = setup.eps
    t = eps * setup.t_end
    sx = eps * window_std_sites
    sk = 1.0 / (4.0 * math.pi * window_std_sites)
    d = sol.d
    if band_margin is None:
        hb = band_halfwidth(setup.config, spec) / setup.config.N
        band_margin = hb + 3.0 * sk + grid.dk
    ks = grid.k_grid
    passage = spec.sigma_sites / abs(float(d.group_velocity(spec.k0)))
    w = d.omega(ks)
    gap = np.minimum(w - d.omega_min, d.omega_max - w)
    okk = (d.distance_to_singular(ks) >= 0.02) & (gap >= settle / passage)
    okk &= (np.abs(ks - spec.k0) > band_margin) & (np.abs(ks + spec.k0) > band_margin)
    xs = grid.x_grid
    cells = []
    for j in np.nonzero(okk)[0]:
        vt = float(d.group_velocity(ks[j])) * t
        lo, hi = sorted((0.0, vt))
        sel = np.nonzero((xs > lo + edge_margin * sx) & (xs < hi - edge_margin * sx))[0]
        cells.extend((i, j) for i in sel)
    if not cells:
        return []
    ii = np.array([c[0] for c in cells])
    jj = np.array([c[1] for c in cells])
    raw = evaluate_W(sol, t, xs[ii], ks[jj], check=False)
    if not (raw.max() > 0 and float(sol.theory.g_weight(spec.k0)) > 0):
        # nothing is scattered (gamma = 0); the fractions cover this case
        return []
    keep = raw >= rel_cut * raw.max()
    ii, jj = ii[keep], jj[keep]
    th = smoothed_W(sol, t, xs[ii], ks[jj], sx, sk)
    emp = grid.values[ii, jj]
    se = grid.std_err[ii, jj]
    thr = cell_threshold(z_max, len(ii))
    out = []
    for a, b, e, s, m in zip(ii, jj, emp, se, th):
        z = (e - m) / s if s > 0 else math.inf
        out.append(Check(f"W(x={xs[a]:+.3f},k={ks[b]:+.4f})", float(e), float(m), float(s), float(z),
                         bool(abs(z) <= thr), note=f"threshold {thr:.3f}"))
    return out


# ---------------------------------------------------------------------------
# energy bookkeeping
# ---------------------------------------------------------------------------
@dataclass
class EnergyBalance:
    """Per-realization martingale residual of the energy under the jump process."""

    mean_residual: float
    residual_se: float
    z: float
    mean_jumps: float
    mean_dE: float
    mean_compensator: float
    max_relative_drift: float = math.nan
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)


def energy_balance(summary: EnsembleSummary):
    """Mean of ``sum dE - sum E[dE | p0]`` over jumps (zero in expectation).

    ``E[dE | p0] = (2 mu - 1) / mu^2 (T - p0^2)`` for each jump, which at rate
    ``gamma mu`` gives the mean drift ``gamma (2 - 1/mu) (T - p0^2)``.
    """
    pt = summary.per_trajectory
    res = pt["sum_dE"] - pt["sum_compensator"]
    M = len(res)
    m = float(res.mean())
    se = float(res.std(ddof=1) / math.sqrt(M)) if M > 1 else 0.0
    z = m / se if se > 0 else (0.0 if m == 0 else math.inf)
    E0 = pt["energy0"]
    Ef = summary.final.scalars["energy"]
    with np.errstate(divide="ignore", invalid="ignore"):
        drift = np.where(E0 > 0, np.abs(Ef - E0) / E0, 0.0)
    return EnergyBalance(m, se, z, float(pt["n_jumps"].mean()), float(pt["sum_dE"].mean()),
                         float(pt["sum_compensator"].mean()), float(drift.max()))


def time_series(summary: EnsembleSummary):
    """Columns ``t, E, se(E), p0^2, se(p0^2)`` over the output times."""
    rows = []
    for snap in summary.snapshots:
        e = snap.scalars["energy"]
        p = snap.scalars["p0sq"]
        M = len(e)
        f = 1.0 / math.sqrt(M) if M > 1 else math.nan
        rows.append([snap.time, e.mean(), e.std(ddof=1) * f if M > 1 else 0.0,
                     p.mean(), p.std(ddof=1) * f if M > 1 else 0.0])
    return np.array(rows)


def time_averaged(summary: EnsembleSummary, name, scale=1.0):
    """Mean and standard error of the per-realization average of a scalar over output times."""
    per = np.mean([snap.scalars[name] for snap in summary.snapshots], axis=0) * scale
    M = len(per)
    return float(per.mean()), float(per.std(ddof=1) / math.sqrt(M)) if M > 1 else 0.0


def check_thermal(summary: EnsembleSummary, z_max=3.0):
    """Stationarity checks for thermal initial data."""
    T = summary.config.params.T
    N = summary.config.N
    p, p_se = time_averaged(summary, "p0sq")
    e, e_se = time_averaged(summary, "energy", 1.0 / N)
    bal = energy_balance(summary)

    def z(a, b, s):
        return (a - b) / s if s > 0 else (0.0 if a == b else math.inf)

    return [
        Check("time_averaged_p0_squared", p, T, p_se, z(p, T, p_se), abs(z(p, T, p_se)) <= z_max),
        Check("mean_site_energy", e, 2 * T, e_se, z(e, 2 * T, e_se), abs(z(e, 2 * T, e_se)) <= z_max),
        Check("energy_balance_residual", bal.mean_residual, 0.0, bal.residual_se, bal.z,
              abs(bal.z) <= z_max),
    ]


def ensure_packet(cfg: ExperimentConfig):
    if cfg.ensemble.initial != "packet":
        raise ValidationError("this comparison needs packet initial data")
    if cfg.thermostat.T != 0:
        raise ValidationError("interface fractions need T = 0")
