"""Event-driven simulation of the harmonic chain with a Poissonian thermostat at site 0.

Between jumps every spectral mode rotates freely, ``psi_hat(k) -> exp(-i omega(k) dt) psi_hat(k)``.
At the jump times of a rate ``gamma * mu`` Poisson clock the momentum of the
thermostatted site is partially renewed, which in spectral variables is the uniform
kick ``psi_hat(k) += i * delta`` with ``delta = rho(mu) xi - p0 / mu``.

Only the even part ``(psi_hat(k) + psi_hat(-k)) / 2`` feels the kick, so the state keeps
the even part on the ``N/2 + 1`` distinct wavenumbers (in the frame rotating with the
free flow) and the odd part frozen at the reference time.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import cached_property

import numpy as np

from . import _kernel
from .dispersion import DispersionRelation
from .errors import ValidationError, WrapAround
from .scattering import ThermostatParams

__all__ = [
    "ChainConfig",
    "ChainState",
    "WavePacketSpec",
    "JumpStream",
    "Band",
    "WignerWindow",
    "EnsemblePlan",
    "EnsembleSummary",
    "Observables",
    "realization_rng",
    "sample_wavepacket",
    "sample_thermal",
    "zero_state",
    "evolve_to",
    "apply_jump",
    "observables",
    "run_trajectory",
    "run_ensemble",
    "check_horizon",
    "spectrum_bins",
]

_MASK64 = (1 << 64) - 1
PURPOSE_INIT, PURPOSE_JUMPS, PURPOSE_AUX = 0, 1, 2


@dataclass(frozen=True)
class ChainConfig:
    N: int
    params: ThermostatParams
    d: DispersionRelation
    seed: int = 0
    t_end: float = 0.0

    def __post_init__(self):
        n = int(self.N)
        if n < 64 or n & (n - 1):
            raise ValidationError(f"N must be a power of two >= 64, got {self.N}")
        if not 0 <= int(self.seed) <= _MASK64:
            raise ValidationError("seed must fit in 64 bits")
        if self.t_end < 0:
            raise ValidationError("t_end must be non-negative")

    @cached_property
    def k(self):
        """Wavenumbers in FFT order."""
        return np.fft.fftfreq(self.N)

    @cached_property
    def omega(self):
        return self.d.omega(self.k)

    @cached_property
    def n_unique(self):
        return self.N // 2 + 1

    @cached_property
    def omega_unique(self):
        return np.ascontiguousarray(self.omega[: self.n_unique])

    @cached_property
    def mult(self):
        m = np.full(self.n_unique, 2.0)
        m[0] = m[-1] = 1.0
        return m

    @cached_property
    def y(self):
        """Site labels in FFT order (``0..N/2-1, -N/2..-1``)."""
        idx = np.arange(self.N)
        return np.where(idx >= self.N // 2, idx - self.N, idx)

    @property
    def rate(self):
        return self.params.gamma * self.params.mu

    def describe(self):
        return {
            "N": self.N,
            "gamma": self.params.gamma,
            "mu": self.params.mu,
            "T": self.params.T,
            "seed": int(self.seed),
            "t_end": self.t_end,
            "dispersion": self.d.describe(),
        }


@dataclass(frozen=True)
class WavePacketSpec:
    """Gaussian packet ``sqrt(eps) A(eps y - x0) exp(2 pi i k0 y)``.

    ``A(x) = amplitude (2 pi sigma^2)^(-1/4) exp(-x^2 / (4 sigma^2))`` so that
    ``int |A|^2 = amplitude^2``; ``x0`` and ``sigma`` are macroscopic lengths.
    """

    k0: float
    x0: float
    sigma: float
    amplitude: float = 1.0
    eps: float = 0.01
    delta_excl: float = 1e-3

    def __post_init__(self):
        if not (self.sigma > 0 and self.eps > 0):
            raise ValidationError("sigma and eps must be positive")

    @property
    def sigma_sites(self):
        return self.sigma / self.eps

    @property
    def x0_sites(self):
        return self.x0 / self.eps

    @property
    def spectral_std(self):
        """Standard deviation of ``|psi_hat|^2`` around ``k0``."""
        return 1.0 / (4.0 * math.pi * self.sigma_sites)


def realization_rng(seed, r, purpose):
    """Counter-based generator for realization ``r``; ``purpose`` separates streams."""
    ss = np.random.SeedSequence([int(seed) & _MASK64, int(r), int(purpose)])
    return np.random.Generator(np.random.Philox(ss))


class JumpStream:
    """Poisson clock and Gaussian draws, consumed in fixed-size blocks.

    Block ``b`` holds ``BLOCK`` exponential gaps followed by ``BLOCK`` standard
    normals; jump ``i`` uses gap ``i`` (measured from the previous jump) and
    normal ``i``, so the sequence does not depend on how time is chunked.
    """

    BLOCK = 512

    def __init__(self, rng, rate, t0=0.0):
        self.rng = rng
        self.rate = float(rate)
        self._refill()
        self.t_next = t0 + self.gaps[0] / self.rate if self.rate > 0 else math.inf

    def _refill(self):
        self.gaps = self.rng.standard_exponential(self.BLOCK)
        self.normals = self.rng.standard_normal(self.BLOCK)
        self.pos = 0

    def advance_block(self, last_jump_time):
        self._refill()
        self.t_next = last_jump_time + self.gaps[0] / self.rate


@dataclass
class JumpLog:
    n_jumps: int = 0
    sum_dE: float = 0.0
    sum_compensator: float = 0.0
    keep: bool = False
    times: list = field(default_factory=list)
    p0_before: list = field(default_factory=list)
    p0_after: list = field(default_factory=list)

    def add(self, t, p0, delta, params: ThermostatParams):
        p1 = p0 + delta
        mu = params.mu
        self.n_jumps += len(p0)
        self.sum_dE += float(np.sum(p1 * p1 - p0 * p0))
        self.sum_compensator += float(np.sum((2 * mu - 1) / mu**2 * (params.T - p0 * p0)))
        if self.keep:
            self.times.extend(np.asarray(t).tolist())
            self.p0_before.extend(np.asarray(p0).tolist())
            self.p0_after.extend(np.asarray(p1).tolist())


class ChainState:
    """Spectral wave function at time ``time``.

    ``psi_hat`` is returned in FFT order (``k_j = j/N`` for ``j < N/2`` and
    ``j/N - 1`` above); :func:`observables` gives centred profiles.
    Operations mutate the state in place and also return it.
    """

    def __init__(self, config: ChainConfig, psi_hat, time=0.0, stream=None, aux_rng=None,
                 keep_log=False):
        psi_hat = np.asarray(psi_hat, dtype=complex)
        if psi_hat.shape != (config.N,):
            raise ValidationError("psi_hat has the wrong length")
        self.config = config
        self.time = float(time)
        self.stream = stream
        self.aux_rng = aux_rng
        self.log = JumpLog(keep=keep_log)
        self._set_reference(psi_hat, self.time)

    def _set_reference(self, psi_hat, t):
        mirror = psi_hat[(-np.arange(self.config.N)) % self.config.N]
        even = 0.5 * (psi_hat + mirror)
        self.odd = 0.5 * (psi_hat - mirror)
        n = self.config.n_unique
        self.phi_re = np.ascontiguousarray(even[:n].real)
        self.phi_im = np.ascontiguousarray(even[:n].imag)
        self.t_ref = float(t)

    def rebase(self, t=None):
        """Move the rotating frame reference to ``t`` (default: current time)."""
        t = self.time if t is None else t
        self._set_reference(self.psi_hat_at(t), t)

    def psi_hat_at(self, t):
        c = self.config
        n = c.n_unique
        rot_u = np.exp(-1j * c.omega_unique * (t - self.t_ref))
        ev_u = rot_u * (self.phi_re + 1j * self.phi_im)
        even = np.empty(c.N, dtype=complex)
        even[:n] = ev_u
        even[n:] = ev_u[1 : n - 1][::-1]
        return even + np.exp(-1j * c.omega * (t - self.t_ref)) * self.odd

    @property
    def psi_hat(self):
        return self.psi_hat_at(self.time)

    @property
    def psi(self):
        """Site amplitudes in FFT order of the site label (see ``config.y``)."""
        return np.fft.ifft(self.psi_hat)

    @property
    def p0(self):
        return float(np.mean(self.psi_hat.imag))

    @property
    def total_energy(self):
        return float(np.mean(np.abs(self.psi_hat) ** 2))

    def copy(self):
        new = ChainState.__new__(ChainState)
        new.__dict__.update(self.__dict__)
        new.phi_re = self.phi_re.copy()
        new.phi_im = self.phi_im.copy()
        new.odd = self.odd.copy()
        new.log = JumpLog(**{**asdict(self.log), "times": list(self.log.times),
                             "p0_before": list(self.log.p0_before),
                             "p0_after": list(self.log.p0_after)})
        return new


# ---------------------------------------------------------------------------
# initial data
# ---------------------------------------------------------------------------
def _streams(config, r, keep_log=False):
    return (
        realization_rng(config.seed, r, PURPOSE_INIT),
        JumpStream(realization_rng(config.seed, r, PURPOSE_JUMPS), config.rate),
        realization_rng(config.seed, r, PURPOSE_AUX),
    )


def sample_wavepacket(config: ChainConfig, spec: WavePacketSpec, rng, stream=None, aux_rng=None,
                      keep_log=False):
    """Packet with a uniformly random global phase (one uniform draw from ``rng``)."""
    config.d.check_regular(spec.k0, spec.delta_excl)
    half = config.N // 2
    if abs(spec.x0_sites) + 6.0 * spec.sigma_sites >= half:
        raise WrapAround("packet support does not fit in the periodic box")
    theta = rng.uniform(0.0, 2.0 * math.pi)
    y = config.y
    x = spec.eps * y - spec.x0
    A = spec.amplitude * (2 * math.pi * spec.sigma**2) ** -0.25 * np.exp(-(x * x) / (4 * spec.sigma**2))
    psi = np.exp(1j * theta) * math.sqrt(spec.eps) * A * np.exp(2j * math.pi * spec.k0 * y)
    return ChainState(config, np.fft.fft(psi), 0.0, stream, aux_rng, keep_log)


def sample_thermal(config: ChainConfig, rng, stream=None, aux_rng=None, keep_log=False):
    """i.i.d. complex Gaussian sites with ``E|psi_x|^2 = 2T`` and ``E psi_x^2 = 0``."""
    T = config.params.T
    z = rng.standard_normal((2, config.N))
    psi = math.sqrt(T) * (z[0] + 1j * z[1])
    return ChainState(config, np.fft.fft(psi), 0.0, stream, aux_rng, keep_log)


def zero_state(config: ChainConfig, stream=None, aux_rng=None, keep_log=False):
    return ChainState(config, np.zeros(config.N, complex), 0.0, stream, aux_rng, keep_log)


# ---------------------------------------------------------------------------
# dynamics
# ---------------------------------------------------------------------------
def apply_jump(state: ChainState, xi=None):
    """Kick every mode by ``i * delta`` at the current time.

    ``xi`` is the ``N(0, T)`` momentum draw; when omitted it is drawn from the
    auxiliary stream so the Poisson clock is not disturbed.
    """
    c = state.config
    par = c.params
    if xi is None:
        rng = state.aux_rng if state.aux_rng is not None else np.random.default_rng()
        xi = math.sqrt(par.T) * rng.standard_normal()
    p0 = state.p0
    delta = par.rho * xi - p0 / par.mu
    phase = np.exp(1j * c.omega_unique * (state.time - state.t_ref))
    kick = 1j * delta * phase
    state.phi_re += kick.real
    state.phi_im += kick.imag
    state.log.add(np.array([state.time]), np.array([p0]), np.array([delta]), par)
    return state


def evolve_to(state: ChainState, t_target, reference=False):
    """Advance to ``t_target``, applying every Poisson jump on the way.

    ``reference=True`` uses the libm kernel instead of the polynomial one.
    """
    if t_target < state.time:
        raise ValidationError("cannot evolve backwards in time")
    c = state.config
    st = state.stream
    if st is None or st.rate <= 0:
        state.time = float(t_target)
        return state
    par = c.params
    amp = par.rho * math.sqrt(par.T)
    inv_mu = 1.0 / par.mu
    inv_n = 1.0 / c.N
    w = c.omega_unique
    mult = c.mult
    B = JumpStream.BLOCK
    cs = np.empty_like(w)
    sn = np.empty_like(w)
    rec_t, rec_p0, rec_d = np.empty(B), np.empty(B), np.empty(B)
    wmax = max(float(w.max()), 1e-300)
    while st.t_next <= t_target:
        # keep phases inside the accurate range of the polynomial kernel
        if wmax * (st.t_next - state.t_ref) > 0.5 * _kernel.MAX_PHASE:
            # no jump happens before t_next, so the free flow up to it is exact
            state.rebase(st.t_next)
        limit = min(t_target, state.t_ref + _kernel.MAX_PHASE / wmax)
        start = st.pos
        if reference:
            t_next, pos, m = _kernel.run_jumps_reference(
                state.phi_re, state.phi_im, w, mult, state.t_ref, st.t_next, limit,
                st.gaps, st.normals, start, st.rate, inv_mu, amp, inv_n, rec_t, rec_p0, rec_d)
        else:
            t_next, pos, m = _kernel.run_jumps(
                state.phi_re, state.phi_im, w, mult, state.t_ref, st.t_next, limit,
                st.gaps, st.normals, start, st.rate, inv_mu, amp, inv_n, cs, sn,
                rec_t, rec_p0, rec_d)
        if m:
            state.log.add(rec_t[:m], rec_p0[:m], rec_d[:m], par)
            state.time = float(rec_t[m - 1])
        st.pos = pos
        if pos == B:
            st.advance_block(t_next)
        else:
            st.t_next = t_next
    state.time = float(t_target)
    return state


@dataclass
class Observables:
    p0: float
    total_energy: float
    y: np.ndarray
    site_energy: np.ndarray
    k: np.ndarray
    spectral_energy: np.ndarray


def observables(state: ChainState):
    """``p0``, total energy and centred site / spectral energy profiles.

    ``spectral_energy`` is ``|psi_hat(k_j)|^2 / N`` so both profiles sum to the
    total energy.
    """
    c = state.config
    ph = state.psi_hat
    site = np.abs(np.fft.ifft(ph)) ** 2
    spec = np.abs(ph) ** 2 / c.N
    return Observables(
        p0=float(np.mean(ph.imag)),
        total_energy=float(np.sum(spec)),
        y=np.fft.fftshift(c.y),
        site_energy=np.fft.fftshift(site),
        k=np.fft.fftshift(c.k),
        spectral_energy=np.fft.fftshift(spec),
    )


# ---------------------------------------------------------------------------
# ensembles
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class Band:
    """Wavenumber interval ``[kmin, kmax]``; energies are split by the sign of the site."""

    name: str
    kmin: float
    kmax: float

    def mask(self, k):
        return (k >= self.kmin) & (k <= self.kmax)


@dataclass(frozen=True)
class WignerWindow:
    """Gaussian analysis window for the spectrogram (lengths in sites)."""

    std_sites: float
    hop_sites: int
    y_min: int
    y_max: int

    @property
    def length(self):
        n = 8
        while n < 8.0 * self.std_sites:
            n *= 2
        return n

    @property
    def centers(self):
        return np.arange(self.y_min, self.y_max + 1, self.hop_sites)

    @property
    def k(self):
        return np.fft.fftshift(np.fft.fftfreq(self.length))

    def taper(self):
        m = np.arange(self.length) - self.length // 2
        g = np.exp(-(m * m) / (4.0 * self.std_sites**2))
        return g / math.sqrt(np.sum(g * g))


@dataclass(frozen=True)
class EnsemblePlan:
    """What to sample, when to look and what to record."""

    initial: str = "packet"  # packet | thermal | zero
    packet: WavePacketSpec | None = None
    output_times: tuple = ()
    bands: tuple = ()
    near_sites: int = 0
    profiles: bool = False
    wigner: WignerWindow | None = None
    spectrum_bins: int = 0
    chunk: int = 64


def check_horizon(config: ChainConfig, spec: WavePacketSpec, t_end, margin=6.0):
    """Raise :class:`WrapAround` if packet or scattered waves could wrap before ``t_end``."""
    half = config.N // 2
    s = margin * spec.sigma_sites
    v0 = abs(float(config.d.group_velocity(spec.k0)))
    vmax = float(np.max(np.abs(config.d.group_velocity(config.k))))
    x0 = spec.x0_sites
    far_edge = abs(x0 + math.copysign(1.0, spec.k0) * v0 * t_end) + s
    arrival = max(abs(x0) - s, 0.0) / max(v0, 1e-300)
    scattered = vmax * max(t_end - arrival, 0.0)
    if abs(x0) + s >= half or far_edge >= half or scattered >= half:
        raise WrapAround(
            f"signal reaches the periodic image before t={t_end} (box half-width {half})"
        )


def spectrum_bins(N, n_bins, bands):
    """Coarse-bin index of every FFT bin in centred order; ``-1`` inside the main bands."""
    k = np.fft.fftshift(np.fft.fftfreq(N))
    idx = np.minimum(((k + 0.5) * n_bins).astype(int), n_bins - 1)
    excluded = np.zeros(N, bool)
    for b in bands:
        if b.name in ("fwd", "bwd"):
            excluded |= b.mask(k)
    return np.where(excluded, -1, idx), k


def _spectrogram(psi, window: WignerWindow, taper):
    N = psi.shape[0]
    L = window.length
    offs = np.arange(L) - L // 2
    idx = (window.centers[:, None] + offs[None, :]) % N
    F = np.fft.fft(psi[idx] * taper[None, :], axis=1)
    return np.fft.fftshift(np.abs(F) ** 2, axes=1)


def _probe(state: ChainState, plan: EnsemblePlan, masks, taper, bins, e0):
    c = state.config
    ph = state.psi_hat
    out = {"energy": float(np.mean(np.abs(ph) ** 2)), "p0sq": float(np.mean(ph.imag)) ** 2}
    y = c.y
    pos, neg, zero = y > 0, y < 0, y == 0
    near = np.abs(y) <= plan.near_sites
    for b, m in zip(plan.bands, masks):
        e = np.abs(np.fft.ifft(ph * m)) ** 2
        half0 = 0.5 * float(e[zero].sum())
        out[f"{b.name}:pos"] = float(e[pos].sum()) + half0
        out[f"{b.name}:neg"] = float(e[neg].sum()) + half0
        out[f"{b.name}:near"] = float(e[near].sum())
    vec = {}
    if plan.profiles:
        vec["spectral"] = np.fft.fftshift(np.abs(ph) ** 2 / c.N)
        vec["site"] = np.fft.fftshift(np.abs(np.fft.ifft(ph)) ** 2)
    if plan.wigner is not None:
        vec["wigner"] = 0.5 * _spectrogram(np.fft.ifft(ph), plan.wigner, taper)
    if bins is not None:
        spec = np.fft.fftshift(np.abs(ph) ** 2) / (c.N * e0)
        keep = bins >= 0
        vec["spectrum"] = np.bincount(bins[keep], weights=spec[keep], minlength=plan.spectrum_bins)
        out["spectrum_total"] = float(vec["spectrum"].sum())
    return out, vec


def run_trajectory(config: ChainConfig, plan: EnsemblePlan, r: int, reference=False):
    """One realization; returns ``(scalars, vectors)`` keyed by output-time index."""
    rng0, stream, aux = _streams(config, r)
    if plan.initial == "packet":
        state = sample_wavepacket(config, plan.packet, rng0, stream, aux)
    elif plan.initial == "thermal":
        state = sample_thermal(config, rng0, stream, aux)
    elif plan.initial == "zero":
        state = zero_state(config, stream, aux)
    else:
        raise ValidationError(f"unknown initial data {plan.initial!r}")
    masks = [b.mask(config.k) for b in plan.bands]
    taper = plan.wigner.taper() if plan.wigner is not None else None
    bins = spectrum_bins(config.N, plan.spectrum_bins, plan.bands)[0] if plan.spectrum_bins else None
    e0 = state.total_energy
    scal, vecs = [], []
    for t in plan.output_times:
        evolve_to(state, t, reference=reference)
        s, v = _probe(state, plan, masks, taper, bins, e0)
        scal.append(s)
        vecs.append(v)
    summary = {
        "energy0": e0,
        "n_jumps": state.log.n_jumps,
        "sum_dE": state.log.sum_dE,
        "sum_compensator": state.log.sum_compensator,
    }
    return summary, scal, vecs


class _Moments:
    """Mean and centred second moment, merged pairwise in a fixed order."""

    def __init__(self):
        self.n = 0
        self.mean = None
        self.m2 = None

    def add(self, x):
        x = np.asarray(x, dtype=float)
        self.n += 1
        if self.mean is None:
            self.mean = x.copy()
            self.m2 = np.zeros_like(x)
            return
        d = x - self.mean
        self.mean += d / self.n
        self.m2 += d * (x - self.mean)

    def merge(self, other):
        if other.n == 0:
            return
        if self.n == 0:
            self.n, self.mean, self.m2 = other.n, other.mean.copy(), other.m2.copy()
            return
        n = self.n + other.n
        d = other.mean - self.mean
        self.mean = self.mean + d * (other.n / n)
        self.m2 = self.m2 + other.m2 + d * d * (self.n * other.n / n)
        self.n = n

    @property
    def se(self):
        if self.n < 2:
            return np.full_like(self.mean, np.nan)
        return np.sqrt(self.m2 / (self.n - 1) / self.n)


def _run_chunk(args):
    config, plan, r0, r1, reference = args
    summaries, scalars = [], []
    moments = [dict() for _ in plan.output_times]
    for r in range(r0, r1):
        s, sc, vs = run_trajectory(config, plan, r, reference)
        summaries.append(s)
        scalars.append(sc)
        for ti, v in enumerate(vs):
            for key, arr in v.items():
                moments[ti].setdefault(key, _Moments()).add(arr)
    return summaries, scalars, moments


@dataclass
class EnsembleSnapshot:
    time: float
    scalars: dict  # name -> per-trajectory array (M,)
    vector_mean: dict
    vector_se: dict


@dataclass
class EnsembleSummary:
    config: ChainConfig
    plan: EnsemblePlan
    M: int
    per_trajectory: dict  # energy0, n_jumps, sum_dE, sum_compensator -> (M,)
    snapshots: list

    def snapshot(self, t):
        times = np.array([s.time for s in self.snapshots])
        i = int(np.argmin(np.abs(times - t)))
        if abs(times[i] - t) > 1e-9 * max(1.0, abs(t)):
            raise KeyError(f"no output at time {t}")
        return self.snapshots[i]

    @property
    def final(self):
        return self.snapshots[-1]

    def mean_se(self, name, t=None):
        snap = self.final if t is None else self.snapshot(t)
        x = snap.scalars[name]
        return float(np.mean(x)), float(np.std(x, ddof=1) / math.sqrt(len(x))) if len(x) > 1 else math.nan


def run_ensemble(config: ChainConfig, M: int, plan: EnsemblePlan, workers=1, reference=False):
    """Run ``M`` realizations, realization ``r`` using the sub-streams keyed by ``(seed, r)``.

    Realizations are grouped in chunks of ``plan.chunk`` and merged in chunk order, so
    the result does not depend on ``workers``.
    """
    if M < 1:
        raise ValidationError("M must be >= 1")
    if not plan.output_times:
        plan = EnsemblePlan(**{**plan.__dict__, "output_times": (config.t_end,)})
    times = tuple(float(t) for t in plan.output_times)
    if any(b < a for a, b in zip(times, times[1:])) or times[0] < 0:
        raise ValidationError("output times must be non-negative and increasing")
    if plan.initial == "packet":
        if plan.packet is None:
            raise ValidationError("packet initial data needs a WavePacketSpec")
        check_horizon(config, plan.packet, times[-1])
    _kernel.warm_up()
    jobs = [(config, plan, r0, min(r0 + plan.chunk, M), reference) for r0 in range(0, M, plan.chunk)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_run_chunk, jobs))
    else:
        results = [_run_chunk(j) for j in jobs]
    summaries, scalars = [], []
    moments = [dict() for _ in times]
    for s, sc, mo in results:
        summaries.extend(s)
        scalars.extend(sc)
        for ti in range(len(times)):
            for key, m in mo[ti].items():
                moments[ti].setdefault(key, _Moments()).merge(m)
    per_traj = {k: np.array([s[k] for s in summaries]) for k in summaries[0]}
    snaps = []
    for ti, t in enumerate(times):
        names = scalars[0][ti].keys()
        sc = {n: np.array([traj[ti][n] for traj in scalars]) for n in names}
        snaps.append(
            EnsembleSnapshot(
                time=t,
                scalars=sc,
                vector_mean={k: m.mean for k, m in moments[ti].items()},
                vector_se={k: m.se for k, m in moments[ti].items()},
            )
        )
    return EnsembleSummary(config, plan, M, per_traj, snaps)
