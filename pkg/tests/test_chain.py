import math

import numpy as np
import pytest

from thermoscatter.chain import (
    ChainConfig,
    ChainState,
    EnsemblePlan,
    JumpStream,
    WavePacketSpec,
    apply_jump,
    check_horizon,
    evolve_to,
    observables,
    realization_rng,
    run_ensemble,
    run_trajectory,
    sample_thermal,
    sample_wavepacket,
    zero_state,
)
from thermoscatter.errors import ValidationError, WrapAround
from thermoscatter.scattering import ThermostatParams

SMALL = WavePacketSpec(k0=0.2, x0=-1.0, sigma=1.0, eps=0.25)


def cfg(d, gamma=1.0, mu=1.0, T=0.0, N=64, seed=7):
    return ChainConfig(N, ThermostatParams(gamma, mu, T), d, seed=seed)


def with_stream(c, state, r=0):
    state.stream = JumpStream(realization_rng(c.seed, r, 1), c.rate)
    state.aux_rng = realization_rng(c.seed, r, 2)
    return state


def test_config_validation(acoustic):
    with pytest.raises(ValidationError):
        cfg(acoustic, N=100)
    with pytest.raises(ValidationError):
        cfg(acoustic, N=32)
    with pytest.raises(ValidationError):
        ChainConfig(64, ThermostatParams(1.0), acoustic, seed=-1)


def test_packet_deterministic(acoustic):
    c = cfg(acoustic)
    a = sample_wavepacket(c, SMALL, realization_rng(3, 0, 0))
    b = sample_wavepacket(c, SMALL, realization_rng(3, 0, 0))
    assert np.array_equal(a.psi_hat, b.psi_hat)
    other = sample_wavepacket(c, SMALL, realization_rng(3, 1, 0))
    assert not np.array_equal(a.psi_hat, other.psi_hat)


def test_packet_phase_randomised(acoustic):
    c = cfg(acoustic)
    n = 10_000
    rng = np.random.default_rng(0)
    energies = np.empty(n)
    prods = np.empty((n, 3), complex)
    j = int(round(SMALL.k0 * c.N))
    pairs = [(j, j), (j, j + 1), (j - 1, j + 2)]
    for i in range(n):
        ph = sample_wavepacket(c, SMALL, rng).psi_hat
        energies[i] = np.mean(np.abs(ph) ** 2)
        prods[i] = [ph[a] * ph[b] for a, b in pairs]
    # the global phase drops out of the energy
    assert np.ptp(energies) <= 1e-14 * energies[0]
    for col in prods.T:
        for part in (col.real, col.imag):
            assert abs(part.mean()) <= 3 * part.std(ddof=1) / math.sqrt(n)


def test_packet_must_fit(acoustic):
    with pytest.raises(WrapAround):
        sample_wavepacket(cfg(acoustic), WavePacketSpec(0.2, -2.0, 1.0, eps=0.25), np.random.default_rng(0))


def test_packet_normalisation(acoustic):
    c = cfg(acoustic, N=1024)
    spec = WavePacketSpec(0.2, -2.0, 1.0, amplitude=1.5, eps=0.05)
    s = sample_wavepacket(c, spec, np.random.default_rng(0))
    # sum_y eps |A(eps y - x0)|^2 is a Riemann sum for amplitude^2
    assert s.total_energy == pytest.approx(1.5**2, rel=1e-12)


def test_thermal_moments(acoustic):
    T = 1.3
    c = cfg(acoustic, T=T)
    rng = np.random.default_rng(1)
    n = 10_000
    e = np.empty(n)
    sq = np.empty(n, complex)
    for i in range(n):
        psi = sample_thermal(c, rng).psi
        e[i] = np.mean(np.abs(psi) ** 2)
        sq[i] = np.mean(psi * psi)
    se = e.std(ddof=1) / math.sqrt(n)
    assert abs(e.mean() - 2 * T) <= 3 * se
    assert abs(sq.real.mean()) <= 3 * sq.real.std(ddof=1) / math.sqrt(n)
    assert abs(sq.imag.mean()) <= 3 * sq.imag.std(ddof=1) / math.sqrt(n)


def test_thermal_zero_temperature(acoustic):
    s = sample_thermal(cfg(acoustic, T=0.0), np.random.default_rng(0))
    assert not np.any(s.psi_hat)


def test_free_flow_is_unitary(optical):
    c = cfg(optical, gamma=0.0)
    s = sample_wavepacket(c, SMALL, np.random.default_rng(0))
    a0 = np.abs(s.psi_hat)
    evolve_to(with_stream(c, s), 1e3)
    assert np.max(np.abs(np.abs(s.psi_hat) - a0)) <= 1e-14 * a0.max()
    assert s.log.n_jumps == 0


def test_forced_jump_by_hand(acoustic):
    c = cfg(acoustic, gamma=1.0, mu=2.0, T=0.7)
    s = sample_thermal(c, np.random.default_rng(5))
    evolve_to(s, 3.7)  # no stream: free rotation
    before = s.psi_hat.copy()
    p0 = float(np.mean(before.imag))
    xi = 0.42
    rho = math.sqrt(2 * 2.0 - 1) / 2.0
    delta = rho * xi - p0 / 2.0
    apply_jump(s, xi)
    # the momentum kick at site 0 shifts every Fourier mode by i * delta
    assert np.max(np.abs(s.psi_hat - (before + 1j * delta))) <= 1e-13
    assert s.p0 == pytest.approx(p0 + delta, abs=1e-14)
    assert s.log.n_jumps == 1


def test_full_renewal_at_zero_temperature(acoustic):
    c = cfg(acoustic, mu=1.0, T=0.0)
    s = sample_wavepacket(c, SMALL, np.random.default_rng(0))
    evolve_to(s, 2.0)
    assert abs(s.p0) > 1e-6
    apply_jump(s)
    assert abs(s.p0) <= 1e-15


def test_velocity_flip_conserves_energy(acoustic):
    c = cfg(acoustic, mu=0.5, T=1.0)
    s = sample_thermal(c, np.random.default_rng(2))
    evolve_to(s, 1.1)
    p0, e0 = s.p0, s.total_energy
    apply_jump(s, 5.0)  # rho = 0: the draw is irrelevant
    assert s.p0 == pytest.approx(-p0, abs=1e-14)
    assert s.total_energy == pytest.approx(e0, rel=1e-14)


def test_parseval_and_observables(longer_range):
    c = cfg(longer_range, T=1.0)
    s = sample_thermal(c, np.random.default_rng(3))
    evolve_to(s, 2.5)
    lhs = np.sum(np.abs(s.psi) ** 2)
    rhs = np.sum(np.abs(s.psi_hat) ** 2) / c.N
    assert abs(lhs - rhs) <= 1e-12 * rhs
    ob = observables(s)
    assert ob.site_energy.sum() == pytest.approx(ob.total_energy, rel=1e-12)
    assert ob.spectral_energy.sum() == pytest.approx(ob.total_energy, rel=1e-12)
    assert ob.y[0] == -c.N // 2 and ob.y[-1] == c.N // 2 - 1
    z = observables(zero_state(c))
    assert not np.any(z.site_energy) and not np.any(z.spectral_energy)


def test_jump_times_replayed_by_hand(acoustic):
    # the compiled kernel must agree with applying the logged jumps one at a time
    c = cfg(acoustic, gamma=2.0, mu=1.0, T=0.0)
    s = sample_wavepacket(c, SMALL, np.random.default_rng(4))
    ref = s.copy()
    s.log.keep = True
    evolve_to(with_stream(c, s), 40.0)
    assert s.log.n_jumps > 20
    for t in s.log.times:
        evolve_to(ref, t)
        apply_jump(ref, 0.0)
    evolve_to(ref, 40.0)
    assert np.max(np.abs(s.psi_hat - ref.psi_hat)) <= 1e-10
    assert np.allclose(s.log.p0_after, 0.0, atol=1e-12)


def test_reference_kernel_agrees(optical):
    c = cfg(optical, gamma=1.0, mu=1.5, T=0.5)
    a = with_stream(c, sample_thermal(c, realization_rng(1, 0, 0)))
    b = a.copy()
    b.stream = JumpStream(realization_rng(c.seed, 0, 1), c.rate)
    evolve_to(a, 500.0)
    evolve_to(b, 500.0, reference=True)
    assert a.log.n_jumps == b.log.n_jumps > 100
    assert np.max(np.abs(a.psi_hat - b.psi_hat)) <= 1e-9 * np.max(np.abs(b.psi_hat))


def test_evolve_backwards_rejected(acoustic):
    s = zero_state(cfg(acoustic))
    evolve_to(s, 1.0)
    with pytest.raises(ValidationError):
        evolve_to(s, 0.5)


def test_poisson_jump_count(acoustic):
    gamma, mu, t = 1.25, 2.0, 2.0
    c = ChainConfig(64, ThermostatParams(gamma, mu, 1.0), acoustic, seed=11, t_end=t)
    summ = run_ensemble(c, 10_000, EnsemblePlan(initial="zero", output_times=(t,), chunk=1000))
    n = summ.per_trajectory["n_jumps"]
    lam = gamma * mu * t
    assert abs(n.mean() - lam) <= 3 * math.sqrt(lam / len(n))
    assert n.var(ddof=1) == pytest.approx(lam, rel=0.05)


def test_energy_grows_from_zero(acoustic):
    c = ChainConfig(64, ThermostatParams(1.0, 1.0, 1.0), acoustic, seed=2)
    summ = run_ensemble(c, 200, EnsemblePlan(initial="zero", output_times=(1.0, 5.0, 20.0)))
    means = [s.scalars["energy"].mean() for s in summ.snapshots]
    assert 0 < means[0] < means[1] < means[2]


def small_plan():
    return EnsemblePlan(initial="thermal", output_times=(2.0, 7.5), chunk=4, profiles=True)


def test_single_realization_matches_ensemble(acoustic):
    c = cfg(acoustic, T=1.0)
    summ = run_ensemble(c, 1, small_plan())
    _, scal, vecs = run_trajectory(c, small_plan(), 0)
    for ti, snap in enumerate(summ.snapshots):
        for key, val in scal[ti].items():
            assert snap.scalars[key][0] == val
        assert np.array_equal(snap.vector_mean["site"], vecs[ti]["site"])


def test_workers_do_not_change_results(acoustic):
    c = cfg(acoustic, T=1.0)
    a = run_ensemble(c, 24, small_plan(), workers=1)
    b = run_ensemble(c, 24, small_plan(), workers=3)
    for key in a.per_trajectory:
        assert np.array_equal(a.per_trajectory[key], b.per_trajectory[key])
    for sa, sb in zip(a.snapshots, b.snapshots):
        for key in sa.vector_mean:
            assert np.array_equal(sa.vector_mean[key], sb.vector_mean[key])
            assert np.array_equal(sa.vector_se[key], sb.vector_se[key])


def test_horizon_check(acoustic):
    c = cfg(acoustic, N=1024)
    spec = WavePacketSpec(0.2, -2.0, 1.0, eps=0.05)
    check_horizon(c, spec, 100.0)
    with pytest.raises(WrapAround):
        check_horizon(c, spec, 5000.0)


def test_energy_bookkeeping_from_zero_data(acoustic):
    # E[dE] per jump is (2 mu - 1)/mu^2 (T - p0^2); the summed residual is a martingale
    from thermoscatter.experiments import energy_balance, time_series

    gamma, mu, T = 1.0, 1.0, 1.0
    c = ChainConfig(256, ThermostatParams(gamma, mu, T), acoustic, seed=5)
    times = tuple(np.linspace(2.0, 40.0, 20))
    summ = run_ensemble(c, 2000, EnsemblePlan(initial="zero", output_times=times, chunk=250))
    bal = energy_balance(summ)
    assert abs(bal.z) <= 3.0
    # ensemble energy bound: E E(t) <= E E(0) + (2 - 1/mu) gamma T t
    ts = time_series(summ)
    assert np.all(ts[:, 1] <= (2 - 1 / mu) * gamma * T * ts[:, 0] + 3 * ts[:, 2])


def test_jump_energy_change_is_exact(optical):
    c = cfg(optical, gamma=1.0, mu=3.0, T=2.0)
    s = with_stream(c, sample_thermal(c, np.random.default_rng(9)))
    s.log.keep = True
    evolve_to(s, 1.0)
    for _ in range(50):
        before = s.total_energy
        p0 = s.p0
        apply_jump(s)
        p1 = s.log.p0_after[-1]
        assert s.total_energy - before == pytest.approx(p1 * p1 - p0 * p0, abs=1e-10)
        evolve_to(s, s.time + 0.3)
