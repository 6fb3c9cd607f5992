import math

import numpy as np
import pytest

from thermoscatter.chain import EnsemblePlan, WignerWindow, run_ensemble
from thermoscatter.config import from_dict
from thermoscatter.errors import PacketNotCleared, ResolutionError, ValidationError
from thermoscatter.experiments import build_setup
from thermoscatter.wigner import (
    empirical_wigner,
    fraction_bands,
    interface_fractions,
    per_trajectory_fractions,
    scattered_spectrum,
    validate_window,
)


def setup_for(**sections):
    base = {
        "grid": {"N": 1024},
        "packet": {"k0": 0.2, "x0": -8.0, "sigma": 1.0, "eps": 0.05},
        "ensemble": {"M": 64, "chunk": 16},
        "wigner": {"enabled": False},
    }
    for name, vals in sections.items():
        base.setdefault(name, {}).update(vals)
    return build_setup(from_dict(base).validate())


def run(setup, M):
    return run_ensemble(setup.config, M, setup.plan)


def test_free_packet_mass_in_cell_block():
    s = setup_for(
        grid={"N": 2048},
        packet={"x0": -6.0, "sigma": 1.5, "eps": 0.02},
        thermostat={"gamma": 0.0},
        ensemble={"t_end": 12.0},
        wigner={"enabled": True, "std_sites": 8.0, "hop_sites": 4},
    )
    summ = run(s, 4)
    grid = empirical_wigner(summ)
    spec = s.spec
    v0 = float(s.config.d.group_velocity(spec.k0))
    xc = spec.x0 + v0 * 12.0
    sx = math.hypot(spec.sigma, s.eps * 8.0)
    sk = math.hypot(spec.spectral_std, 1.0 / (4 * math.pi * 8.0))
    X, K = np.meshgrid(grid.x_grid, grid.k_grid, indexing="ij")
    block = (np.abs(X - xc) <= 3 * sx) & (np.abs(K - spec.k0) <= 3 * sk)
    in_block = grid.values[block].sum() * grid.dx * grid.dk
    assert in_block >= 0.95 * grid.mass
    # the spectrogram density carries eps/2 of the packet energy per unit length
    assert grid.mass == pytest.approx(0.5 * s.eps * spec.amplitude**2, rel=1e-3)


def test_thermal_density_is_flat():
    s = setup_for(
        ensemble={"initial": "thermal", "t_end": 2.0, "M": 64},
        thermostat={"T": 1.0},
        wigner={"enabled": True, "std_sites": 8.0, "hop_sites": 16},
    )
    summ = run(s, 256)
    grid = empirical_wigner(summ, eps=s.eps, feature_scale=math.inf)
    # W = T in every cell; neighbouring cells are correlated, so only bulk checks
    assert abs(grid.values.mean() - 1.0) <= 0.01
    assert np.max(np.abs(grid.values.mean(axis=0) - 1.0)) <= 0.05
    assert np.max(np.abs(grid.values - 1.0) / grid.std_err) <= 6.0


def test_zero_state_gives_zero_grid():
    s = setup_for(
        ensemble={"initial": "zero", "t_end": 1.0},
        thermostat={"gamma": 1.0, "T": 0.0},
        wigner={"enabled": True, "std_sites": 8.0},
    )
    grid = empirical_wigner(run(s, 2), eps=s.eps, feature_scale=math.inf)
    assert not np.any(grid.values)
    assert grid.mass == 0.0


def test_k_integral_is_window_averaged_site_energy():
    s = setup_for(
        ensemble={"initial": "thermal", "t_end": 3.0, "profiles": True},
        thermostat={"T": 1.0},
        wigner={"enabled": True, "std_sites": 6.0, "hop_sites": 5},
    )
    summ = run(s, 1)
    grid = empirical_wigner(summ, eps=s.eps, feature_scale=math.inf)
    win = s.plan.wigner
    site = summ.final.vector_mean["site"]  # centred: index 0 is y = -N/2
    N = s.config.N
    g2 = win.taper() ** 2
    offs = np.arange(win.length) - win.length // 2
    expected = np.array([0.5 * np.sum(site[(c + offs + N // 2) % N] * g2) for c in win.centers])
    got = grid.k_integrated()
    assert np.max(np.abs(got - expected)) <= 1e-10 * np.max(expected)


def test_window_validation():
    validate_window(WignerWindow(8.0, 8, 0, 0), eps=0.01, feature_scale=1.0)
    with pytest.raises(ResolutionError):
        validate_window(WignerWindow(1.0, 1, 0, 0), eps=0.01)
    with pytest.raises(ResolutionError):
        validate_window(WignerWindow(64.0, 8, 0, 0), eps=0.05, feature_scale=1.0)
    with pytest.raises(ResolutionError):
        validate_window(WignerWindow(8.0, 40, 0, 0), eps=0.01)


def test_bands_layout():
    s = setup_for()
    bands = {b.name: b for b in fraction_bands(s.config, s.spec)}
    assert set(bands) == {"fwd", "fwd_lo", "fwd_hi", "bwd", "bwd_lo", "bwd_hi"}
    assert bands["fwd"].kmin < 0.2 < bands["fwd"].kmax
    assert bands["fwd_lo"].kmax < bands["fwd"].kmin and bands["fwd"].kmax < bands["fwd_hi"].kmin
    assert bands["bwd"].kmin < -0.2 < bands["bwd"].kmax


def test_transparent_interface():
    s = setup_for(thermostat={"gamma": 0.0})
    rep = interface_fractions(run(s, 8))
    assert rep.transmitted == pytest.approx(1.0, abs=1e-6)
    assert abs(rep.reflected) <= 1e-6 and abs(rep.scattered) <= 1e-6
    assert abs(rep.absorbed) <= 1e-14


def test_fractions_add_up_per_realization():
    s = setup_for()
    summ = run(s, 32)
    tr, rf, sc, ab, *_ = per_trajectory_fractions(summ)
    assert np.max(np.abs(tr + rf + sc + ab - 1.0)) <= 1e-12
    rep = interface_fractions(summ)
    assert rep.sum_se <= 1e-13
    assert rep.absorbed > 0.1 and rep.reflected > 0.05


def test_velocity_flip_absorbs_nothing():
    s = setup_for(thermostat={"mu": 0.5})
    summ = run(s, 32)
    rep = interface_fractions(summ)
    assert abs(rep.absorbed) <= 1e-10
    E0 = summ.per_trajectory["energy0"]
    drift = np.abs(summ.final.scalars["energy"] - E0) / E0
    assert np.max(drift) <= 1e-10
    assert summ.per_trajectory["n_jumps"].sum() > 0


def test_mirrored_packet_swaps_sides():
    a = interface_fractions(run(setup_for(), 32))
    b = interface_fractions(run(setup_for(packet={"k0": -0.2, "x0": 8.0}), 32))
    assert np.allclose(a.values(), b.values(), atol=1e-7)


def test_packet_moving_away_rejected():
    s = setup_for(packet={"k0": -0.2, "x0": -8.0}, ensemble={"t_end": 2.0})
    with pytest.raises(ValidationError):
        per_trajectory_fractions(run(s, 2))


def test_packet_not_cleared():
    s = setup_for(ensemble={"t_end": 7.0})
    with pytest.raises(PacketNotCleared):
        interface_fractions(run(s, 4))


def test_fractions_need_zero_temperature():
    s = setup_for(thermostat={"T": 0.5})
    with pytest.raises(ValidationError):
        interface_fractions(run(s, 2))


def test_spectrum_vanishes_without_coupling():
    rep = scattered_spectrum(run(setup_for(thermostat={"gamma": 0.0}), 4))
    assert rep.total <= 1e-8
    assert len(rep.energy) == 20 and rep.edges[0] == -0.5 and rep.edges[-1] == 0.5


def test_spectrum_total_matches_scattered_fraction():
    summ = run(setup_for(thermostat={"mu": 0.5}), 32)
    rep = scattered_spectrum(summ)
    fr = interface_fractions(summ)
    # out-of-band energy plus the background removed from the two main bands is the
    # scattered fraction, up to in-band energy still on the wrong side of the interface
    bg = (fr.raw_transmitted - fr.transmitted) + (fr.raw_reflected - fr.reflected)
    assert abs(rep.total + bg - fr.scattered) <= 1e-3
    assert np.all(rep.energy >= 0)


def test_fractions_need_bands():
    s = setup_for()
    plan = EnsemblePlan(initial="packet", packet=s.spec, output_times=s.plan.output_times)
    with pytest.raises(ValidationError):
        per_trajectory_fractions(run_ensemble(s.config, 2, plan))


def test_velocity_flip_spectrum_matches_kernel():
    from thermoscatter.experiments import spectrum_theory, theory_fractions
    from thermoscatter.scattering import ScatteringTheory

    s = setup_for(thermostat={"mu": 0.5})
    summ = run(s, 64)
    th = ScatteringTheory(s.config.d, s.config.params)
    rep = scattered_spectrum(summ)
    expected = spectrum_theory(th, s)
    assert abs(rep.total - expected.sum()) <= 3 * rep.total_se
    # at mu = 1/2 all scattered energy is re-emitted: 1 - p_+ - p_- = g(k0)
    fr = interface_fractions(summ)
    tf = theory_fractions(th, s.spec.k0)
    assert tf[2] == pytest.approx(1 - tf[0] - tf[1], abs=1e-12)
    assert abs(fr.scattered - tf[2]) <= 3 * fr.scattered_se
