import math

import numpy as np
import pytest

from thermoscatter.dispersion import (
    DispersionRelation,
    group_velocity,
    inverse_branch,
    nearest_neighbor,
    tabulated_couplings,
    validate,
)
from thermoscatter.errors import OutOfBand, SingularWavenumber, ValidationError


def test_omega_values(acoustic, optical):
    assert acoustic.omega(0.5) == pytest.approx(2.0, abs=1e-15)
    assert acoustic.omega(0.25) == pytest.approx(math.sqrt(2), abs=1e-15)
    assert optical.omega(0.0) == pytest.approx(1.0, abs=1e-15)


def test_omega_even_and_periodic(longer_range, rng):
    k = rng.uniform(-0.5, 0.5, 500)
    w = longer_range.omega(k)
    assert np.max(np.abs(w - longer_range.omega(-k))) <= 1e-14
    assert np.max(np.abs(w - longer_range.omega(k + 1))) <= 1e-13


def test_group_velocity_acoustic(acoustic):
    # omega(k) = 2 sin(pi k) so omega'(k) / (2 pi) = cos(pi k)
    assert group_velocity(acoustic, 0.25) == pytest.approx(math.cos(math.pi / 4), abs=1e-14)
    assert group_velocity(acoustic, -0.25) == pytest.approx(-math.cos(math.pi / 4), abs=1e-14)


@pytest.mark.parametrize("name", ["acoustic", "optical", "longer_range"])
def test_group_velocity_finite_difference(name, request, rng):
    d = request.getfixturevalue(name)
    k = rng.uniform(0.01, 0.49, 50) * rng.choice([-1, 1], 50)
    h = 1e-6
    fd = (d.omega(k + h) - d.omega(k - h)) / (2 * h) / (2 * math.pi)
    assert np.max(np.abs(group_velocity(d, k) - fd)) <= 1e-8


def test_group_velocity_optical_quarter(optical):
    h = 1e-6
    fd = (optical.omega(0.25 + h) - optical.omega(0.25 - h)) / (2 * h)
    assert float(optical.domega(0.25)) == pytest.approx(fd, abs=1e-8)
    # omega'(1/4) = 2 pi sin(pi/2) / omega(1/4) with omega(1/4) = sqrt(3)
    assert float(optical.domega(0.25)) == pytest.approx(2 * math.pi / math.sqrt(3), abs=1e-12)


def test_group_velocity_singular(acoustic, optical):
    with pytest.raises(SingularWavenumber):
        group_velocity(acoustic, 0.0)
    with pytest.raises(SingularWavenumber):
        group_velocity(optical, 0.5)
    # acoustic: finite one-sided limits at k = 0
    assert group_velocity(acoustic, 0.0, one_sided=1) == pytest.approx(1.0, abs=1e-14)
    assert group_velocity(acoustic, 0.0, one_sided=-1) == pytest.approx(-1.0, abs=1e-14)


def test_acoustic_one_sided_limit_of_inverse_derivative(acoustic):
    # d omega / dk along the + branch tends to a finite positive limit as w -> 0+
    ws = 10.0 ** -np.arange(2, 9)
    slopes = acoustic.domega(inverse_branch(acoustic, ws))
    assert np.all(slopes > 0)
    assert abs(slopes[-1] - 2 * math.pi) <= 1e-6
    assert np.all(np.diff(np.abs(slopes - 2 * math.pi)) <= 0)


def test_inverse_branch_examples(acoustic, optical):
    assert inverse_branch(acoustic, 2.0, +1) == pytest.approx(0.5, abs=1e-15)
    assert inverse_branch(acoustic, math.sqrt(2), -1) == pytest.approx(-0.25, abs=1e-14)
    # bisection oracle on omega
    lo, hi = 0.0, 0.5
    while hi - lo > 1e-13:
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if optical.omega(mid) < 1.7 else (lo, mid)
    assert inverse_branch(optical, 1.7) == pytest.approx(lo, abs=1e-12)


@pytest.mark.parametrize("name", ["acoustic", "optical", "longer_range"])
def test_inverse_roundtrip(name, request, rng):
    d = request.getfixturevalue(name)
    w = rng.uniform(d.omega_min, d.omega_max, 1000)
    k = inverse_branch(d, w, +1)
    assert np.all((k >= 0) & (k <= 0.5))
    assert np.max(np.abs(d.omega(k) - w)) <= 1e-10
    assert np.max(np.abs(inverse_branch(d, w, -1) + k)) == 0.0


def test_inverse_out_of_band(optical):
    with pytest.raises(OutOfBand):
        inverse_branch(optical, 0.5)
    with pytest.raises(OutOfBand):
        inverse_branch(optical, 3.0)


def test_validate_examples():
    r = validate(nearest_neighbor(0.0))
    assert r.valid and r.kind == "acoustic"
    r = validate(nearest_neighbor(0.5))
    assert r.valid and r.kind == "optical"
    assert r.omega_min == pytest.approx(0.5)
    # alpha_hat(0) = 1 + 2(-1 + 0.4) < 0 : negative radicand near k = 0
    bad = DispersionRelation((1.0, -1.0, 0.4))
    r = validate(bad)
    assert not r.valid and r.failures


def test_validate_non_unimodal():
    # strong second-neighbour coupling creates an interior maximum
    r = validate(DispersionRelation((5.0, -0.2, -1.0)))
    assert not r.valid


def test_tabulated_matches_nearest_neighbour(rng):
    # alpha_0 = 2 + m^2, alpha_1 = -1 is the nearest-neighbour chain
    t = tabulated_couplings([2.0 + 0.25, -1.0])
    d = nearest_neighbor(0.5)
    k = rng.uniform(-0.5, 0.5, 200)
    assert np.max(np.abs(t.omega(k) - d.omega(k))) <= 1e-14


def test_tabulated_symmetrises_mapping():
    t = tabulated_couplings({0: 1.0, 1: -0.5, -1: -0.5})
    assert t.is_acoustic
    assert t.couplings == (1.0, -0.5)
    with pytest.raises(ValidationError):
        tabulated_couplings([2.2, -1.0, -0.1], radius=1)
    assert tabulated_couplings([2.0, -1.0, 1e-9], radius=1).couplings == (2.0, -1.0)
    with pytest.raises(ValidationError):
        nearest_neighbor(-1.0)
