"""Closed-form macroscopic energy density with an interface thermostat at ``x = 0``.

A phonon of wavenumber ``k`` moves with the group velocity ``v(k)``.  Off the sonic
interval ``[[0, v(k) t]]`` the density is the free transport of the initial data.
On it the density is made of transmitted, reflected, scattered and
thermostat-produced phonons:

    W = p_+(k) W0(x - v t, k) + p_-(k) W0(-x + v t, -k)
        + g(k) int W0(v(l)/v(k) (x - v t), l) p_sc(l) dl + p_abs g(k) T.

The integral over ``l`` uses fixed composite Gauss-Legendre nodes graded toward
``l = 0`` and ``l = +-1/2``, so all coefficient values are computed once per solution.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np

from .dispersion import DispersionRelation, wrap
from .errors import SingularWavenumber, ValidationError
from .scattering import ScatteringTheory, ThermostatParams

__all__ = [
    "InitialWigner",
    "MacroSolution",
    "graded_nodes",
    "evaluate_W",
    "boundary_residual",
    "transport_residual",
    "global_balance",
    "slice_x",
    "slice_k",
]


def graded_nodes(breaks, order=16, levels=12, ratio=0.25):
    """Composite Gauss-Legendre rule on the intervals between ``breaks``.

    Each interval is split in half and each half is refined geometrically
    toward its outer end point (``levels`` panels shrinking by ``ratio``).
    """
    xg, wg = np.polynomial.legendre.leggauss(order)
    nodes, weights = [], []
    breaks = np.asarray(sorted(breaks), dtype=float)
    for a, b in zip(breaks[:-1], breaks[1:]):
        h = 0.5 * (b - a)
        dist = np.concatenate(([0.0], h * ratio ** np.arange(levels - 1, -1, -1)))
        panels = [(a + dist[i], a + dist[i + 1]) for i in range(levels)]
        panels += [(b - dist[i + 1], b - dist[i]) for i in range(levels)]
        for lo, hi in panels:
            c = 0.5 * (lo + hi)
            r = 0.5 * (hi - lo)
            nodes.append(c + r * xg)
            weights.append(r * wg)
    x = np.concatenate(nodes)
    w = np.concatenate(weights)
    order_idx = np.argsort(x, kind="stable")
    return x[order_idx], w[order_idx]


@dataclass(frozen=True)
class InitialWigner:
    """Non-negative initial density ``W0(x, k)`` given as a vectorized callable."""

    fn: Callable
    mass: float = math.nan
    label: str = "custom"
    constant_value: float | None = None

    def __call__(self, x, k):
        return self.fn(np.asarray(x, dtype=float), wrap(np.asarray(k, dtype=float)))

    @classmethod
    def constant(cls, T):
        if T < 0:
            raise ValidationError("constant initial density must be non-negative")
        return cls(lambda x, k: np.full(np.broadcast(x, k).shape, float(T)), math.inf, "constant", float(T))

    @classmethod
    def gaussian_packet(cls, x0, sigma_x, k0, sigma_k, mass=1.0):
        """Product of Gaussians in ``x`` and (periodized) ``k`` with total mass ``mass``."""
        if sigma_x <= 0 or sigma_k <= 0 or mass < 0:
            raise ValidationError("packet widths must be positive and mass non-negative")
        images = np.arange(-2, 3)
        norm_x = 1.0 / (math.sqrt(2 * math.pi) * sigma_x)
        norm_k = 1.0 / (math.sqrt(2 * math.pi) * sigma_k)

        def fn(x, k):
            gx = norm_x * np.exp(-((x - x0) ** 2) / (2 * sigma_x**2))
            dk = np.asarray(k)[..., None] - k0 + images
            gk = norm_k * np.exp(-(dk**2) / (2 * sigma_k**2)).sum(axis=-1)
            return mass * gx * gk

        return cls(fn, float(mass), f"gaussian(x0={x0}, sx={sigma_x}, k0={k0}, sk={sigma_k})")

    @classmethod
    def smooth_bump(cls, x0, sigma_x, amplitude=1.0):
        """``amplitude * exp(-(x-x0)^2/(2 sx^2)) * (1 + cos(2 pi k)/2)``; smooth in both variables."""
        def fn(x, k):
            return amplitude * np.exp(-((x - x0) ** 2) / (2 * sigma_x**2)) * (1 + 0.5 * np.cos(2 * np.pi * k))

        mass = amplitude * math.sqrt(2 * math.pi) * sigma_x
        return cls(fn, mass, f"bump(x0={x0}, sx={sigma_x})")


class MacroSolution:
    """Evaluator of the limit density for given coefficients, initial data and temperature."""

    def __init__(self, theory: ScatteringTheory, W0: InitialWigner, T=None, delta_excl=1e-3,
                 order=16, levels=12, extra_breaks=()):
        self.theory = theory
        self.W0 = W0
        self.T = theory.params.T if T is None else float(T)
        self.delta_excl = delta_excl
        self.order = order
        self.levels = levels
        # extra quadrature break points, e.g. around the support of a narrow packet in k
        self.extra_breaks = tuple(float(b) for b in extra_breaks)

    @classmethod
    def from_params(cls, d: DispersionRelation, params: ThermostatParams, W0: InitialWigner, **kw):
        return cls(ScatteringTheory(d, params), W0, **kw)

    @property
    def d(self):
        return self.theory.d

    @cached_property
    def nodes(self):
        """Graded nodes on the torus with group velocity and scattering kernel values."""
        brk = {-0.5, 0.0, 0.5}
        for s in self.d.singular_set:
            brk.update({float(s)})
        brk.update(b for b in self.extra_breaks if -0.5 < b < 0.5)
        l, w = graded_nodes(sorted(brk), self.order, self.levels)
        v = self.d.group_velocity(l)
        psc = self.theory.p_sc(l)
        return l, w, v, psc

    @cached_property
    def p_sc_integral_nodes(self):
        l, w, v, psc = self.nodes
        return float(np.sum(w * psc))

    def coefficients(self, k):
        """``(v, p_plus, p_minus, g, production)`` at wavenumbers ``k``."""
        k = np.asarray(k, dtype=float)
        uk, inv = np.unique(k, return_inverse=True)
        tab = self.theory.table(uk)
        v = self.d.group_velocity(uk)
        prod = self.theory.p_abs * tab["g_weight"] * self.T
        cols = [v, tab["p_plus"], tab["p_minus"], tab["g_weight"], prod]
        return tuple(c[inv].reshape(k.shape) for c in cols)

    def scattered_source(self, a):
        """``int W0(v(l) * a, l) p_sc(l) dl`` for an array of scaled times ``a``."""
        l, w, v, psc = self.nodes
        a = np.asarray(a, dtype=float)
        vals = self.W0(a[..., None] * v, l)
        return vals @ (w * psc)


def _in_sonic(x, vt, side):
    """Membership of ``x`` in the closed interval between 0 and ``vt``; at ``x = 0`` a
    nonzero ``side`` selects the one-sided limit ``x -> 0+`` (``side=+1``) or ``0-``."""
    x = np.asarray(x, dtype=float)
    lo = np.minimum(0.0, vt)
    hi = np.maximum(0.0, vt)
    inside = (x >= lo) & (x <= hi)
    at0 = x == 0.0
    if np.any(at0) and np.any(np.asarray(side) != 0):
        one_sided = np.where(np.asarray(side) > 0, vt > 0, vt < 0)
        inside = np.where(at0 & (np.asarray(side) != 0), one_sided, inside)
    return inside


def evaluate_W(sol: MacroSolution, t, x, k, side=0, check=True):
    """Limit density ``W(t, x, k)``; arrays broadcast.

    ``side=+1/-1`` returns the one-sided limit at ``x = 0`` from the right/left.
    """
    if t < 0:
        raise ValidationError("t must be non-negative")
    x, k = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(wrap(k), dtype=float))
    if check and np.any(sol.d.distance_to_singular(k) < sol.delta_excl):
        raise SingularWavenumber("wavenumber inside the exclusion band")
    v, pp, pm, g, prod = sol.coefficients(k)
    vt = v * t
    inside = _in_sonic(x, vt, side)
    free = sol.W0(x - vt, k)
    if not np.any(inside):
        return free
    with np.errstate(divide="ignore", invalid="ignore"):
        a = np.where(inside, (x - vt) / np.where(v != 0, v, 1.0), 0.0)
    refl = sol.W0(-x + vt, -k)
    scat = sol.scattered_source(a)
    on = pp * free + pm * refl + g * scat + prod
    return np.where(inside, on, free)


def boundary_residual(sol: MacroSolution, t, k):
    """Absolute mismatch of the interface condition at ``x = 0`` for wavenumber ``k``.

    For ``k > 0`` the outgoing density ``W(t, 0+, k)`` is compared with
    ``p_+ W(t,0-,k) + p_- W(t,0+,-k) + p_abs g T + g int_{l>0} [W(t,0-,l) + W(t,0+,-l)] p_sc(l) dl``;
    for ``k < 0`` the mirrored condition with the sides exchanged is used.
    """
    k = float(wrap(k))
    if sol.d.distance_to_singular(k) < sol.delta_excl:
        raise SingularWavenumber("wavenumber inside the exclusion band")
    s = 1.0 if k > 0 else -1.0
    out = float(evaluate_W(sol, t, 0.0, k, side=s))
    same = float(evaluate_W(sol, t, 0.0, k, side=-s))
    mirror = float(evaluate_W(sol, t, 0.0, -k, side=s))
    v, pp, pm, g, prod = (float(np.asarray(c)) for c in sol.coefficients(k))
    l, w, vl, psc = sol.nodes
    half = (l > 0) if s > 0 else (l < 0)
    lh, wh, ph = l[half], w[half], psc[half]
    # incoming densities at the nodes, as one-sided limits of the solution
    inc_same = evaluate_W(sol, t, np.zeros_like(lh), lh, side=-s, check=False)
    inc_mirror = evaluate_W(sol, t, np.zeros_like(lh), -lh, side=s, check=False)
    rhs = pp * same + pm * mirror + prod + g * float(np.sum(wh * ph * (inc_same + inc_mirror)))
    return abs(out - rhs)


def transport_residual(sol: MacroSolution, t, x, k, h=1e-4):
    """Centred-difference value of ``dW/dt + v(k) dW/dx`` at a point off the interface and fronts."""
    k = float(wrap(k))
    v = float(sol.d.group_velocity(k))
    guard = 10 * h * max(1.0, abs(v))
    if abs(x) < guard or abs(x - v * t) < guard:
        raise ValidationError("point too close to the interface or to a front")
    if t < h:
        raise ValidationError("t must exceed the difference step")
    W = lambda tt, xx: float(evaluate_W(sol, tt, xx, k))
    dt = (W(t + h, x) - W(t - h, x)) / (2 * h)
    dx = (W(t, x + h) - W(t, x - h)) / (2 * h)
    return abs(dt + v * dx)


def _x_mass(sol, t, k_nodes, k_weights, x_lo, x_hi, order=16, panels=4):
    """``int dk int dx W(t,x,k)`` with x-panels split at the interface and the front."""
    xg, wg = np.polynomial.legendre.leggauss(order)
    total = 0.0
    v = sol.d.group_velocity(k_nodes)
    for kk, wk, vk in zip(k_nodes, k_weights, v):
        brk = sorted({x_lo, x_hi, 0.0, float(np.clip(vk * t, x_lo, x_hi))})
        xs, ws = [], []
        for a, b in zip(brk[:-1], brk[1:]):
            if b <= a:
                continue
            edges = np.linspace(a, b, panels + 1)
            for lo, hi in zip(edges[:-1], edges[1:]):
                xs.append(0.5 * (lo + hi) + 0.5 * (hi - lo) * xg)
                ws.append(0.5 * (hi - lo) * wg)
        xs = np.concatenate(xs)
        ws = np.concatenate(ws)
        vals = evaluate_W(sol, t, xs, np.full_like(xs, kk), check=False)
        total += wk * float(np.sum(ws * vals))
    return total


def global_balance(sol: MacroSolution, t, x_lo, x_hi, order=16, k_order=8, k_levels=6):
    """Compare ``mass(t)`` with ``mass(0)`` minus the absorbed energy (``T = 0``).

    The absorbed energy is ``int_0^t ds int p_abs g(l) |v(l)| W0(-v(l) s, l) dl``.
    Returns ``(mass_t, mass_0 - absorbed, relative mismatch)``.
    """
    if sol.T != 0:
        raise ValidationError("global balance is stated for T = 0")
    brk = sorted({-0.5, 0.0, 0.5, *map(float, sol.d.singular_set)})
    l, w = graded_nodes(brk, k_order, k_levels)
    vl = sol.d.group_velocity(l)
    mass_t = _x_mass(sol, t, l, w, x_lo, x_hi, order)
    mass_0 = _x_mass(sol, 0.0, l, w, x_lo, x_hi, order)
    g = sol.theory.g_weight(l)
    sg, swt = np.polynomial.legendre.leggauss(order)
    s = 0.5 * t * (sg + 1.0)
    ws = 0.5 * t * swt
    inc = sol.W0(-np.outer(s, vl), l[None, :])
    absorbed = sol.theory.p_abs * float(ws @ inc @ (w * g * np.abs(vl)))
    rhs = mass_0 - absorbed
    return mass_t, rhs, abs(mass_t - rhs) / max(abs(mass_0), 1e-300)


def slice_x(sol: MacroSolution, t, x, k0):
    """``W(t, x, k0)`` along ``x`` (CSV-ready pair of columns)."""
    x = np.asarray(x, dtype=float)
    return np.column_stack([x, evaluate_W(sol, t, x, np.full_like(x, k0))])


def slice_k(sol: MacroSolution, t, x0, k):
    k = np.asarray(k, dtype=float)
    k = k[sol.d.distance_to_singular(k) >= sol.delta_excl]
    return np.column_stack([k, evaluate_W(sol, t, np.full_like(k, x0), k)])


def residual_report(sol: MacroSolution, path, **values):
    with open(path, "w") as fh:
        json.dump({k: float(v) for k, v in values.items()}, fh, indent=2, sort_keys=True)
