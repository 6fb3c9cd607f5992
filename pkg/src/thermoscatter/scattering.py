"""Interface coefficients of the Poissonian thermostat.

The central object is the resolvent of the dispersion,

    R(s) = int_T dl / (alpha_hat(l) - s),

from which the Laplace transform of ``J(t) = int_T cos(omega(k) t) dk`` follows
as ``J~(lam) = lam * R(-lam**2)``.  ``R`` is evaluated by the periodic
trapezoidal rule after subtracting the poles of the integrand that lie close to
the real axis with ``pi * cot(pi * (l - z))`` kernels.  The subtracted kernels
have known period averages (``+-i pi`` off the axis, 0 as a principal value),
so the remainder is analytic in a fixed strip and the rule converges
geometrically, including on the imaginary axis where the poles are real.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import integrate

from .dispersion import DispersionRelation, wrap
from .errors import DomainError, NearSingularBand, QuadratureFailure, ValidationError

__all__ = [
    "ThermostatParams",
    "ScatteringCoefficients",
    "IdentityReport",
    "ScatteringTheory",
    "resolvent",
    "J_time",
    "J_laplace",
    "g_tilde",
    "g_boundary",
    "J_boundary",
    "J_boundary_split",
    "nu",
    "gamma_constant",
    "gamma_via_identity",
    "interface_coefficients",
    "identity_suite",
    "default_k_grid",
    "DEFAULT_TOLERANCES",
]

# poles closer than this to the real axis are subtracted analytically
_SUBTRACT_STRIP = 0.1
_QUAD_LIMIT = 400

DEFAULT_TOLERANCES = {
    "boundary_real_part": 1e-6,
    "unitarity": 1e-8,
    "gamma_identity": 1e-6,
    "absorption_scattering_sum": 1e-8,
    "balance": 1e-8,
    "flux_symmetry": 1e-10,
}


@dataclass(frozen=True)
class ThermostatParams:
    """Coupling ``gamma``, interpolation parameter ``mu`` and temperature ``T``."""

    gamma: float
    mu: float = 1.0
    T: float = 0.0

    def __post_init__(self):
        if not self.gamma >= 0:
            raise ValidationError(f"gamma must be >= 0, got {self.gamma}")
        if not self.mu >= 0.5:
            raise ValidationError(f"mu must be >= 1/2, got {self.mu}")
        if not self.T >= 0:
            raise ValidationError(f"T must be >= 0, got {self.T}")

    @property
    def rho(self):
        return math.sqrt(2 * self.mu - 1) / self.mu

    @property
    def jump_rate(self):
        return self.gamma * self.mu


# ---------------------------------------------------------------------------
# resolvent
# ---------------------------------------------------------------------------
def _grid_offset(positions):
    """Node offset in [0,1) placed midway in the widest gap between ``positions``."""
    if len(positions) == 0:
        return 0.5
    u = np.sort(np.mod(positions, 1.0))
    gaps = np.diff(np.concatenate((u, [u[0] + 1.0])))
    i = int(np.argmax(gaps))
    return float((u[i] + 0.5 * gaps[i]) % 1.0)


def resolvent(d: DispersionRelation, s, side=0, real_root=None):
    """``int_T dl / (alpha_hat(l) - s)``.

    ``side`` gives the sign of the infinitesimal imaginary part of ``s`` when
    ``s`` is real and inside the band (the boundary-value convention).  If the
    real root ``k`` is known it may be passed as ``real_root``; ``s`` is then
    ignored and taken to be ``alpha_hat(k)``.
    """
    if real_root is not None:
        # the argument is alpha_hat(real_root) exactly, even where s has rounded
        # onto a band edge
        k = float(real_root)
        s = complex(float(d.alpha_hat(k)))
        in_band = True
    else:
        s = complex(s)
        in_band = s.imag == 0.0 and d.omega_min**2 < s.real < d.omega_max**2
    z = d.roots(s)
    if in_band:
        if side == 0:
            raise DomainError("boundary side required for a real in-band argument")
        i_real = int(np.argmin(np.abs(z.imag)))
        if real_root is None:
            k = float(np.clip(z[i_real].real, 0, 0.5))
        z = z.astype(complex)
        z[i_real] = k
    poles, res, signs = [], [], []
    far = []
    for zi in z:
        for zz in (zi, -zi):
            if abs(zz.imag) < _SUBTRACT_STRIP:
                da = complex(d.dalpha_hat(zz))
                if in_band and zz.imag == 0.0:
                    sg = side * np.sign(da.real)
                elif abs(zz.imag) > 1e-15:
                    sg = np.sign(zz.imag)
                else:
                    sg = np.sign(s.imag) * np.sign(da.real) if s.imag != 0 else side * np.sign(da.real)
                    if sg == 0:
                        raise DomainError("cannot resolve side of a real pole")
                poles.append(zz)
                res.append(1.0 / da)
                signs.append(sg)
            else:
                far.append(abs(zz.imag))
    dmin = min(far) if far else 1.0
    n = 64
    while n < 8.0 / dmin:
        n *= 2
    near_real = [p.real for p in poles if abs(p.imag) < 2.0 / n]
    theta = _grid_offset(np.array(near_real) * n)
    l = (np.arange(n) + theta) / n
    if in_band:
        denom = d.alpha_hat_diff(l, k) + (float(d.alpha_hat(k)) - s.real) + 0j
    else:
        denom = d.alpha_hat(l) - s
    total = np.mean(1.0 / denom)
    for p, r, sg in zip(poles, res, signs):
        total += r * (1j * np.pi * sg - np.pi / np.tan(np.pi * (theta - n * p)))
    return complex(total)


# ---------------------------------------------------------------------------
# J and its transforms
# ---------------------------------------------------------------------------
def J_time(d: DispersionRelation, t):
    """``J(t) = int_T cos(omega(k) t) dk`` by the periodic trapezoidal rule.

    The integrand is an entire function of ``alpha_hat`` so the rule converges
    geometrically once the grid resolves the phase ``omega(k) t``.
    """
    t = float(t)
    if t < 0:
        raise DomainError("t must be non-negative")
    n = 64
    while n < 4.0 * d.omega_max * t + 64:
        n *= 2
    prev = None
    for _ in range(6):
        k = (np.arange(n) + 0.5) / n
        val = float(np.mean(np.cos(d.omega(k) * t)))
        if prev is not None and abs(val - prev) < 1e-15:
            return val
        prev, n = val, 2 * n
    return val


def _laplace(d, lam):
    lam = complex(lam)
    if lam.real > 0:
        return lam * resolvent(d, -lam * lam)
    return _boundary(d, lam.imag)


def J_laplace(d: DispersionRelation, lam):
    """Laplace transform ``J~(lam) = int_T lam / (lam**2 + omega**2) dk``."""
    lam = complex(lam)
    if not lam.real > 0:
        raise DomainError("J_laplace needs Re(lambda) > 0; use J_boundary on the axis")
    return lam * resolvent(d, -lam * lam)


def g_tilde(d: DispersionRelation, gamma, lam):
    """``g~(lam) = 1 / (1 + gamma J~(lam))``."""
    if gamma == 0:
        return 1.0 + 0j
    return 1.0 / (1.0 + gamma * J_laplace(d, lam))


def g_boundary(d: DispersionRelation, gamma, beta, delta_excl=1e-3):
    """``lim_{eps->0+} g~(eps + i beta)``."""
    return 1.0 / (1.0 + gamma * J_boundary(d, beta, delta_excl))


def _boundary_at_k(d, k):
    """Boundary value ``lim J~(eps + i omega(k))`` for ``k`` in (0, 1/2)."""
    beta = float(d.omega(k))
    re = math.pi / abs(float(d.domega(k)))
    pv = resolvent(d, None, side=-1, real_root=k).real
    return complex(re, beta * pv)


def _boundary(d, beta):
    """``lim_{eps->0+} J~(eps + i beta)`` for real ``beta`` (no band checks)."""
    beta = float(beta)
    if beta == 0.0:
        if d.is_acoustic:
            return complex(math.pi / float(d.domega(0.0, side=1)), 0.0)
        return 0j
    b = abs(beta)
    if d.omega_min < b < d.omega_max:
        val = _boundary_at_k(d, float(d.inverse_branch(b)))
    else:
        val = complex(0.0, b * _resolvent_outside(d, b * b))
    return val if beta > 0 else val.conjugate()


def _resolvent_outside(d, s):
    """Real resolvent for real ``s`` outside the band (rounding-safe at the edges)."""
    try:
        return resolvent(d, s).real
    except DomainError:
        # conjugate roots merged at an edge: fall back to the singular part
        hi, lo = d.omega_max**2, d.omega_min**2
        if abs(s - hi) <= abs(s - lo):
            return _edge_resolvent(d, +1, math.sqrt(max(s - hi, 1e-300)))
        return _edge_resolvent(d, -1, math.sqrt(max(lo - s, 1e-300)))


_EDGE_U = 1e-3


def _edge_constants(d, edge):
    """``(c, C0, C1, C2)`` with ``R = -+ pi / (sqrt(c) u) + C0 + C1 u + C2 u^2 + O(u^3)`` near an edge.

    The regular part is fitted through three points far enough from the edge for
    ``s`` to carry full precision.
    """
    cache = d.__dict__.setdefault("_edge_cache", {})  # frozen dataclass: bypass setattr
    if edge in cache:
        return cache[edge]
    k_edge = 0.5 if edge > 0 else 0.0
    c = abs(float(d.d2alpha_hat(k_edge))) / 2
    sgn = -1.0 if edge > 0 else 1.0

    def g(u):
        s = d.omega_max**2 + u * u if edge > 0 else d.omega_min**2 - u * u
        return resolvent(d, s).real - sgn * math.pi / (math.sqrt(c) * u)

    h = 2 * _EDGE_U
    coef = np.polyfit([h, 2 * h, 3 * h], [g(h), g(2 * h), g(3 * h)], 2)
    cache[edge] = (c, coef[2], coef[1], coef[0])
    return cache[edge]


def _edge_resolvent(d, edge, u):
    """Resolvent at ``s = omega_max^2 + u^2`` (``edge=+1``) or ``omega_min^2 - u^2`` (``-1``).

    Taking the distance ``u`` rather than ``s`` avoids losing ``u^2`` to rounding.
    """
    if u >= _EDGE_U:
        s = d.omega_max**2 + u * u if edge > 0 else d.omega_min**2 - u * u
        return resolvent(d, s).real
    c, C0, C1, C2 = _edge_constants(d, edge)
    sgn = -1.0 if edge > 0 else 1.0
    return sgn * math.pi / (math.sqrt(c) * u) + C0 + u * (C1 + u * C2)


def J_boundary(d: DispersionRelation, beta, delta_excl=1e-3):
    """Boundary value of ``J~`` on the imaginary axis at ``i beta``.

    Inside the band the real part is ``pi / omega'(k)`` with ``omega(k) = |beta|``
    and the imaginary part is ``beta`` times the principal value of the
    resolvent; outside the band the value is purely imaginary.
    """
    b = abs(float(beta))
    if min(abs(b - d.omega_min), abs(b - d.omega_max)) < delta_excl:
        raise NearSingularBand(f"|beta| = {b} within {delta_excl} of a band edge")
    return _boundary(d, beta)


def J_boundary_split(d: DispersionRelation, beta):
    """Boundary value assembled from the half-torus pieces ``(G, H)``.

    ``J~ = G + H`` with ``G(lam) = int_0^{1/2} dl / (lam + i omega)`` and
    ``H(lam) = int_0^{1/2} dl / (lam - i omega)``.  For ``beta = omega(k)`` in
    the band, ``H`` splits into the jump term ``pi / omega'(k)``, a logarithm
    and an integral with a removable singularity at ``l = k``.  Independent of
    :func:`resolvent`; used as a cross-check away from the band edges.
    """
    b = float(beta)
    if not d.omega_min < b < d.omega_max:
        raise NearSingularBand("split formula is only implemented inside the band")
    k = float(d.inverse_branch(b))
    dwk = float(d.domega(k))
    opts = dict(epsabs=1e-13, epsrel=1e-13, limit=_QUAD_LIMIT)
    G = -1j * integrate.quad(lambda l: 1.0 / (b + float(d.omega(l))), 0.0, 0.5, **opts)[0]

    def reg(l):
        dw = float(d.domega(l))
        return (dwk - dw) / (dwk * float(d.stable_omega_diff(k, l)))

    I = integrate.quad(reg, 0.0, 0.5, points=[k], **opts)[0]
    lo, hi = d.omega_min, d.omega_max
    H = (math.pi + 1j * math.log((hi - b) / (b - lo))) / dwk - 1j * I
    return G, H


def nu(d: DispersionRelation, gamma, k, delta_excl=1e-3):
    """Boundary value ``nu(k) = lim g~(eps + i omega(k))``."""
    k = np.asarray(wrap(k), dtype=float)
    d.check_regular(k, delta_excl)
    flat = np.atleast_1d(k).ravel()
    out = np.array([_nu(d, gamma, kk) for kk in flat])
    return out.reshape(k.shape) if k.ndim else complex(out[0])


def _nu(d, gamma, k):
    if gamma == 0:
        return 1.0 + 0j
    k = abs(float(wrap(k)))
    if k == 0.0:
        return 1.0 / (1.0 + gamma * _boundary(d, d.omega_min)) if d.is_acoustic else 0j
    if k == 0.5:
        return 0j
    return 1.0 / (1.0 + gamma * _boundary_at_k(d, k))


# ---------------------------------------------------------------------------
# the scattering constant Gamma, two independent routes
# ---------------------------------------------------------------------------
def _quad(f, a, b, tol, what, **kw):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, err = integrate.quad(f, a, b, epsabs=tol, epsrel=tol, limit=_QUAD_LIMIT, **kw)
    if not np.isfinite(val) or err > max(100 * tol, 1e-12) * max(1.0, abs(val)):
        raise QuadratureFailure(f"{what}: error estimate {err:.3g} exceeds tolerance")
    return val, err


def gamma_constant(d: DispersionRelation, gamma, tol=1e-12, return_error=False):
    """``Gamma = gamma/(2 pi) int_R |J~ g~ (i beta)|^2 d beta``.

    The integrand is even in ``beta``.  The in-band piece is integrated in the
    wavenumber (``beta = omega(k)``, ``d beta = omega'(k) dk``) which removes the
    square-root endpoint behaviour; the pieces below and above the band are
    integrated in ``beta``, the upper one out to infinity, where
    ``|J~ g~| <= 1 / (beta - omega_max)`` makes the tail integrable.
    """
    if gamma == 0:
        return (0.0, 0.0) if return_error else 0.0

    def F(J):
        return abs(J / (1.0 + gamma * J)) ** 2

    total = err = 0.0

    def add(f, lo, hi, what, points=None):
        nonlocal total, err
        kw = {}
        if points is not None:
            pts = sorted(p for p in points if lo < p < hi)
            if pts:
                kw["points"] = pts
        v, e = _quad(f, lo, hi, tol, what, **kw)
        total += v
        err += e

    # near a band edge |J~| grows like 1/u (u the distance variable below), so
    # |J~ g~|^2 has a peak of width ~gamma; break points keep small gamma resolved
    scales = [gamma * 10.0**j for j in range(-1, 17)]
    if d.omega_min > 0:
        w0 = d.omega_min
        u1 = min(0.5 * w0, 1.0)

        def below(u):
            bb = math.sqrt(max(w0 * w0 - u * u, 0.0))
            return F(1j * bb * _edge_resolvent(d, -1, u)) * u / bb

        add(below, 0.0, u1, "Gamma below band", scales)
        add(lambda b: F(_boundary(d, b)), 0.0, math.sqrt(w0 * w0 - u1 * u1), "Gamma below band")
    k_points = scales + [0.5 - x for x in scales]
    add(lambda k: F(_boundary_at_k(d, k)) * float(d.domega(k)), 0.0, 0.5, "Gamma in band", k_points)
    wm = d.omega_max

    def above(u):
        bb = math.sqrt(wm * wm + u * u)
        return F(1j * bb * _edge_resolvent(d, +1, u)) * u / bb

    add(above, 0.0, 1.0, "Gamma above band", scales)
    add(lambda b: F(_boundary(d, b)), math.sqrt(wm * wm + 1.0), np.inf, "Gamma above band")
    val = gamma / math.pi * total
    return (val, gamma / math.pi * err) if return_error else val


def nu_squared_integral(d: DispersionRelation, gamma, tol=1e-12):
    """``int_T |nu(l)|^2 dl`` by adaptive Gauss-Kronrod on the half torus."""
    if gamma == 0:
        return 1.0
    v, _ = _quad(lambda k: abs(_nu(d, gamma, k)) ** 2, 0.0, 0.5, tol, "int |nu|^2")
    return 2.0 * v


def gamma_via_identity(d: DispersionRelation, gamma, tol=1e-12):
    """``Gamma`` from ``Gamma = 1/2 - 1/2 int_T |nu|^2`` (wavenumber quadrature)."""
    return 0.5 - 0.5 * nu_squared_integral(d, gamma, tol)


# ---------------------------------------------------------------------------
# coefficients
# ---------------------------------------------------------------------------
class ScatteringTheory:
    """Coefficient functions for one dispersion relation and thermostat.

    ``gamma_shift`` perturbs the scattering constant; it exists only to check
    that the identity suite detects an inconsistent constant.
    """

    def __init__(self, d: DispersionRelation, params: ThermostatParams, tol=1e-12, gamma_shift=0.0):
        self.d = d
        self.params = params
        self.tol = tol
        self.gamma_shift = gamma_shift

    @cached_property
    def Gamma(self):
        return gamma_constant(self.d, self.params.gamma, self.tol) + self.gamma_shift

    @cached_property
    def nu2_integral(self):
        return nu_squared_integral(self.d, self.params.gamma, self.tol)

    @property
    def p_abs(self):
        mu = self.params.mu
        return (1.0 - 1.0 / (2 * mu)) / (1.0 - self.Gamma / mu)

    @property
    def p_sc_integral(self):
        return self.nu2_integral / (2.0 * (self.params.mu - self.Gamma))

    def nu(self, k):
        k = np.asarray(k, dtype=float)
        out = np.array([_nu(self.d, self.params.gamma, kk) for kk in np.atleast_1d(k).ravel()])
        return out.reshape(k.shape) if k.ndim else complex(out[0])

    def speed(self, k):
        return np.abs(self.d.group_velocity(k))

    def wp(self, k):
        """Reflection amplitude ``gamma nu / (2 |group velocity|)``."""
        return self.params.gamma * self.nu(k) / (2.0 * self.speed(k))

    def p_plus(self, k):
        return np.abs(1.0 - self.wp(k)) ** 2

    def p_minus(self, k):
        return np.abs(self.wp(k)) ** 2

    def g_weight(self, k):
        return self.params.gamma * np.abs(self.nu(k)) ** 2 / self.speed(k)

    def p_sc(self, k):
        return np.abs(self.nu(k)) ** 2 / (2.0 * (self.params.mu - self.Gamma))

    def table(self, k):
        """All pointwise coefficients at once (one boundary evaluation per k)."""
        k = np.asarray(k, dtype=float)
        n = self.nu(k)
        v = self.speed(k)
        gam = self.params.gamma
        wp = gam * n / (2 * v)
        return {
            "nu": n,
            "p_plus": np.abs(1 - wp) ** 2,
            "p_minus": np.abs(wp) ** 2,
            "g_weight": gam * np.abs(n) ** 2 / v,
            "p_sc": np.abs(n) ** 2 / (2 * (self.params.mu - self.Gamma)),
            "speed": v,
        }


@dataclass
class ScatteringCoefficients:
    k: np.ndarray
    nu: np.ndarray
    Gamma: float
    p_plus: np.ndarray
    p_minus: np.ndarray
    g_weight: np.ndarray
    p_abs: float
    p_sc: np.ndarray
    p_sc_integral: float
    nu2_integral: float
    params: ThermostatParams
    dispersion: dict
    residuals: dict = field(default_factory=dict)
    sensitivity: float = 0.0

    def to_csv(self, path):
        cols = np.column_stack(
            [self.k, self.nu.real, self.nu.imag, self.p_plus, self.p_minus, self.g_weight, self.p_sc]
        )
        header = "k,re_nu,im_nu,p_plus,p_minus,g,p_sc"
        np.savetxt(path, cols, delimiter=",", header=header, comments="", fmt="%.17g")

    def summary(self):
        return {
            "Gamma": self.Gamma,
            "p_abs": self.p_abs,
            "p_sc_integral": self.p_sc_integral,
            "nu2_integral": self.nu2_integral,
            "gamma": self.params.gamma,
            "mu": self.params.mu,
            "T": self.params.T,
            "dispersion": self.dispersion,
            "residuals": self.residuals,
            "gamma_sensitivity": self.sensitivity,
        }

    def to_json(self, path, extra=None):
        payload = self.summary()
        if extra:
            payload.update(extra)
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)


def default_k_grid(d: DispersionRelation, n=401, delta_excl=1e-3):
    """Symmetric wavenumber grid keeping ``delta_excl`` away from the singular set."""
    half = np.linspace(delta_excl, 0.5 - delta_excl, n)
    grid = np.concatenate((-half[::-1], half))
    return grid[d.distance_to_singular(grid) >= delta_excl - 1e-15]


def interface_coefficients(
    d: DispersionRelation, params: ThermostatParams, k_grid=None, delta_excl=1e-3, tol=1e-12,
    gamma_shift=0.0,
):
    """Tabulate the interface coefficients and their identity residuals."""
    if params.mu < 0.5:
        raise ValidationError("mu must be >= 1/2")
    k = default_k_grid(d, delta_excl=delta_excl) if k_grid is None else np.asarray(k_grid, float)
    d.check_regular(k, delta_excl)
    th = ScatteringTheory(d, params, tol=tol, gamma_shift=gamma_shift)
    tab = th.table(k)
    coeffs = ScatteringCoefficients(
        k=k,
        nu=tab["nu"],
        Gamma=th.Gamma,
        p_plus=tab["p_plus"],
        p_minus=tab["p_minus"],
        g_weight=tab["g_weight"],
        p_abs=th.p_abs,
        p_sc=tab["p_sc"],
        p_sc_integral=th.p_sc_integral,
        nu2_integral=th.nu2_integral,
        params=params,
        dispersion=d.describe(),
    )
    coeffs.residuals = _residuals(coeffs, tab["speed"])
    coeffs.sensitivity = 1.0 / (params.mu - coeffs.Gamma)
    return coeffs


def _residuals(c: ScatteringCoefficients, speed):
    gam = c.params.gamma
    a2 = np.abs(c.nu) ** 2
    res = {
        "boundary_real_part": float(np.max(np.abs(c.nu.real - (1 + gam / (2 * speed)) * a2))),
        "unitarity": float(np.max(np.abs(c.p_plus + c.p_minus + c.g_weight - 1.0))),
        "gamma_identity": abs(c.Gamma + 0.5 * c.nu2_integral - 0.5),
        "absorption_scattering_sum": abs(c.p_abs + c.p_sc_integral - 1.0),
        "balance": float(
            np.max(
                np.abs(1 - c.p_plus - c.p_minus - c.g_weight * c.p_sc_integral - c.p_abs * c.g_weight)
            )
        ),
    }
    # detailed balance of the scattering kernel: gamma |nu(k)|^2 p_sc(l) / v(l) = g(l) p_sc(k)
    lhs = gam * np.outer(a2, c.p_sc / speed)
    rhs = np.outer(c.p_sc, c.g_weight)
    res["flux_symmetry"] = float(np.max(np.abs(lhs - rhs)))
    return res


@dataclass
class IdentityReport:
    residuals: dict
    tolerances: dict
    passed: dict
    gamma_sensitivity: float

    @property
    def ok(self):
        return all(self.passed.values())

    def lines(self):
        for name, r in self.residuals.items():
            flag = "PASS" if self.passed[name] else "FAIL"
            yield f"{flag} {name}: residual {r:.3e} (tol {self.tolerances[name]:.1e})"


def identity_suite(coeffs: ScatteringCoefficients, tolerances=None):
    tol = dict(DEFAULT_TOLERANCES)
    tol.update(tolerances or {})
    passed = {name: bool(r <= tol[name]) for name, r in coeffs.residuals.items()}
    extra_checks = {
        "gamma_below_half": coeffs.Gamma < 0.5,
        "g_weight_in_unit_interval": bool(np.all((coeffs.g_weight >= -1e-12) & (coeffs.g_weight <= 1 + 1e-12))),
    }
    residuals = dict(coeffs.residuals)
    for name, ok in extra_checks.items():
        residuals[name] = 0.0 if ok else 1.0
        tol.setdefault(name, 0.0)
        passed[name] = ok
    return IdentityReport(residuals, {k: tol[k] for k in residuals}, passed, coeffs.sensitivity)
