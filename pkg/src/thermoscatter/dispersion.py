"""Lattice dispersion relations.

The chain is described by even couplings ``alpha_y`` with Fourier transform

    alpha_hat(k) = alpha_0 + 2 * sum_{y>=1} alpha_y cos(2 pi y k),

and the dispersion relation is ``omega(k) = sqrt(alpha_hat(k))`` on the unit
torus ``[-1/2, 1/2)``.  Internally ``alpha_hat`` is evaluated in the form

    alpha_hat(k) = alpha_hat(0) - 4 * sum_{y>=1} alpha_y sin^2(pi y k)

which keeps full relative accuracy near ``k = 0`` in the acoustic case.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
from numpy.polynomial import chebyshev as C
from scipy import optimize

from .errors import OutOfBand, SingularWavenumber, ValidationError

__all__ = [
    "DispersionRelation",
    "ValidationReport",
    "nearest_neighbor",
    "tabulated_couplings",
    "load_couplings",
    "omega",
    "group_velocity",
    "inverse_branch",
    "validate",
    "wrap",
]

# relative threshold under which alpha_hat(0) is treated as exactly zero
_ACOUSTIC_ATOL = 1e-12


def wrap(k):
    """Map wavenumbers onto the torus [-1/2, 1/2)."""
    return (np.asarray(k, dtype=float) + 0.5) % 1.0 - 0.5


@dataclass(frozen=True)
class ValidationReport:
    valid: bool
    failures: list[str]
    kind: str  # "acoustic" or "optical"
    omega_min: float
    omega_max: float
    singular_set: tuple[float, ...]

    def __bool__(self):
        return self.valid


@dataclass(frozen=True, eq=False)
class DispersionRelation:
    """Unimodal dispersion relation built from a finite even coupling sequence.

    Parameters
    ----------
    couplings : sequence of float
        ``alpha_0, alpha_1, ..., alpha_R``; ``alpha_{-y}`` is implied by symmetry.
    label : str
        Human readable description, echoed into output files.
    """

    couplings: tuple[float, ...]
    label: str = "tabulated"
    omega_min_exact: float | None = field(default=None, repr=False)

    def __post_init__(self):
        a = np.asarray(self.couplings, dtype=float)
        if a.ndim != 1 or a.size < 2:
            raise ValidationError("need at least alpha_0 and alpha_1")
        if not np.all(np.isfinite(a)):
            raise ValidationError("couplings must be finite")

    # -- coefficient views ----------------------------------------------------
    @cached_property
    def _alpha(self):
        return np.asarray(self.couplings, dtype=float)

    @cached_property
    def _y(self):
        return np.arange(1, self._alpha.size, dtype=float)

    @cached_property
    def alpha_hat_zero(self):
        if self.omega_min_exact is not None:
            return self.omega_min_exact**2
        a = self._alpha
        val = a[0] + 2.0 * a[1:].sum()
        scale = np.abs(a).sum()
        return 0.0 if abs(val) <= _ACOUSTIC_ATOL * scale else float(val)

    @property
    def is_acoustic(self):
        return self.alpha_hat_zero == 0.0

    @property
    def kind(self):
        return "acoustic" if self.is_acoustic else "optical"

    @cached_property
    def omega_min(self):
        return float(np.sqrt(max(self.alpha_hat_zero, 0.0)))

    @cached_property
    def omega_max(self):
        return float(self.omega(0.5))

    @cached_property
    def singular_set(self):
        """Wavenumbers where omega' or omega vanishes (within [-1/2, 1/2))."""
        pts = {0.0, -0.5}
        kk = np.linspace(0.0, 0.5, 8193)[1:-1]
        dw = self.domega(kk)
        crit = kk[np.abs(dw) < 1e-10]
        for k in crit:
            pts.update({float(k), float(-k)})
        return tuple(sorted(pts))

    # -- evaluation -------------------------------------------------------------
    def alpha_hat(self, k):
        """Fourier transform of the couplings; accepts real or complex ``k``."""
        k = np.asarray(k)
        s = np.sin(np.pi * np.multiply.outer(k, self._y))
        return self.alpha_hat_zero - 4.0 * (s * s) @ self._alpha[1:]

    def alpha_hat_diff(self, k, l):
        """``alpha_hat(k) - alpha_hat(l)`` without cancellation near ``k == l``."""
        k = np.asarray(k, dtype=float)
        l = np.asarray(l, dtype=float)
        kk, ll = np.broadcast_arrays(k, l)
        y = self._y
        prod = np.sin(np.pi * np.multiply.outer(kk - ll, y)) * np.sin(
            np.pi * np.multiply.outer(kk + ll, y)
        )
        return -4.0 * prod @ self._alpha[1:]

    def dalpha_hat(self, k):
        k = np.asarray(k)
        y = self._y
        return -4.0 * np.pi * np.sin(2 * np.pi * np.multiply.outer(k, y)) @ (self._alpha[1:] * y)

    def d2alpha_hat(self, k):
        k = np.asarray(k)
        y = self._y
        return -8.0 * np.pi**2 * np.cos(2 * np.pi * np.multiply.outer(k, y)) @ (
            self._alpha[1:] * y * y
        )

    def omega(self, k):
        return np.sqrt(np.maximum(self.alpha_hat(np.asarray(k, dtype=float)), 0.0))

    def domega(self, k, side=0):
        """Derivative ``omega'(k)``.

        At ``k = 0`` in the acoustic case the derivative only has one-sided
        limits; ``side=+1`` / ``side=-1`` selects which, ``side=0`` returns 0.
        """
        k = np.asarray(k, dtype=float)
        w = self.omega(k)
        da = self.dalpha_hat(k)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(w > 0, da / (2.0 * np.where(w > 0, w, 1.0)), 0.0)
        if self.is_acoustic:
            slope = np.sqrt(max(self.d2alpha_hat(0.0) / 2.0, 0.0))
            at0 = (np.abs(wrap(k)) == 0.0)
            if np.any(at0):
                out = np.where(at0, side * slope, out)
        return out

    def stable_omega_diff(self, k, l):
        """``omega(k) - omega(l)`` computed from the product form of alpha_hat."""
        return self.alpha_hat_diff(k, l) / (self.omega(k) + self.omega(l))

    def group_velocity(self, k, side=0):
        return self.domega(k, side) / (2.0 * np.pi)

    # -- geometry -----------------------------------------------------------------
    def cos_roots(self, s):
        """All ``c = cos(2 pi l)`` with ``alpha_hat(l) = s`` (complex array)."""
        a = self._alpha
        coef = np.concatenate(([a[0] - s], 2.0 * a[1:])).astype(complex)
        if coef.size == 2:
            return np.array([-coef[0] / coef[1]])
        return C.chebroots(coef)

    def roots(self, s):
        """Representatives ``z`` (with ``0 <= Re z <= 1/2``) of the solutions of
        ``alpha_hat(l) = s``; the full solution set is ``{z, -z} + Z``."""
        c = self.cos_roots(s)
        z = np.arccos(c.astype(complex)) / (2.0 * np.pi)
        # Newton polish on alpha_hat(z) = s
        for _ in range(2):
            da = self.dalpha_hat(z)
            ok = np.abs(da) > 1e-8
            step = np.where(ok, (self.alpha_hat(z) - s) / np.where(ok, da, 1.0), 0.0)
            z = z - step
        return z

    def inverse_branch(self, w, sign=+1):
        """Wavenumber ``k`` with ``omega(k) = w``, ``k`` in [0,1/2] for ``sign=+1``."""
        w = np.asarray(w, dtype=float)
        lo, hi = self.omega_min, self.omega_max
        tol = 1e-12 * max(hi, 1.0)
        if np.any((w < lo - tol) | (w > hi + tol)):
            raise OutOfBand(f"frequency outside [{lo}, {hi}]")
        w = np.clip(w, lo, hi)
        flat = np.atleast_1d(w).ravel()
        out = np.empty_like(flat)
        for i, wi in enumerate(flat):
            out[i] = self._inverse_scalar(wi)
        out = out.reshape(np.shape(w))
        return out if sign > 0 else -out

    def _inverse_scalar(self, w):
        lo, hi = self.omega_min, self.omega_max
        if w <= lo:
            return 0.0
        if w >= hi:
            return 0.5
        # measure the target from the nearer band edge so the root is well conditioned
        if w <= 0.5 * (lo + hi):
            target = (w - lo) * (w + lo)
            f = lambda k: float(self.alpha_hat_diff(k, 0.0)) - target
        else:
            target = (hi - w) * (hi + w)
            f = lambda k: target - float(self.alpha_hat_diff(0.5, k))
        return optimize.brentq(f, 0.0, 0.5, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=300)

    def distance_to_singular(self, k):
        k = wrap(k)
        pts = np.array(self.singular_set + (0.5,))
        d = np.abs(np.subtract.outer(k, pts))
        d = np.minimum(d, 1.0 - d)
        return d.min(axis=-1)

    def check_regular(self, k, delta):
        if np.any(self.distance_to_singular(k) < delta):
            raise SingularWavenumber(f"wavenumber within {delta} of the singular set")

    def validate(self, n_grid=8193):
        return validate(self, n_grid)

    def describe(self):
        return {
            "label": self.label,
            "couplings": list(map(float, self.couplings)),
            "kind": self.kind,
            "omega_min": self.omega_min,
            "omega_max": self.omega_max,
        }


def nearest_neighbor(omega_min=0.0):
    """Chain with ``alpha_hat(k) = omega_min**2 + 4 sin^2(pi k)``."""
    if omega_min < 0:
        raise ValidationError("omega_min must be non-negative")
    return DispersionRelation(
        (omega_min**2 + 2.0, -1.0),
        label=f"nearest_neighbor(omega_min={omega_min:g})",
        omega_min_exact=float(omega_min),
    )


def tabulated_couplings(alpha, radius=None, decay_tol=1e-6):
    """Build a dispersion from couplings ``{y: alpha_y}`` or a sequence ``alpha_0..``.

    Negative offsets are symmetrised with their mirror.  Couplings beyond
    ``radius`` are dropped; dropping anything larger than ``decay_tol`` times the
    largest coupling is rejected.
    """
    if isinstance(alpha, dict):
        items = {int(y): float(v) for y, v in alpha.items()}
    else:
        items = {y: float(v) for y, v in enumerate(alpha)}
    sym = {}
    for y, v in items.items():
        sym.setdefault(abs(y), []).append(v)
    R = max(sym)
    seq = np.zeros(R + 1)
    for y, vals in sym.items():
        seq[y] = np.mean(vals)
    if radius is not None and radius < R:
        dropped = np.abs(seq[radius + 1:]).max()
        if dropped > decay_tol * np.abs(seq).max():
            raise ValidationError(
                f"couplings have not decayed at radius {radius} (|alpha| = {dropped:.3g})"
            )
        seq = seq[: radius + 1]
    if seq.size < 2:
        raise ValidationError("need at least one non-trivial coupling")
    return DispersionRelation(tuple(seq), label=f"tabulated(R={seq.size - 1})")


def load_couplings(path, radius=None):
    """Read a two-column text file ``y alpha_y`` (``#`` comments allowed)."""
    data = np.loadtxt(Path(path), comments="#", ndmin=2)
    if data.shape[1] != 2:
        raise ValidationError("coupling file must have exactly two columns")
    return tabulated_couplings({int(round(y)): v for y, v in data}, radius=radius)


def validate(d: DispersionRelation, n_grid=8193) -> ValidationReport:
    failures = []
    k = np.linspace(0.0, 0.5, n_grid)
    a = d.alpha_hat(k)
    if np.any(a[1:] <= 0.0):
        failures.append("alpha_hat is not positive away from k = 0")
    if d.alpha_hat_zero < 0:
        failures.append("alpha_hat(0) is negative")
    w = d.omega(k)
    if np.any(np.diff(w) <= 0.0):
        failures.append("omega is not increasing on [0, 1/2]")
    if np.max(np.abs(d.omega(k) - d.omega(-k))) > 1e-14 * max(1.0, float(w.max())):
        failures.append("omega is not even")
    dw = d.domega(k[1:-1])
    if np.any(np.abs(dw) < 1e-10):
        failures.append("omega has an interior critical point")
    if abs(d.d2alpha_hat(0.5)) < 1e-10:
        failures.append("degenerate maximum at k = 1/2")
    if abs(d.d2alpha_hat(0.0)) < 1e-10:
        failures.append("degenerate minimum at k = 0")
    return ValidationReport(
        valid=not failures,
        failures=failures,
        kind=d.kind,
        omega_min=d.omega_min,
        omega_max=float(w[-1]),
        singular_set=(0.0, 0.5) if not failures else tuple(),
    )


# functional aliases -------------------------------------------------------------
def omega(d, k):
    return d.omega(k)


def group_velocity(d, k, one_sided=None):
    """Group velocity ``omega'(k) / 2 pi``.

    Raises :class:`SingularWavenumber` at points of the singular set unless a
    one-sided limit (``+1`` or ``-1``) is requested.
    """
    kw = wrap(k)
    sing = d.distance_to_singular(kw) == 0.0
    if np.any(sing) and one_sided is None:
        raise SingularWavenumber("group velocity undefined on the singular set")
    return d.group_velocity(kw, side=one_sided or 0)


def inverse_branch(d, w, sign=+1):
    return d.inverse_branch(w, sign)
