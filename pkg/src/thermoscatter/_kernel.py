"""Compiled inner loop of the jump process.

The even part of the spectral wave function is kept in the frame rotating
with the free flow, ``phi_j = exp(i w_j (t - t_ref)) psi_even(t, k_j)``, so a
jump at time ``t`` costs one phase table, one dot product and one rank-one
update.  ``sin``/``cos`` are evaluated with a branch-free polynomial kernel so
the loops vectorize; the argument reduction is accurate to a few ulp for
arguments below ``MAX_PHASE``.
"""

import math

import numba
import numpy as np

# pi/2 split into three parts (fdlibm), the first with trailing zero bits
_P1 = 1.57079632673412561417
_P2 = 6.07710050630396597660e-11
_P3 = 2.02226624879595063154e-21
_TWO_OVER_PI = 0.63661977236758134308

# q * _P1 is exact while q < 2**20; keep a safety margin
MAX_PHASE = 5.0e5


@numba.njit(fastmath={"contract"}, cache=True)
def sincos_fill(w, t, cs, sn):
    for j in range(w.shape[0]):
        a = w[j] * t
        q = math.floor(a * _TWO_OVER_PI + 0.5)
        r = ((a - q * _P1) - q * _P2) - q * _P3
        r2 = r * r
        s = r * (1.0 + r2 * (-1.0 / 6 + r2 * (1.0 / 120 + r2 * (-1.0 / 5040 + r2 * (
            1.0 / 362880 + r2 * (-1.0 / 39916800 + r2 * (1.0 / 6227020800 + r2 * (
                -1.0 / 1307674368000))))))))
        c = 1.0 + r2 * (-0.5 + r2 * (1.0 / 24 + r2 * (-1.0 / 720 + r2 * (1.0 / 40320 + r2 * (
            -1.0 / 3628800 + r2 * (1.0 / 479001600 + r2 * (-1.0 / 87178291200 + r2 * (
                1.0 / 20922789888000))))))))
        qm = q - 4.0 * math.floor(q * 0.25)
        odd = qm - 2.0 * math.floor(qm * 0.5)
        flip_s = math.floor(qm * 0.5)
        flip_c = math.floor((qm + 1.0) * 0.5) - 2.0 * math.floor((qm + 1.0) * 0.25)
        ss = s * (1.0 - odd) + c * odd
        cc = c * (1.0 - odd) + s * odd
        sn[j] = ss * (1.0 - 2.0 * flip_s)
        cs[j] = cc * (1.0 - 2.0 * flip_c)


@numba.njit(fastmath=True, cache=True)
def _imag_sum(pr, pi, mult, cs, sn):
    acc = 0.0
    for j in range(pr.shape[0]):
        acc += mult[j] * (cs[j] * pi[j] - sn[j] * pr[j])
    return acc


@numba.njit(fastmath=True, cache=True)
def _kick(pr, pi, cs, sn, delta):
    for j in range(pr.shape[0]):
        pr[j] -= delta * sn[j]
        pi[j] += delta * cs[j]


@numba.njit(cache=True)
def run_jumps(pr, pi, w, mult, t_ref, t_next, t_target, gaps, normals, start,
              rate, inv_mu, amp, inv_n, cs, sn, rec_t, rec_p0, rec_delta):
    """Apply every jump with time <= ``t_target`` using draws from ``start`` on.

    ``t_next`` is the time of the pending jump whose normal is ``normals[start]``.
    Returns ``(t_next, index of next unused draw, number of jumps applied)``;
    the loop also stops when the draw buffer is exhausted.  Jump ``m`` is logged
    as ``(time, p0 before, delta)`` in the record arrays.
    """
    i = start
    m = 0
    while i < gaps.shape[0] and t_next <= t_target:
        sincos_fill(w, t_next - t_ref, cs, sn)
        p0 = _imag_sum(pr, pi, mult, cs, sn) * inv_n
        delta = amp * normals[i] - p0 * inv_mu
        # phi += i delta exp(i w (t - t_ref))
        _kick(pr, pi, cs, sn, delta)
        rec_t[m] = t_next
        rec_p0[m] = p0
        rec_delta[m] = delta
        m += 1
        i += 1
        if i < gaps.shape[0]:
            t_next = t_next + gaps[i] / rate
    return t_next, i, m


@numba.njit(cache=True)
def run_jumps_reference(pr, pi, w, mult, t_ref, t_next, t_target, gaps, normals, start,
                        rate, inv_mu, amp, inv_n, rec_t, rec_p0, rec_delta):
    """Same contract as :func:`run_jumps` with libm trigonometry (test oracle)."""
    i = start
    m = 0
    n = pr.shape[0]
    while i < gaps.shape[0] and t_next <= t_target:
        acc = 0.0
        for j in range(n):
            a = w[j] * (t_next - t_ref)
            acc += mult[j] * (math.cos(a) * pi[j] - math.sin(a) * pr[j])
        p0 = acc * inv_n
        delta = amp * normals[i] - p0 * inv_mu
        for j in range(n):
            a = w[j] * (t_next - t_ref)
            pr[j] -= delta * math.sin(a)
            pi[j] += delta * math.cos(a)
        rec_t[m] = t_next
        rec_p0[m] = p0
        rec_delta[m] = delta
        m += 1
        i += 1
        if i < gaps.shape[0]:
            t_next = t_next + gaps[i] / rate
    return t_next, i, m


def warm_up():
    """Trigger compilation on tiny inputs."""
    z = np.zeros(3)
    one = np.ones(3)
    buf = np.empty(2)
    for fn, extra in ((run_jumps, (np.empty(3), np.empty(3))), (run_jumps_reference, ())):
        fn(z.copy(), z.copy(), one, one, 0.0, 0.5, 1.0, np.ones(2), np.ones(2), 0,
           1.0, 1.0, 0.0, 1.0, *extra, buf, buf.copy(), buf.copy())
