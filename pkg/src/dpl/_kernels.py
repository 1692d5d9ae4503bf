"""Compiled inner loops for the Stuart-Landau pair.

These are the hot paths behind parameter sweeps. The generic engine in
:mod:`dpl.dde_engine` implements the same scheme on plain numpy arrays and
is used to cross-check these kernels.
"""
import math

import numba
import numpy as np

# status codes returned by the kernels
OK = 0
NON_FINITE = 1

# second-order drift variants
FULL = 0
LEGACY = 1


@numba.njit(cache=True, nogil=True)
def _sl_field(z, z_delayed, lin, coupling):
    return lin * z - (z.real * z.real + z.imag * z.imag) * z + coupling * (z_delayed - z)


@numba.njit(cache=True, nogil=True)
def hermite(y0, y1, d0, d1, dt, theta):
    """Cubic Hermite interpolant on ``[t0, t0 + dt]`` at ``t0 + theta dt``."""
    t2 = theta * theta
    t3 = t2 * theta
    return ((2.0 * t3 - 3.0 * t2 + 1.0) * y0 + (t3 - 2.0 * t2 + theta) * dt * d0
            + (3.0 * t2 - 2.0 * t3) * y1 + (t3 - t2) * dt * d1)


@numba.njit(cache=True, nogil=True)
def _rk4_ode(z1, z2, lin, coupling, hs):
    h = 0.5 * hs
    k11 = _sl_field(z1, z2, lin, coupling)
    k12 = _sl_field(z2, z1, lin, coupling)
    s1 = z1 + h * k11
    s2 = z2 + h * k12
    k21 = _sl_field(s1, s2, lin, coupling)
    k22 = _sl_field(s2, s1, lin, coupling)
    s1 = z1 + h * k21
    s2 = z2 + h * k22
    k31 = _sl_field(s1, s2, lin, coupling)
    k32 = _sl_field(s2, s1, lin, coupling)
    s1 = z1 + hs * k31
    s2 = z2 + hs * k32
    k41 = _sl_field(s1, s2, lin, coupling)
    k42 = _sl_field(s2, s1, lin, coupling)
    return (z1 + (hs / 6.0) * (k11 + 2.0 * k21 + 2.0 * k31 + k41),
            z2 + (hs / 6.0) * (k12 + 2.0 * k22 + 2.0 * k32 + k42))


@numba.njit(cache=True, nogil=True)
def _finite(z1, z2):
    return (math.isfinite(z1.real) and math.isfinite(z1.imag)
            and math.isfinite(z2.real) and math.isfinite(z2.imag))


@numba.njit(cache=True, nogil=True)
def sl_dde(a, b, rho, eps, lag, dt, n_steps, last_dt, stride,
           hist1, hist2, dhist1, dhist2):
    """RK4 method of steps for the delay-coupled SL pair.

    ``lag`` is the delay in steps of ``dt``. ``hist*``/``dhist*`` hold
    values and derivatives of the initial history on the nodes
    ``-lag..0``. With ``lag == 0`` the coupling reads the current stage
    state instead. After ``n_steps`` full steps, one extra step of size
    ``last_dt`` is taken when ``last_dt > 0``.

    Returns ``(rec1, rec2, status, steps_done)``. Records are taken every
    ``stride`` full steps starting at t=0; the final state is always the
    last record.
    """
    lin = complex(a, b)
    coupling = eps * complex(math.cos(rho), math.sin(rho))
    total = n_steps + (1 if last_dt > 0.0 else 0)
    n_rec = n_steps // stride + 2
    rec1 = np.empty(n_rec, np.complex128)
    rec2 = np.empty(n_rec, np.complex128)
    z1 = hist1[lag]
    z2 = hist2[lag]
    rec1[0] = z1
    rec2[0] = z2
    r = 1
    size = lag + 1
    y1 = np.empty(size, np.complex128)
    y2 = np.empty(size, np.complex128)
    d1 = np.empty(size, np.complex128)
    d2 = np.empty(size, np.complex128)
    for n in range(total):
        hs = dt if n < n_steps else last_dt
        if lag == 0:
            z1, z2 = _rk4_ode(z1, z2, lin, coupling, hs)
        else:
            slot = n % size
            y1[slot] = z1
            y2[slot] = z2
            m = n - lag
            # delayed interval [m, m + 1]: values and one-sided slopes
            if m + 1 <= 0:
                a1 = hist1[m + lag]
                a2 = hist2[m + lag]
                b1 = hist1[m + lag + 1]
                b2 = hist2[m + lag + 1]
                da1 = dhist1[m + lag]
                da2 = dhist2[m + lag]
                db1 = dhist1[m + lag + 1]
                db2 = dhist2[m + lag + 1]
                k11 = _sl_field(z1, a2, lin, coupling)
                k12 = _sl_field(z2, a1, lin, coupling)
                d1[slot] = k11
                d2[slot] = k12
            else:
                sa = m % size
                sb = (m + 1) % size
                a1 = y1[sa]
                a2 = y2[sa]
                k11 = _sl_field(z1, a2, lin, coupling)
                k12 = _sl_field(z2, a1, lin, coupling)
                d1[slot] = k11
                d2[slot] = k12
                b1 = y1[sb]
                b2 = y2[sb]
                da1 = d1[sa]
                da2 = d2[sa]
                db1 = d1[sb]
                db2 = d2[sb]
            if n < n_steps:
                mid1 = 0.5 * (a1 + b1) + 0.125 * dt * (da1 - db1)
                mid2 = 0.5 * (a2 + b2) + 0.125 * dt * (da2 - db2)
                end1 = b1
                end2 = b2
            else:
                th = 0.5 * hs / dt
                mid1 = hermite(a1, b1, da1, db1, dt, th)
                mid2 = hermite(a2, b2, da2, db2, dt, th)
                end1 = hermite(a1, b1, da1, db1, dt, 2.0 * th)
                end2 = hermite(a2, b2, da2, db2, dt, 2.0 * th)
            h = 0.5 * hs
            k21 = _sl_field(z1 + h * k11, mid2, lin, coupling)
            k22 = _sl_field(z2 + h * k12, mid1, lin, coupling)
            k31 = _sl_field(z1 + h * k21, mid2, lin, coupling)
            k32 = _sl_field(z2 + h * k22, mid1, lin, coupling)
            k41 = _sl_field(z1 + hs * k31, end2, lin, coupling)
            k42 = _sl_field(z2 + hs * k32, end1, lin, coupling)
            z1 = z1 + (hs / 6.0) * (k11 + 2.0 * k21 + 2.0 * k31 + k41)
            z2 = z2 + (hs / 6.0) * (k12 + 2.0 * k22 + 2.0 * k32 + k42)
        if not _finite(z1, z2):
            return rec1[:r], rec2[:r], NON_FINITE, n + 1
        if (n + 1) % stride == 0 or n + 1 == total:
            rec1[r] = z1
            rec2[r] = z2
            r += 1
    return rec1[:r], rec2[:r], OK, total


@numba.njit(cache=True, nogil=True)
def drift_coefficients(a, b, rho, tau, variant):
    """Fourier coefficients of the second-order drift in ``u = theta + alpha``.

    The drift of oscillator j is ``c0 + c1 cos u + cs sin 2u + cc cos 2u``
    with ``theta = phi_k - phi_j`` and ``alpha = rho - b tau``.
    """
    lag = rho - b * tau
    s2 = math.sin(2.0 * lag)
    c0 = (0.25 / a - 0.5 * tau) * s2
    c1 = tau * math.sin(rho)
    cs = 0.5 * tau * math.cos(2.0 * lag)
    if variant == FULL:
        sl = math.sin(lag)
        cs -= sl * sl / (2.0 * a)
    cc = -(0.25 / a + 0.5 * tau) * s2
    return c0, c1, cs, cc


@numba.njit(cache=True, nogil=True)
def _drift(u, eps, order, sin_rho, c0, c1, cs, cc):
    su = math.sin(u)
    cu = math.cos(u)
    out = 0.0
    if order >= 1:
        out += eps * (su - sin_rho)
    if order >= 2:
        out += eps * eps * (c0 + c1 * cu + cs * 2.0 * su * cu + cc * (cu * cu - su * su))
    return out


@numba.njit(cache=True, nogil=True)
def phase_rk4(a, b, rho, eps, tau, order, variant, p1, p2, dt, n_steps, stride):
    """RK4 for the truncated phase equations; angles are kept unwrapped."""
    c0, c1, cs, cc = drift_coefficients(a, b, rho, tau, variant)
    lag = rho - b * tau
    sr = math.sin(rho)
    n_rec = n_steps // stride + 1
    if n_steps % stride != 0:
        n_rec += 1
    rec = np.empty((n_rec, 2))
    rec[0, 0] = p1
    rec[0, 1] = p2
    r = 1
    h = 0.5 * dt
    for n in range(n_steps):
        d = p2 - p1
        k11 = b + _drift(d + lag, eps, order, sr, c0, c1, cs, cc)
        k12 = b + _drift(lag - d, eps, order, sr, c0, c1, cs, cc)
        d = (p2 + h * k12) - (p1 + h * k11)
        k21 = b + _drift(d + lag, eps, order, sr, c0, c1, cs, cc)
        k22 = b + _drift(lag - d, eps, order, sr, c0, c1, cs, cc)
        d = (p2 + h * k22) - (p1 + h * k21)
        k31 = b + _drift(d + lag, eps, order, sr, c0, c1, cs, cc)
        k32 = b + _drift(lag - d, eps, order, sr, c0, c1, cs, cc)
        d = (p2 + dt * k32) - (p1 + dt * k31)
        k41 = b + _drift(d + lag, eps, order, sr, c0, c1, cs, cc)
        k42 = b + _drift(lag - d, eps, order, sr, c0, c1, cs, cc)
        p1 = p1 + (dt / 6.0) * (k11 + 2.0 * k21 + 2.0 * k31 + k41)
        p2 = p2 + (dt / 6.0) * (k12 + 2.0 * k22 + 2.0 * k32 + k42)
        if not (math.isfinite(p1) and math.isfinite(p2)):
            return rec[:r], NON_FINITE, n + 1
        if (n + 1) % stride == 0 or n + 1 == n_steps:
            rec[r, 0] = p1
            rec[r, 1] = p2
            r += 1
    return rec[:r], OK, n_steps
