"""Closed-form phase reduction of the delay-coupled Stuart-Landau pair.

Phases live on the torus; ``psi = phi1 - phi2`` is the phase difference.
The reduced dynamics is ``phi' = omega + eps f1(phi) + eps^2 f2(phi)``,
and the embedding ``z = e0(phi) + eps e1(phi)`` (with its history
counterpart ``E0 + eps E1``) places it in the state space of the delay
system.

Two variants of the second-order drift are available:

``"full"`` (default)
    Reproduces the collective frequency of the exact phase-locked states
    to third order in ``eps`` and the transverse Floquet exponent to
    second order (see :mod:`dpl.verify`).
``"legacy"``
    The same expression without the ``-sin(alpha)^2 / (2a) * sin(2u)``
    second-harmonic term. Its psi-equation carries ``sin(2 alpha)^2 / (2a)``
    where the full form has ``sin(alpha)^2 / a``. Kept for comparison; it
    is off by ``O(eps^2)`` in the locked frequency.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from dpl import _kernels
from dpl.core_model import ComplexState, SLParams
from dpl.errors import NonFiniteState

Variant = Literal["full", "legacy"]
VARIANTS = ("full", "legacy")
TWO_PI = 2 * math.pi


def wrap_angle(x):
    """Map angles into ``(-pi, pi]``; idempotent."""
    out = math.pi - np.mod(math.pi - np.asarray(x, dtype=float), TWO_PI)
    out = np.where(out <= -math.pi, math.pi, out)
    return float(out) if out.ndim == 0 else out


def _variant_code(variant: str) -> int:
    if variant == "full":
        return _kernels.FULL
    if variant == "legacy":
        return _kernels.LEGACY
    raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")


def _check_order(order: int, allowed=(0, 1, 2)) -> int:
    if order not in allowed:
        raise ValueError(f"order must be one of {allowed}, got {order!r}")
    return int(order)


@dataclass(frozen=True)
class PhasePoint:
    """A point ``(phi1, phi2)`` on the two-torus."""

    phi1: float
    phi2: float

    @property
    def psi(self) -> float:
        return wrap_angle(self.phi1 - self.phi2)

    def shifted(self, ds: float, omega: float) -> "PhasePoint":
        """Flow of the uncoupled rotation for time ``ds``."""
        return PhasePoint(self.phi1 + omega * ds, self.phi2 + omega * ds)

    def swapped(self) -> "PhasePoint":
        return PhasePoint(self.phi2, self.phi1)

    def wrapped(self) -> "PhasePoint":
        return PhasePoint(wrap_angle(self.phi1), wrap_angle(self.phi2))


def _angles(phi):
    if isinstance(phi, PhasePoint):
        return phi.phi1, phi.phi2
    p1, p2 = phi
    return float(p1), float(p2)


# Phase-difference ansatz: e1_j = exp(i phi_j) A(phi_k - phi_j),
# f1_j = B(phi_k - phi_j).

def coef_A(params: SLParams, theta):
    return (np.cos(theta - params.b * params.tau + params.rho) - math.cos(params.rho)) \
        / (2 * math.sqrt(params.a))


def coef_B(params: SLParams, theta):
    return np.sin(theta - params.b * params.tau + params.rho) - math.sin(params.rho)


def coef_A_prime(params: SLParams, theta):
    return -np.sin(theta - params.b * params.tau + params.rho) / (2 * math.sqrt(params.a))


def coef_B_prime(params: SLParams, theta):
    return np.cos(theta - params.b * params.tau + params.rho)


def e0(params: SLParams, phi) -> ComplexState:
    p1, p2 = _angles(phi)
    r = math.sqrt(params.a)
    return ComplexState(r * np.exp(1j * p1), r * np.exp(1j * p2))


def E0(params: SLParams, s: float, phi) -> ComplexState:
    p1, p2 = _angles(phi)
    w = params.b * s
    return e0(params, (p1 + w, p2 + w))


def f1(params: SLParams, phi) -> tuple:
    p1, p2 = _angles(phi)
    return float(coef_B(params, p2 - p1)), float(coef_B(params, p1 - p2))


def e1(params: SLParams, phi) -> ComplexState:
    p1, p2 = _angles(phi)
    return ComplexState(np.exp(1j * p1) * coef_A(params, p2 - p1),
                        np.exp(1j * p2) * coef_A(params, p1 - p2))


def E1(params: SLParams, s: float, phi) -> ComplexState:
    """First-order history embedding; grows linearly in ``s``."""
    p1, p2 = _angles(phi)
    w = params.b * s
    base = e1(params, (p1 + w, p2 + w))
    r = math.sqrt(params.a)
    b1, b2 = f1(params, (p1, p2))
    return ComplexState(base.z1 + s * 1j * r * np.exp(1j * (p1 + w)) * b1,
                        base.z2 + s * 1j * r * np.exp(1j * (p2 + w)) * b2)


def _drift2(params: SLParams, theta, variant: str):
    a, tau, rho = params.a, params.tau, params.rho
    lag = rho - params.b * tau
    u = theta + lag
    out = ((1 / (4 * a) - tau / 2) * np.sin(2 * lag)
           + tau * np.sin(rho) * np.cos(u)
           + tau / 2 * np.cos(2 * lag) * np.sin(2 * u)
           - (1 / (4 * a) + tau / 2) * np.sin(2 * lag) * np.cos(2 * u))
    if variant == "full":
        out = out - np.sin(lag) ** 2 / (2 * a) * np.sin(2 * u)
    elif variant != "legacy":
        raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    return out


def f2(params: SLParams, phi, variant: Variant = "full") -> tuple:
    p1, p2 = _angles(phi)
    return float(_drift2(params, p2 - p1, variant)), float(_drift2(params, p1 - p2, variant))


def phase_rhs(params: SLParams, phi, order: int = 2, variant: Variant = "full") -> tuple:
    """Truncated phase field ``omega + eps f1 (+ eps^2 f2)``."""
    order = _check_order(order)
    w1 = w2 = params.b
    if order >= 1:
        c1, c2 = f1(params, phi)
        w1 += params.eps * c1
        w2 += params.eps * c2
    if order >= 2:
        c1, c2 = f2(params, phi, variant)
        w1 += params.eps ** 2 * c1
        w2 += params.eps ** 2 * c2
    return w1, w2


def second_harmonic_gain(params: SLParams, variant: Variant = "full"):
    """Coefficient ``q`` in the ``-eps^2 (tau + q) sin(2 psi)`` term."""
    alpha = params.rho - params.b * params.tau
    if variant == "full":
        return np.sin(alpha) ** 2 / params.a
    if variant == "legacy":
        return np.sin(2 * alpha) ** 2 / (2 * params.a)
    raise ValueError(f"unknown variant {variant!r}")


def psi_rhs(params: SLParams, psi, order: int = 2, variant: Variant = "full"):
    """Phase-difference dynamics at first or second order."""
    order = _check_order(order, (1, 2))
    eps, tau, rho = params.eps, params.tau, params.rho
    alpha = rho - params.b * tau
    if order == 1:
        return -2 * eps * math.cos(alpha) * np.sin(psi)
    first = eps * math.cos(alpha) - eps ** 2 * tau * math.sin(rho) * math.sin(alpha)
    q = second_harmonic_gain(params, variant)
    return -2 * first * np.sin(psi) - eps ** 2 * (tau + q) * np.sin(2 * np.asarray(psi))


def reconstruct_state(params: SLParams, phi, order: int = 1) -> ComplexState:
    """Embed a phase point into the oscillator state space."""
    order = _check_order(order, (0, 1))
    z = e0(params, phi)
    if order == 1 and params.eps:
        c = e1(params, phi)
        z = ComplexState(z.z1 + params.eps * c.z1, z.z2 + params.eps * c.z2)
    return z


@dataclass(frozen=True)
class PhaseTrajectory:
    t: np.ndarray
    phi: np.ndarray  # unwrapped, shape (n, 2)

    @property
    def wrapped(self) -> np.ndarray:
        return wrap_angle(self.phi)

    @property
    def psi(self) -> np.ndarray:
        return wrap_angle(self.phi[:, 0] - self.phi[:, 1])

    @property
    def final(self) -> PhasePoint:
        return PhasePoint(float(self.phi[-1, 0]), float(self.phi[-1, 1]))

    @property
    def final_psi(self) -> float:
        return float(self.psi[-1])

    def to_csv(self, path) -> None:
        write_phase_csv(self, path)


def integrate_phase(params: SLParams, phi0, order: int, T: float, dt: float = 0.01,
                    variant: Variant = "full", record_stride: int = 1) -> PhaseTrajectory:
    """Integrate the truncated phase equations with classical RK4.

    Angles are carried unwrapped; :attr:`PhaseTrajectory.psi` wraps.
    """
    order = _check_order(order)
    if dt <= 0:
        raise ValueError("dt must be positive")
    if T < 0:
        raise ValueError("T must be nonnegative")
    x = T / dt
    n_steps = int(math.floor(x + 1e-9))
    rest = T - n_steps * dt
    p1, p2 = _angles(phi0)
    stride = max(1, int(record_stride))
    code = _variant_code(variant)
    args = (params.a, params.b, params.rho, params.eps, params.tau, order, code)
    rec, status, last = _kernels.phase_rk4(*args, p1, p2, dt, n_steps, stride)
    if status != _kernels.OK:
        raise NonFiniteState("phase state became non-finite", time=last * dt)
    t = np.arange(len(rec)) * (stride * dt)
    t[-1] = n_steps * dt
    if rest > 1e-9 * dt:
        tail, status, _ = _kernels.phase_rk4(*args, rec[-1, 0], rec[-1, 1], rest, 1, 1)
        if status != _kernels.OK:
            raise NonFiniteState("phase state became non-finite", time=T)
        rec = np.vstack([rec, tail[-1:]])
        t = np.append(t, T)
    return PhaseTrajectory(t=t, phi=rec)


def write_phase_csv(traj: PhaseTrajectory, path) -> None:
    psi = traj.psi
    wrapped = traj.wrapped
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "phi1", "phi2", "psi"])
        for t, (p1, p2), d in zip(traj.t, wrapped, psi):
            w.writerow([repr(float(t)), repr(float(p1)), repr(float(p2)), repr(float(d))])
