"""Stability of in-phase and anti-phase locking, and its boundaries.

The exponents follow the sign convention of the reduced equation written as
``psi' = -2 eps * lambda * (psi - psi*) + ...`` near an equilibrium
``psi*``: a *positive* exponent means the locked state is stable. This is
the reverse of the usual Lyapunov-exponent convention, kept so that the
zero sets are the bifurcation curves directly.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from dpl.core_model import SLParams
from dpl.errors import EmptyRange
from dpl.phase_reduction import VARIANTS, Variant

Which = Literal["in", "anti"]


def exponent_field(a, b, eps, tau, rho, which: Which = "in", order: int = 2,
                   variant: Variant = "full"):
    """Vectorised stability exponent over arrays of ``tau`` and ``rho``."""
    tau = np.asarray(tau, dtype=float)
    rho = np.asarray(rho, dtype=float)
    alpha = rho - b * tau
    if which == "in":
        sign = 1.0
    elif which == "anti":
        sign = -1.0
    else:
        raise ValueError(f"which must be 'in' or 'anti', got {which!r}")
    first = sign * np.cos(alpha)
    if order == 1:
        return first
    if order != 2:
        raise ValueError(f"order must be 1 or 2, got {order!r}")
    if variant == "full":
        q = np.sin(alpha) ** 2 / a
    elif variant == "legacy":
        q = np.sin(2 * alpha) ** 2 / (2 * a)
    else:
        raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    return first + eps * (tau + q - sign * tau * np.sin(rho) * np.sin(alpha))


def lyapunov_in_phase(params: SLParams, variant: Variant = "full") -> float:
    """Exponent of ``psi = 0`` at second order; positive means stable."""
    return float(exponent_field(params.a, params.b, params.eps, params.tau, params.rho,
                                "in", 2, variant))


def lyapunov_anti_phase(params: SLParams, variant: Variant = "full") -> float:
    """Exponent of ``psi = pi`` at second order; positive means stable."""
    return float(exponent_field(params.a, params.b, params.eps, params.tau, params.rho,
                                "anti", 2, variant))


@dataclass(frozen=True)
class StabilityReport:
    alpha: float
    lambda_in: float
    lambda_anti: float
    slope_in: float
    slope_anti: float

    @property
    def stable_in(self) -> bool:
        return self.slope_in < 0

    @property
    def stable_anti(self) -> bool:
        return self.slope_anti < 0

    @property
    def bistable(self) -> bool:
        return self.stable_in and self.stable_anti


def stability_report(params: SLParams, variant: Variant = "full") -> StabilityReport:
    lam_in = lyapunov_in_phase(params, variant)
    lam_anti = lyapunov_anti_phase(params, variant)
    return StabilityReport(
        alpha=params.alpha,
        lambda_in=lam_in,
        lambda_anti=lam_anti,
        slope_in=-2 * params.eps * lam_in,
        slope_anti=-2 * params.eps * lam_anti,
    )


# -- marching squares ------------------------------------------------------

def _edge_point(key, xs, ys, values):
    kind, i, j = key
    if kind == "x":
        v0, v1 = values[i, j], values[i + 1, j]
        t = v0 / (v0 - v1)
        return xs[i] + t * (xs[i + 1] - xs[i]), ys[j]
    v0, v1 = values[i, j], values[i, j + 1]
    t = v0 / (v0 - v1)
    return xs[i], ys[j] + t * (ys[j + 1] - ys[j])


def contour_segments(xs: np.ndarray, ys: np.ndarray, values: np.ndarray) -> list:
    """Zero-level segments of ``values[i, j]`` sampled at ``(xs[i], ys[j])``.

    Each segment is a pair of edge keys ``(kind, i, j)``: kind ``"x"`` is
    the edge from node ``(i, j)`` to ``(i+1, j)``, kind ``"y"`` the edge
    from ``(i, j)`` to ``(i, j+1)``. Saddle cells are split by the sign of
    the mean of their corners.
    """
    pos = values > 0
    nx, ny = values.shape
    segments = []
    for i in range(nx - 1):
        for j in range(ny - 1):
            # corners counter-clockwise from (i, j)
            c = (pos[i, j], pos[i + 1, j], pos[i + 1, j + 1], pos[i, j + 1])
            if all(c) or not any(c):
                continue
            edges = (("x", i, j), ("y", i + 1, j), ("x", i, j + 1), ("y", i, j))
            hits = [edges[k] for k in range(4) if c[k] != c[(k + 1) % 4]]
            if len(hits) == 2:
                segments.append((hits[0], hits[1]))
                continue
            centre = (values[i, j] + values[i + 1, j] + values[i + 1, j + 1]
                      + values[i, j + 1]) > 0
            # hits are in order bottom, right, top, left
            if centre == c[0]:
                segments.append((edges[0], edges[1]))
                segments.append((edges[2], edges[3]))
            else:
                segments.append((edges[3], edges[0]))
                segments.append((edges[1], edges[2]))
    return segments


def _stitch(segments: list) -> list:
    by_key = {}
    for n, (k0, k1) in enumerate(segments):
        by_key.setdefault(k0, []).append(n)
        by_key.setdefault(k1, []).append(n)
    used = [False] * len(segments)
    chains = []
    for start in range(len(segments)):
        if used[start]:
            continue
        used[start] = True
        chain = list(segments[start])
        for forward in (True, False):
            while True:
                end = chain[-1] if forward else chain[0]
                nxt = [n for n in by_key[end] if not used[n]]
                if not nxt:
                    break
                n = nxt[0]
                used[n] = True
                k0, k1 = segments[n]
                new = k1 if k0 == end else k0
                if forward:
                    chain.append(new)
                else:
                    chain.insert(0, new)
                if new == (chain[0] if forward else chain[-1]):
                    break
        chains.append(chain)
    return chains


def marching_squares(xs: Sequence[float], ys: Sequence[float], values: np.ndarray) -> list:
    """Zero contours of a sampled field as a list of ``(n, 2)`` polylines."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    values = np.asarray(values, dtype=float)
    if values.shape != (len(xs), len(ys)):
        raise ValueError("values must have shape (len(xs), len(ys))")
    chains = _stitch(contour_segments(xs, ys, values))
    return [np.array([_edge_point(k, xs, ys, values) for k in chain]) for chain in chains]


def _axis(rng, n, name):
    lo, hi = float(rng[0]), float(rng[1])
    if not hi > lo:
        raise EmptyRange(f"{name} range [{lo}, {hi}] is empty")
    if int(n) < 2:
        raise EmptyRange(f"{name} grid needs at least 2 points, got {n}")
    return np.linspace(lo, hi, int(n))


def boundary_curves(params_base: SLParams, tau_range, rho_range, grid=(201, 201),
                    which: Which = "in", order: int = 2, variant: Variant = "full") -> list:
    """Zero set of the stability exponent in the ``(tau, rho)`` plane.

    Returns polylines with columns ``(tau, rho)``. ``a``, ``b`` and ``eps``
    come from ``params_base``; its ``tau`` and ``rho`` are ignored.
    """
    taus = _axis(tau_range, grid[0], "tau")
    rhos = _axis(rho_range, grid[1], "rho")
    T, R = np.meshgrid(taus, rhos, indexing="ij")
    field = exponent_field(params_base.a, params_base.b, params_base.eps, T, R,
                           which, order, variant)
    return marching_squares(taus, rhos, field)


def first_order_lines(params_base: SLParams, tau_range, rho_range) -> list:
    """Exact first-order boundaries ``rho - omega tau = +-pi/2 (mod 2 pi)``.

    Each returned segment is clipped to the window and has two points.
    """
    (t0, t1), (r0, r1) = tau_range, rho_range
    w = params_base.b
    out = []
    alphas = []
    lo = min(r0 - w * t0, r0 - w * t1, r1 - w * t0, r1 - w * t1)
    hi = max(r0 - w * t0, r0 - w * t1, r1 - w * t0, r1 - w * t1)
    for base in (math.pi / 2, -math.pi / 2):
        k = math.floor((lo - base) / (2 * math.pi))
        while base + 2 * math.pi * k <= hi:
            alphas.append(base + 2 * math.pi * k)
            k += 1
    for alpha in sorted(alphas):
        # rho = alpha + w tau, clipped to the window
        ts = np.array([t0, t1])
        rs = alpha + w * ts
        if w != 0:
            lo_t = (r0 - alpha) / w
            hi_t = (r1 - alpha) / w
            a_t, b_t = sorted((lo_t, hi_t))
            ta, tb = max(t0, a_t), min(t1, b_t)
            if ta > tb:
                continue
            ts = np.array([ta, tb])
            rs = alpha + w * ts
        out.append(np.column_stack([ts, rs]))
    return out


def write_polylines_csv(curves: list, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["curve_id", "tau", "rho"])
        for cid, curve in enumerate(curves):
            for tau, rho in curve:
                w.writerow([cid, repr(float(tau)), repr(float(rho))])
