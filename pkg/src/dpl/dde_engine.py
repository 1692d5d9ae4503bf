"""Method-of-steps integration of delay networks.

Classical RK4 with a fixed step that divides every positive delay, so the
delayed arguments at stage 1 and stage 4 fall on stored nodes. The
half-step stages read the past through cubic Hermite interpolation of the
stored values and slopes.

Two routes implement the same scheme:

* :func:`integrate` works on any :class:`~dpl.core_model.NetworkSpec`
  with a :class:`HistoryBuffer` on plain numpy arrays.
* :func:`integrate_sl` runs the compiled kernel for the Stuart-Landau pair
  and is what the sweeps use.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from dpl import _kernels
from dpl.core_model import ComplexState, NetworkSpec, SLParams
from dpl.errors import NonFiniteState, StepMisaligned

ALIGN_RTOL = 1e-12


def default_dt(tau: float) -> float:
    """At least 20 nodes per delay interval and never above 0.01."""
    if tau > 0:
        return tau / max(20, math.ceil(tau / 0.01))
    return 0.01


def delay_steps(tau: float, dt: float) -> int:
    """Number of steps in ``tau``; raises when ``dt`` does not divide it."""
    if tau == 0:
        return 0
    x = tau / dt
    n = int(round(x))
    if n < 1 or abs(x - n) > ALIGN_RTOL * max(1.0, x):
        raise StepMisaligned(f"dt={dt!r} does not divide delay {tau!r} (ratio {x!r})")
    return n


@dataclass(frozen=True)
class IntegratorConfig:
    dt: float
    t_end: float
    record_stride: int = 1

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not self.t_end >= 0:
            raise ValueError(f"t_end must be nonnegative, got {self.t_end}")
        if int(self.record_stride) < 1:
            raise ValueError("record_stride must be a positive integer")

    def steps(self) -> tuple:
        """Full steps plus the length of a trailing partial step (or 0)."""
        x = self.t_end / self.dt
        n = int(math.floor(x + 1e-9))
        rest = self.t_end - n * self.dt
        if rest <= 1e-9 * self.dt:
            rest = 0.0
        return n, rest


def hermite(y0, y1, d0, d1, dt, theta):
    """Cubic Hermite interpolant on ``[t0, t0 + dt]`` evaluated at ``t0 + theta dt``."""
    t2 = theta * theta
    t3 = t2 * theta
    return ((2 * t3 - 3 * t2 + 1) * y0 + (t3 - 2 * t2 + theta) * dt * d0
            + (3 * t2 - 2 * t3) * y1 + (t3 - t2) * dt * d1)


class HistoryBuffer:
    """Dense record of the recent past on a uniform grid.

    Node ``m`` sits at time ``m * dt``. Every node keeps its value plus a
    left and a right slope; they differ only where the initial history
    meets the solution at t = 0. Only the last ``horizon_steps + 1`` nodes
    are retained.
    """

    def __init__(self, dt: float, horizon_steps: int, dim: int):
        self.dt = float(dt)
        self.horizon_steps = int(horizon_steps)
        self._cap = self.horizon_steps + 2
        self._y = np.zeros((self._cap, dim))
        self._dl = np.zeros((self._cap, dim))
        self._dr = np.zeros((self._cap, dim))
        self._first = None
        self._last = None

    @property
    def horizon(self) -> float:
        return self.horizon_steps * self.dt

    @property
    def t_now(self) -> float:
        return self._last * self.dt

    @property
    def first_index(self) -> int:
        return max(self._first, self._last - self._cap + 1)

    def push(self, index: int, value, slope_left=None, slope_right=None) -> None:
        if self._last is not None and index != self._last + 1:
            raise ValueError(f"nodes must be pushed in order; expected {self._last + 1}")
        s = index % self._cap
        self._y[s] = value
        self._dl[s] = 0.0 if slope_left is None else slope_left
        self._dr[s] = self._dl[s] if slope_right is None else slope_right
        if self._first is None:
            self._first = index
        self._last = index

    def set_slopes(self, index: int, left=None, right=None) -> None:
        self._check(index)
        s = index % self._cap
        if left is not None:
            self._dl[s] = left
        if right is not None:
            self._dr[s] = right

    def _check(self, index: int) -> None:
        if self._last is None or not (self.first_index <= index <= self._last):
            raise IndexError(f"node {index} outside retained window")

    def value(self, index: int) -> np.ndarray:
        self._check(index)
        return self._y[index % self._cap]

    def interpolate(self, index: int, theta: float) -> np.ndarray:
        """Hermite value at ``(index + theta) * dt`` with ``0 <= theta <= 1``."""
        self._check(index)
        self._check(index + 1)
        s0, s1 = index % self._cap, (index + 1) % self._cap
        return hermite(self._y[s0], self._y[s1], self._dr[s0], self._dl[s1], self.dt, theta)

    def query(self, t: float) -> np.ndarray:
        """State at time ``t``; exact at node times."""
        x = t / self.dt
        m = int(round(x))
        if abs(x - m) <= 1e-9 * max(1.0, abs(x)):
            return self.value(m).copy()
        m = int(math.floor(x))
        return self.interpolate(m, x - m)

    def nodes(self) -> tuple:
        idx = np.arange(self.first_index, self._last + 1)
        slots = idx % self._cap
        return idx * self.dt, self._y[slots].copy()


@dataclass(frozen=True)
class Trajectory:
    """Recorded path of the real state vector."""

    t: np.ndarray
    states: np.ndarray

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]

    @property
    def final_time(self) -> float:
        return float(self.t[-1])

    @property
    def z(self) -> np.ndarray:
        """Complex view ``(n, 2)`` for the Stuart-Landau pair."""
        if self.states.shape[1] != 4:
            raise ValueError("complex view needs a 4-dimensional state")
        return self.states[:, 0::2] + 1j * self.states[:, 1::2]

    @property
    def psi(self) -> np.ndarray:
        z = self.z
        return phase_difference(z[:, 0], z[:, 1])

    def to_csv(self, path) -> None:
        write_trajectory_csv(self, path)


def phase_difference(z1, z2):
    """``arg(z1 conj(z2))`` wrapped to ``(-pi, pi]``."""
    psi = np.angle(np.asarray(z1) * np.conj(z2))
    return np.where(psi <= -math.pi, math.pi, psi)


History = Union[np.ndarray, Callable[[float], np.ndarray]]


def _sample_history(history: History, derivative, times, dim):
    if callable(history):
        values = np.array([np.asarray(history(t), dtype=float) for t in times])
        if derivative is not None:
            slopes = np.array([np.asarray(derivative(t), dtype=float) for t in times])
        else:
            h = 1e-6
            slopes = np.array([(np.asarray(history(t + h)) - np.asarray(history(t - h))) / (2 * h)
                               for t in times])
    else:
        const = np.asarray(history, dtype=float).reshape(dim)
        values = np.tile(const, (len(times), 1))
        slopes = np.zeros_like(values)
    return values.reshape(len(times), dim), slopes.reshape(len(times), dim)


def integrate(spec: NetworkSpec, initial_history: History, config: IntegratorConfig,
              history_derivative: Optional[Callable[[float], np.ndarray]] = None) -> Trajectory:
    """Integrate a delay network on ``[0, t_end]``.

    ``initial_history`` is either a constant state vector or a callable
    ``h(t)`` defined on ``[-max delay, 0]``. Slopes of a callable history
    come from ``history_derivative`` or, failing that, central differences.
    """
    dt = config.dt
    lags = np.zeros((spec.n, spec.n), dtype=int)
    for j in range(spec.n):
        for k in range(spec.n):
            if spec.coupling[j][k] is not None:
                lags[j, k] = delay_steps(float(spec.delays[j, k]), dt)
    horizon = int(lags.max()) if lags.size else 0
    n_steps, rest = config.steps()
    stride = int(config.record_stride)

    buf = HistoryBuffer(dt, max(horizon, 1), spec.size)
    times = np.arange(-horizon, 1) * dt
    values, slopes = _sample_history(initial_history, history_derivative, times, spec.size)
    for m, (v, s) in enumerate(zip(values, slopes), start=-horizon):
        buf.push(m, v, s, s)
    offsets, dims = spec.offsets, spec.dims

    def part(x, k):
        return x[offsets[k]:offsets[k] + dims[k]]

    def field(x, n, theta):
        # theta: position of the stage inside the current step, in units of dt
        def delayed(j, k):
            L = lags[j, k]
            if L == 0:
                return part(x, k)
            if theta == 0.0:
                src = buf.value(n - L)
            elif theta == 1.0:
                src = buf.value(n - L + 1)
            else:
                src = buf.interpolate(n - L, theta)
            return part(src, k)
        return spec.rhs(x, delayed)

    y = values[-1].copy()
    rec_t, rec_y = [0.0], [y.copy()]
    total = n_steps + (1 if rest > 0 else 0)
    for n in range(total):
        hs = dt if n < n_steps else rest
        k1 = field(y, n, 0.0)
        buf.set_slopes(n, left=None if n == 0 else k1, right=k1)
        th = 0.5 * hs / dt
        k2 = field(y + 0.5 * hs * k1, n, th)
        k3 = field(y + 0.5 * hs * k2, n, th)
        k4 = field(y + hs * k3, n, 2 * th if n >= n_steps else 1.0)
        y = y + (hs / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        t = config.t_end if n + 1 == total else (n + 1) * dt
        if not np.all(np.isfinite(y)):
            raise NonFiniteState(f"non-finite state at t={t:g}", time=t)
        if n < n_steps:
            buf.push(n + 1, y)
        if (n + 1) % stride == 0 or n + 1 == total:
            rec_t.append(t)
            rec_y.append(y.copy())
    return Trajectory(t=np.array(rec_t), states=np.array(rec_y))


def _sl_history(params: SLParams, initial: ComplexState, history, lag: int, dt: float):
    times = np.arange(-lag, 1) * dt
    z0 = initial.as_array()
    if history is None or history == "constant":
        vals = np.tile(z0, (lag + 1, 1))
        slopes = np.zeros_like(vals)
    elif history == "rotating":
        rot = np.exp(1j * params.b * times)[:, None]
        vals = z0[None, :] * rot
        slopes = 1j * params.b * vals
    elif isinstance(history, tuple):
        fn, dfn = history
        vals = np.array([fn(t) for t in times], dtype=complex).reshape(lag + 1, 2)
        slopes = np.array([dfn(t) for t in times], dtype=complex).reshape(lag + 1, 2)
    else:
        raise ValueError(f"unknown history {history!r}")
    return (np.ascontiguousarray(vals[:, 0]), np.ascontiguousarray(vals[:, 1]),
            np.ascontiguousarray(slopes[:, 0]), np.ascontiguousarray(slopes[:, 1]))


def integrate_sl(params: SLParams, initial: ComplexState, config: IntegratorConfig,
                 history="constant") -> Trajectory:
    """Compiled integration of the Stuart-Landau pair.

    ``history`` is ``"constant"`` (the t=0 state held on ``[-tau, 0]``),
    ``"rotating"`` (``z_j(0) exp(i b t)`` for ``t < 0``) or a pair of
    callables ``(h, dh)`` returning complex 2-vectors. When the history is
    a callable, ``initial`` is ignored in favour of ``h(0)``.
    """
    lag = delay_steps(params.tau, config.dt)
    n_steps, rest = config.steps()
    h1, h2, d1, d2 = _sl_history(params, initial, history, lag, config.dt)
    stride = int(config.record_stride)
    r1, r2, status, done = _kernels.sl_dde(
        params.a, params.b, params.rho, params.eps, lag, config.dt,
        n_steps, rest, stride, h1, h2, d1, d2)
    if status != _kernels.OK:
        t = min(done, n_steps) * config.dt
        raise NonFiniteState(f"non-finite state near t={t:g}", time=t)
    steps = np.arange(len(r1)) * stride * config.dt
    steps[-1] = config.t_end
    states = np.column_stack([r1.real, r1.imag, r2.real, r2.imag])
    return Trajectory(t=steps, states=states)


def final_phase_difference(params: SLParams, initial: ComplexState, T: float,
                           dt: Optional[float] = None, history="constant") -> float:
    """Run to ``T`` recording only the end point and return ``psi(T)``."""
    if not T > 0:
        raise ValueError("T must be positive")
    dt = default_dt(params.tau) if dt is None else dt
    config = IntegratorConfig(dt=dt, t_end=T, record_stride=max(1, int(T / dt) + 1))
    traj = integrate_sl(params, initial, config, history=history)
    z = traj.z[-1]
    return float(phase_difference(z[0], z[1]))


def integrate_to_phase_difference(params: SLParams, initial: ComplexState, T: float,
                                  dt: Optional[float] = None, history="constant") -> float:
    """Phase difference ``psi(T)`` in ``(-pi, pi]`` from constant initial history."""
    return final_phase_difference(params, initial, T, dt=dt, history=history)


def write_trajectory_csv(traj: Trajectory, path) -> None:
    z = traj.z
    psi = traj.psi
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "re_z1", "im_z1", "re_z2", "im_z2", "psi"])
        for t, (z1, z2), p in zip(traj.t, z, psi):
            w.writerow([repr(float(v)) for v in (t, z1.real, z1.imag, z2.real, z2.imag, p)])
