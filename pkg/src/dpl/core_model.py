"""Parameter sets, states and right-hand sides.

The generic network form is

    x_j' = F_j(x_j) + eps * sum_k G_jk(x_j, x_k(t - tau_jk))

on real state vectors. The Stuart-Landau pair is the concrete model used
throughout the package; :func:`as_network_spec` casts it into the generic
form so one engine serves both.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Callable, Mapping, Optional, Sequence

import numpy as np

Field = Callable[[np.ndarray], np.ndarray]
Coupling = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class SLParams:
    """Two identical delay-coupled Stuart-Landau oscillators.

    Attributes:
        a: squared radius of the uncoupled limit cycle, ``a > 0``.
        b: intrinsic frequency ``omega``, nonzero (negative is allowed).
        rho: coupling phase in radians.
        eps: coupling strength, ``eps >= 0``.
        tau: transmission delay, ``tau >= 0``.
    """

    a: float = 1.0
    b: float = 1.0
    rho: float = 0.0
    eps: float = 0.1
    tau: float = 0.0

    def __post_init__(self):
        for f in fields(self):
            value = float(getattr(self, f.name))
            if not math.isfinite(value):
                raise ValueError(f"{f.name} must be finite, got {value!r}")
            object.__setattr__(self, f.name, value)
        if self.a <= 0:
            raise ValueError(f"a must be positive, got {self.a}")
        if self.b == 0:
            raise ValueError("b must be nonzero")
        if self.eps < 0:
            raise ValueError(f"eps must be nonnegative, got {self.eps}")
        if self.tau < 0:
            raise ValueError(f"tau must be nonnegative, got {self.tau}")

    @property
    def omega(self) -> float:
        return self.b

    @property
    def radius(self) -> float:
        return math.sqrt(self.a)

    @property
    def period(self) -> float:
        return 2 * math.pi / abs(self.b)

    @property
    def alpha(self) -> float:
        """Effective phase lag ``rho - omega * tau``."""
        return self.rho - self.b * self.tau

    def replace(self, **changes) -> "SLParams":
        return SLParams(**{**asdict(self), **changes})

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_mapping(cls, data: Mapping) -> "SLParams":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown parameter keys: {sorted(unknown)}")
        return cls(**{k: data[k] for k in known if k in data})


def load_params(path) -> SLParams:
    """Read ``a``, ``b``, ``rho``, ``eps``, ``tau`` from a JSON document."""
    return SLParams.from_mapping(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class ComplexState:
    """States ``(z1, z2)`` of the two oscillators."""

    z1: complex
    z2: complex

    def __post_init__(self):
        object.__setattr__(self, "z1", complex(self.z1))
        object.__setattr__(self, "z2", complex(self.z2))

    def as_real(self) -> np.ndarray:
        """Real view ``[Re z1, Im z1, Re z2, Im z2]`` used by the generic engine."""
        return np.array([self.z1.real, self.z1.imag, self.z2.real, self.z2.imag])

    @classmethod
    def from_real(cls, x: Sequence[float]) -> "ComplexState":
        return cls(complex(x[0], x[1]), complex(x[2], x[3]))

    def as_array(self) -> np.ndarray:
        return np.array([self.z1, self.z2])

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.as_real())))

    def swapped(self) -> "ComplexState":
        return ComplexState(self.z2, self.z1)

    def rotated(self, chi: float) -> "ComplexState":
        r = complex(math.cos(chi), math.sin(chi))
        return ComplexState(r * self.z1, r * self.z2)

    @property
    def psi(self) -> float:
        """Phase difference ``arg(z1 conj(z2))`` in ``(-pi, pi]``."""
        psi = math.atan2((self.z1 * self.z2.conjugate()).imag,
                         (self.z1 * self.z2.conjugate()).real)
        return math.pi if psi == -math.pi else psi


def sl_field(params: SLParams, z: complex) -> complex:
    """Uncoupled Stuart-Landau vector field ``(a + ib) z - |z|^2 z``."""
    return complex(params.a, params.b) * z - abs(z) ** 2 * z


def sl_rhs(params: SLParams, z: ComplexState, z_delayed: ComplexState) -> ComplexState:
    """Right-hand side of the coupled pair.

    ``z_delayed`` holds both oscillators evaluated at ``t - tau``; oscillator
    1 reads ``z_delayed.z2`` and vice versa.
    """
    k = params.eps * complex(math.cos(params.rho), math.sin(params.rho))
    return ComplexState(
        sl_field(params, z.z1) + k * (z_delayed.z2 - z.z1),
        sl_field(params, z.z2) + k * (z_delayed.z1 - z.z2),
    )


@dataclass(frozen=True)
class NetworkSpec:
    """Generic delay network on real state vectors.

    ``coupling[j][k]`` maps ``(x_j, x_k delayed by delays[j][k])`` to a
    vector of dimension ``dims[j]``; ``None`` marks an absent link.
    """

    dims: tuple
    intrinsic: tuple
    coupling: tuple
    delays: np.ndarray
    eps: float = 0.0
    labels: Optional[tuple] = field(default=None, compare=False)

    def __post_init__(self):
        n = len(self.dims)
        delays = np.asarray(self.delays, dtype=float)
        if delays.shape != (n, n):
            raise ValueError(f"delays must be {n}x{n}, got {delays.shape}")
        if np.any(delays < 0) or not np.all(np.isfinite(delays)):
            raise ValueError("delays must be finite and nonnegative")
        if len(self.intrinsic) != n or len(self.coupling) != n:
            raise ValueError("intrinsic and coupling must have one entry per oscillator")
        if any(len(row) != n for row in self.coupling):
            raise ValueError("coupling must be an n x n table")
        if self.eps < 0:
            raise ValueError("eps must be nonnegative")
        delays.setflags(write=False)
        object.__setattr__(self, "delays", delays)
        object.__setattr__(self, "dims", tuple(int(m) for m in self.dims))

    @property
    def n(self) -> int:
        return len(self.dims)

    @property
    def size(self) -> int:
        return sum(self.dims)

    @property
    def offsets(self) -> list:
        return list(np.cumsum((0,) + self.dims[:-1]))

    @property
    def max_delay(self) -> float:
        return float(self.delays.max()) if self.n else 0.0

    def split(self, x: np.ndarray) -> list:
        return [x[o:o + m] for o, m in zip(self.offsets, self.dims)]

    def rhs(self, x: np.ndarray, delayed: Callable[[int, int], np.ndarray]) -> np.ndarray:
        """Evaluate the network field.

        ``delayed(j, k)`` must return the state of oscillator ``k`` at
        ``t - delays[j][k]``.
        """
        parts = self.split(x)
        out = np.empty(self.size)
        for j, (o, m) in enumerate(zip(self.offsets, self.dims)):
            acc = np.asarray(self.intrinsic[j](parts[j]), dtype=float).copy()
            for k in range(self.n):
                g = self.coupling[j][k]
                if g is None:
                    continue
                acc += self.eps * np.asarray(g(parts[j], delayed(j, k)), dtype=float)
            out[o:o + m] = acc
        return out


def _real_sl_field(a: float, b: float) -> Field:
    def F(x):
        r2 = x[0] * x[0] + x[1] * x[1]
        return np.array([a * x[0] - b * x[1] - r2 * x[0],
                         b * x[0] + a * x[1] - r2 * x[1]])
    return F


def _real_diffusive(rho: float) -> Coupling:
    c, s = math.cos(rho), math.sin(rho)

    def G(x, y):
        dx, dy = y[0] - x[0], y[1] - x[1]
        return np.array([c * dx - s * dy, s * dx + c * dy])
    return G


def as_network_spec(params: SLParams) -> NetworkSpec:
    """Cast the SL pair into the generic network form (two 2-d oscillators)."""
    F = _real_sl_field(params.a, params.b)
    G = _real_diffusive(params.rho)
    tau = params.tau
    return NetworkSpec(
        dims=(2, 2),
        intrinsic=(F, F),
        coupling=((None, G), (G, None)),
        delays=np.array([[0.0, tau], [tau, 0.0]]),
        eps=params.eps,
        labels=("z1", "z2"),
    )
