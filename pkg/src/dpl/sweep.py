"""Parameter sweeps over the ``(tau, rho)`` plane.

Each grid cell integrates one engine (the delay system or a truncated phase
model) from one fixed or several random initial conditions and labels the
final phase difference. Cells are independent and are farmed out to a
thread pool; the compiled kernels release the GIL. Results are keyed by
cell index, so the output never depends on scheduling.
"""
from __future__ import annotations

import csv
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Literal, Mapping, Optional

import numpy as np

from dpl import __version__
from dpl.core_model import ComplexState, SLParams
from dpl.dde_engine import final_phase_difference
from dpl.errors import DPLError, EmptyRange
from dpl.phase_reduction import VARIANTS, integrate_phase

Engine = Literal["dde", "phase1", "phase2"]
Mode = Literal["fixed_ic", "random_ic"]
ENGINES = ("dde", "phase1", "phase2")
MODES = ("fixed_ic", "random_ic")
LABELS = ("in_phase", "anti_phase", "other")

CSV_HEADER = ["tau", "rho", "f_in", "f_anti", "f_other", "bistable", "psi_final_first_sample"]


def classify(psi: float, tol: float) -> str:
    """Label a final phase difference by its circular distance to 0 and pi."""
    if not math.isfinite(psi):
        return "other"
    d0 = abs(math.remainder(psi, 2 * math.pi))
    if d0 <= tol:
        return "in_phase"
    if math.pi - d0 <= tol:
        return "anti_phase"
    return "other"


def resolve_workers(requested: Optional[int] = None) -> int:
    """Worker count from the argument or ``DPL_THREADS`` (0 means all CPUs)."""
    if requested is None:
        raw = os.environ.get("DPL_THREADS", "0").strip() or "0"
        try:
            requested = int(raw)
        except ValueError:
            raise ValueError(f"DPL_THREADS must be an integer, got {raw!r}") from None
    if requested < 0:
        raise ValueError("worker count must be nonnegative")
    return requested or (os.cpu_count() or 1)


def _pair(value, name, kind=float):
    try:
        lo, hi = value
    except (TypeError, ValueError):
        raise ValueError(f"{name} must be a pair") from None
    return kind(lo), kind(hi)


@dataclass(frozen=True)
class SweepConfig:
    base: SLParams
    tau_range: Optional[tuple] = None
    rho_range: tuple = (-math.pi, math.pi)
    grid: tuple = (81, 81)
    T: float = 1000.0
    mode: Mode = "fixed_ic"
    ic: Optional[ComplexState] = None
    n_samples: int = 20
    seed: int = 0
    classify_tol: float = 0.15
    engine: Engine = "dde"
    variant: str = "full"
    dt: Optional[float] = None
    phase_dt: float = 0.05
    radial_jitter: bool = False

    def __post_init__(self):
        if self.tau_range is None:
            object.__setattr__(self, "tau_range", (0.0, 3 * math.pi / abs(self.base.omega)))
        object.__setattr__(self, "tau_range", _pair(self.tau_range, "tau_range"))
        object.__setattr__(self, "rho_range", _pair(self.rho_range, "rho_range"))
        object.__setattr__(self, "grid", _pair(self.grid, "grid", int))
        if self.ic is None:
            r = self.base.radius
            object.__setattr__(self, "ic", ComplexState(complex(r), r * np.exp(0.01j)))
        if min(self.grid) < 2:
            raise EmptyRange(f"grid must be at least 2x2, got {self.grid}")
        for name, (lo, hi) in (("tau", self.tau_range), ("rho", self.rho_range)):
            if not hi > lo:
                raise EmptyRange(f"{name} range [{lo}, {hi}] is empty")
        if self.tau_range[0] < 0:
            raise ValueError("tau_range must be nonnegative")
        if not self.T > 0:
            raise ValueError("T must be positive")
        if not 0 < self.classify_tol < math.pi / 2:
            raise ValueError("classify_tol must lie in (0, pi/2)")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.engine not in ENGINES:
            raise ValueError(f"engine must be one of {ENGINES}, got {self.engine!r}")
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.n_samples < 1:
            raise ValueError("n_samples must be positive")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if not self.phase_dt > 0 or (self.dt is not None and not self.dt > 0):
            raise ValueError("time steps must be positive")

    def replace(self, **changes) -> "SweepConfig":
        return replace(self, **changes)

    @property
    def taus(self) -> np.ndarray:
        return np.linspace(*self.tau_range, self.grid[0])

    @property
    def rhos(self) -> np.ndarray:
        return np.linspace(*self.rho_range, self.grid[1])

    @property
    def samples_per_cell(self) -> int:
        return 1 if self.mode == "fixed_ic" else int(self.n_samples)

    def to_dict(self) -> dict:
        return {
            "base": self.base.to_dict(),
            "tau_range": list(self.tau_range),
            "rho_range": list(self.rho_range),
            "grid": list(self.grid),
            "T": self.T,
            "mode": self.mode,
            "ic": [[self.ic.z1.real, self.ic.z1.imag], [self.ic.z2.real, self.ic.z2.imag]],
            "n_samples": self.n_samples,
            "seed": self.seed,
            "classify_tol": self.classify_tol,
            "engine": self.engine,
            "variant": self.variant,
            "dt": self.dt,
            "phase_dt": self.phase_dt,
            "radial_jitter": self.radial_jitter,
        }

    @classmethod
    def from_mapping(cls, data: Mapping) -> "SweepConfig":
        """Build from a JSON-style mapping using the field names of this class.

        ``base`` may be nested or its keys may sit at the top level.
        """
        data = dict(data)
        base_keys = ("a", "b", "rho", "eps", "tau")
        base = dict(data.pop("base", {}) or {})
        for k in base_keys:
            if k in data:
                base[k] = data.pop(k)
        base.setdefault("tau", 0.0)
        base.setdefault("rho", 0.0)
        known = set(cls.__dataclass_fields__) - {"base"}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown sweep config keys: {sorted(unknown)}")
        if data.get("ic") is not None:
            (x1, y1), (x2, y2) = data["ic"]
            data["ic"] = ComplexState(complex(x1, y1), complex(x2, y2))
        return cls(base=SLParams.from_mapping(base), **data)


@dataclass
class CellResult:
    tau: float
    rho: float
    outcomes: list
    errors: list = field(default_factory=list)

    @property
    def fractions(self) -> tuple:
        n = len(self.outcomes)
        counts = [sum(1 for _, lab in self.outcomes if lab == k) for k in LABELS]
        return tuple(c / n for c in counts)

    @property
    def bistable(self) -> bool:
        f_in, f_anti, _ = self.fractions
        return f_in > 0 and f_anti > 0

    @property
    def dominant(self) -> str:
        fr = self.fractions
        return LABELS[int(np.argmax(fr))]

    @property
    def psi_first(self) -> float:
        return self.outcomes[0][0]


def _cell_rng(seed: int, cell: int, sample: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=(cell, sample))
    return np.random.Generator(np.random.Philox(ss))


def initial_condition(config: SweepConfig, cell: int, sample: int) -> ComplexState:
    """Initial state for one sample; deterministic in ``(seed, cell, sample)``."""
    if config.mode == "fixed_ic":
        return config.ic
    rng = _cell_rng(config.seed, cell, sample)
    th = rng.uniform(0.0, 2 * math.pi, size=2)
    r = np.full(2, config.base.radius)
    if config.radial_jitter:
        r = r * rng.uniform(0.8, 1.2, size=2)
    z = r * np.exp(1j * th)
    return ComplexState(complex(z[0]), complex(z[1]))


def _final_psi(config: SweepConfig, params: SLParams, ic: ComplexState) -> float:
    if config.engine == "dde":
        return final_phase_difference(params, ic, config.T, dt=config.dt)
    order = 1 if config.engine == "phase1" else 2
    phi0 = (float(np.angle(ic.z1)), float(np.angle(ic.z2)))
    stride = int(config.T / config.phase_dt) + 1
    traj = integrate_phase(params, phi0, order, config.T, dt=config.phase_dt,
                           variant=config.variant, record_stride=stride)
    return traj.final_psi


def run_cell(config: SweepConfig, i: int, j: int) -> CellResult:
    tau, rho = float(config.taus[i]), float(config.rhos[j])
    cell = i * config.grid[1] + j
    params = config.base.replace(tau=tau, rho=rho)
    outcomes, errors = [], []
    for k in range(config.samples_per_cell):
        try:
            psi = _final_psi(config, params, initial_condition(config, cell, k))
        except (DPLError, ValueError, ArithmeticError) as exc:
            errors.append(f"sample {k}: {type(exc).__name__}: {exc}")
            outcomes.append((float("nan"), "other"))
            continue
        outcomes.append((psi, classify(psi, config.classify_tol)))
    return CellResult(tau, rho, outcomes, errors)


@dataclass
class SweepResult:
    config: SweepConfig
    cells: list
    wall_time: float = 0.0
    workers: int = 1

    @property
    def shape(self) -> tuple:
        return self.config.grid

    def cell(self, i: int, j: int) -> CellResult:
        return self.cells[i * self.config.grid[1] + j]

    def grid_of(self, getter) -> np.ndarray:
        n_tau, n_rho = self.shape
        return np.array([[getter(self.cell(i, j)) for j in range(n_rho)] for i in range(n_tau)])

    def labels(self) -> np.ndarray:
        """Dominant label per cell, shape ``(n_tau, n_rho)``."""
        return self.grid_of(lambda c: c.dominant)

    def psi_first(self) -> np.ndarray:
        return self.grid_of(lambda c: c.psi_first).astype(float)

    def bistable(self) -> np.ndarray:
        return self.grid_of(lambda c: c.bistable).astype(bool)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_HEADER)
            for c in self.cells:
                f_in, f_anti, f_other = c.fractions
                w.writerow([repr(c.tau), repr(c.rho), repr(f_in), repr(f_anti), repr(f_other),
                            int(c.bistable), repr(float(c.psi_first))])

    def manifest(self) -> dict:
        return {
            "tool": "dpl",
            "version": __version__,
            "config": self.config.to_dict(),
            "workers": self.workers,
            "wall_time_s": self.wall_time,
            "cells_with_errors": sum(1 for c in self.cells if c.errors),
        }

    def write_manifest(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.manifest(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def run_sweep(config: SweepConfig, workers: Optional[int] = None) -> SweepResult:
    """Integrate and classify every cell of the grid.

    Work is split by ``tau`` rows. Integration failures are recorded in the
    affected cell and labelled ``other``; the sweep itself never aborts.
    """
    n_workers = resolve_workers(workers)
    n_tau, n_rho = config.grid

    def row(i):
        return [run_cell(config, i, j) for j in range(n_rho)]

    start = time.perf_counter()
    if n_workers == 1:
        rows = [row(i) for i in range(n_tau)]
    else:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            rows = list(pool.map(row, range(n_tau)))
    cells = [c for r in rows for c in r]
    return SweepResult(config, cells, time.perf_counter() - start, n_workers)


@dataclass
class EngineComparison:
    results: dict
    agree_phase1: np.ndarray
    agree_phase2: np.ndarray

    @property
    def rate_phase1(self) -> float:
        return float(self.agree_phase1.mean())

    @property
    def rate_phase2(self) -> float:
        return float(self.agree_phase2.mean())

    def write_csv(self, path) -> None:
        ref = self.results["dde"]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["tau", "rho", "label_dde", "label_phase1", "label_phase2",
                        "agree_phase1", "agree_phase2"])
            labels = {k: r.labels() for k, r in self.results.items()}
            n_tau, n_rho = ref.shape
            for i in range(n_tau):
                for j in range(n_rho):
                    c = ref.cell(i, j)
                    w.writerow([repr(c.tau), repr(c.rho), labels["dde"][i, j],
                                labels["phase1"][i, j], labels["phase2"][i, j],
                                int(self.agree_phase1[i, j]), int(self.agree_phase2[i, j])])

    def summary(self) -> dict:
        return {"agreement_dde_phase1": self.rate_phase1,
                "agreement_dde_phase2": self.rate_phase2,
                "cells": int(self.agree_phase1.size)}


def compare_engines(config: SweepConfig, workers: Optional[int] = None) -> EngineComparison:
    """Run all three engines on the same grid and compare dominant labels."""
    results = {e: run_sweep(config.replace(engine=e), workers) for e in ENGINES}
    ref = results["dde"].labels()
    return EngineComparison(
        results=results,
        agree_phase1=ref == results["phase1"].labels(),
        agree_phase2=ref == results["phase2"].labels(),
    )
