"""Command-line interface: ``dpl simulate | sweep | boundary | verify | compare``.

Every subcommand accepts ``--seed``, ``--out-dir`` and ``--config``. The
config file is JSON whose keys are the field names of ``SweepConfig`` and
``SLParams``; explicit flags override it.

Exit status: 0 success, 1 verification failure, 2 bad arguments,
3 integration failure.
"""
from __future__ import annotations

import argparse
import json
import math
import re
import sys
from pathlib import Path

import numpy as np

from dpl import __version__
from dpl.core_model import ComplexState, SLParams
from dpl.dde_engine import IntegratorConfig, default_dt, integrate_sl, write_trajectory_csv
from dpl.errors import DPLError, EmptyRange, NonFiniteState
from dpl.phase_reduction import VARIANTS, integrate_phase, write_phase_csv
from dpl.stability import boundary_curves, first_order_lines, write_polylines_csv
from dpl.svg import PlotSpec, curves, heatmap, overlay, write_svg
from dpl.sweep import ENGINES, MODES, SweepConfig, classify, compare_engines, run_sweep
from dpl.verify import report_json, run_verification

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_INTEGRATION = 0, 1, 2, 3

_PI_RE = re.compile(r"^([+-]?(?:\d+\.?\d*|\.\d+)?)\*?pi(?:/(\d+\.?\d*))?$")


def parse_number(text: str) -> float:
    """Float, optionally written with ``pi``: ``3pi``, ``-pi/2``, ``1.5*pi``."""
    s = str(text).strip().lower().replace(" ", "")
    try:
        return float(s)
    except ValueError:
        pass
    m = _PI_RE.match(s)
    if not m:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    coef = m.group(1)
    coef = -1.0 if coef == "-" else 1.0 if coef in ("", "+") else float(coef)
    div = float(m.group(2)) if m.group(2) else 1.0
    return coef * math.pi / div


def parse_range(text: str) -> tuple:
    parts = str(text).split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected LO,HI, got {text!r}")
    return parse_number(parts[0]), parse_number(parts[1])


def parse_grid(text: str) -> tuple:
    m = re.fullmatch(r"\s*(\d+)\s*[xX,]\s*(\d+)\s*", str(text))
    if not m:
        raise argparse.ArgumentTypeError(f"expected NxM, got {text!r}")
    return int(m.group(1)), int(m.group(2))


class UsageError(Exception):
    pass


# -- parser ------------------------------------------------------------------

def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=None, help="random seed (default 0)")
    p.add_argument("--out-dir", default=None, help="output directory (default .)")
    p.add_argument("--config", default=None, help="JSON file with parameter values")


def _params(p: argparse.ArgumentParser, with_point: bool) -> None:
    g = p.add_argument_group("model parameters")
    g.add_argument("--a", type=parse_number, default=None)
    g.add_argument("--b", type=parse_number, default=None)
    g.add_argument("--eps", type=parse_number, default=None)
    if with_point:
        g.add_argument("--rho", type=parse_number, default=None)
        g.add_argument("--tau", type=parse_number, default=None)


def _window(p: argparse.ArgumentParser, grid_default: str) -> None:
    p.add_argument("--tau-range", dest="tau_range", type=parse_range, default=None,
                   help="LO,HI (default 0,3pi/omega)")
    p.add_argument("--rho-range", dest="rho_range", type=parse_range, default=None,
                   help="LO,HI (default -pi,pi)")
    p.add_argument("--grid", type=parse_grid, default=None, help=f"NxM (default {grid_default})")
    p.add_argument("--variant", choices=VARIANTS, default=None)


def _sweep_flags(p: argparse.ArgumentParser) -> None:
    _params(p, with_point=False)
    _window(p, "81x81")
    p.add_argument("--T", type=float, default=None, help="horizon (default 1000)")
    p.add_argument("--mode", choices=MODES, default=None)
    p.add_argument("--n-samples", dest="n_samples", type=int, default=None)
    p.add_argument("--tol", dest="classify_tol", type=float, default=None)
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--phase-dt", dest="phase_dt", type=float, default=None)
    p.add_argument("--jitter", dest="radial_jitter", action="store_true", default=None,
                   help="radial jitter of random initial states")
    p.add_argument("--workers", type=int, default=None,
                   help="thread count (default DPL_THREADS, 0 = all CPUs)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dpl", description=(
        "Delay-coupled Stuart-Landau pair: simulation, phase reduction, "
        "stability boundaries and parameter sweeps."))
    parser.add_argument("--version", action="version", version=f"dpl {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="one trajectory of the delay system or a phase model")
    _common(p)
    _params(p, with_point=True)
    p.add_argument("--engine", choices=ENGINES, default=None)
    p.add_argument("--T", type=float, default=None, help="horizon (default 1000)")
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--phi1", type=parse_number, default=None, help="initial phase (default 0)")
    p.add_argument("--phi2", type=parse_number, default=None, help="initial phase (default 0.01)")
    p.add_argument("--history", choices=("constant", "rotating"), default=None)
    p.add_argument("--variant", choices=VARIANTS, default=None)
    p.add_argument("--record-stride", dest="record_stride", type=int, default=None)
    p.add_argument("--svg", action="store_true", help="also plot psi(t)")

    p = sub.add_parser("sweep", help="classify final phase differences over a grid")
    _common(p)
    _sweep_flags(p)
    p.add_argument("--engine", choices=ENGINES, default=None)
    p.add_argument("--overlay", action="store_true",
                   help="draw second-order boundaries on the heatmap")

    p = sub.add_parser("boundary", help="stability boundaries in the (tau, rho) plane")
    _common(p)
    _params(p, with_point=False)
    _window(p, "201x201")
    p.add_argument("--which", choices=("in", "anti", "both"), default=None)
    p.add_argument("--order", type=int, choices=(1, 2), default=None)

    p = sub.add_parser("verify", help="residual and expansion checks of the reduction")
    _common(p)
    p.add_argument("--n-params", dest="n_params", type=int, default=None)
    p.add_argument("--n-samples", dest="n_samples", type=int, default=None)

    p = sub.add_parser("compare", help="engine disagreement map")
    _common(p)
    _sweep_flags(p)
    return parser


# -- helpers -----------------------------------------------------------------

def _merged(args: argparse.Namespace, skip=("command", "config", "out_dir", "svg", "overlay")) -> dict:
    """Config-file values overridden by explicit flags."""
    data = {}
    if args.config:
        try:
            with open(args.config) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(data, dict):
            raise UsageError("config file must hold a JSON object")
        base = data.pop("base", None)
        if isinstance(base, dict):
            for k, v in base.items():
                data.setdefault(k, v)
    for k, v in vars(args).items():
        if k in skip or v is None:
            continue
        data[k] = v
    return data


def _out_dir(args) -> Path:
    out = Path(args.out_dir or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _take(data: dict, keys) -> dict:
    return {k: data.pop(k) for k in keys if k in data}


def _sweep_config(data: dict) -> SweepConfig:
    base = {"a": 1.0, "b": 1.0, "eps": 0.1, "rho": 0.0, "tau": 0.0}
    base.update(_take(data, ("a", "b", "eps", "rho", "tau")))
    data.pop("workers", None)
    try:
        return SweepConfig.from_mapping({"base": base, **data})
    except (ValueError, TypeError) as exc:
        raise UsageError(str(exc)) from None


def _overlay_curves(base: SLParams, cfg: SweepConfig, variant: str) -> list:
    out = []
    for which in ("in", "anti"):
        out += boundary_curves(base, cfg.tau_range, cfg.rho_range, (201, 201), which, 2, variant)
    return out


# -- subcommands -------------------------------------------------------------

def cmd_simulate(args) -> int:
    data = _merged(args)
    missing = [k for k in ("a", "b", "rho", "eps", "tau") if k not in data]
    if missing:
        raise UsageError("missing required parameters: " + ", ".join("--" + k for k in missing))
    try:
        params = SLParams.from_mapping({k: data[k] for k in ("a", "b", "rho", "eps", "tau")})
    except (ValueError, TypeError) as exc:
        raise UsageError(str(exc)) from None
    engine = data.get("engine", "dde")
    T = float(data.get("T", 1000.0))
    phi1, phi2 = float(data.get("phi1", 0.0)), float(data.get("phi2", 0.01))
    variant = data.get("variant", "full")
    out = _out_dir(args)
    path = out / f"simulate_{engine}.csv"
    try:
        if engine == "dde":
            dt = float(data.get("dt") or default_dt(params.tau))
            stride = int(data.get("record_stride", 10))
            r = params.radius
            ic = ComplexState(r * np.exp(1j * phi1), r * np.exp(1j * phi2))
            traj = integrate_sl(params, ic, IntegratorConfig(dt, T, stride),
                                history=data.get("history", "constant"))
            write_trajectory_csv(traj, path)
            t, psi = traj.t, traj.psi
        elif engine in ("phase1", "phase2"):
            dt = float(data.get("dt") or 0.01)
            stride = int(data.get("record_stride", 10))
            traj = integrate_phase(params, (phi1, phi2), int(engine[-1]), T, dt=dt,
                                   variant=variant, record_stride=stride)
            write_phase_csv(traj, path)
            t, psi = traj.t, traj.psi
        else:
            raise UsageError(f"unknown engine {engine!r}")
    except NonFiniteState as exc:
        print(f"integration failed: {exc}", file=sys.stderr)
        return EXIT_INTEGRATION
    except DPLError as exc:
        raise UsageError(str(exc)) from None
    final = float(psi[-1])
    label = classify(final, 0.15)
    if args.svg:
        spec = PlotSpec(kind="curves", x_label="t", y_label="psi",
                        x_range=(float(t[0]), float(t[-1]) if t[-1] > t[0] else 1.0),
                        y_range=(-math.pi, math.pi), title=f"{engine} psi(t)")
        write_svg(curves(spec, [np.column_stack([t, psi])]), out / f"simulate_{engine}.svg")
    print(f"final psi = {final:.6f} ({label}); wrote {path}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    data = _merged(args)
    workers = data.get("workers")
    cfg = _sweep_config(data)
    res = run_sweep(cfg, workers)
    out = _out_dir(args)
    res.write_csv(out / "sweep.csv")
    res.write_manifest(out / "sweep_manifest.json")
    spec = PlotSpec(kind="heatmap", title=f"{cfg.engine}, {cfg.mode}")
    write_svg(heatmap(spec, cfg.taus, cfg.rhos, res.psi_first()), out / "sweep.svg")
    if args.overlay:
        lines = _overlay_curves(cfg.base, cfg, cfg.variant)
        write_svg(overlay(PlotSpec(kind="overlay", title=f"{cfg.engine}, {cfg.mode}"),
                          cfg.taus, cfg.rhos, res.psi_first(), lines), out / "sweep_overlay.svg")
    n_bi = int(res.bistable().sum())
    n_err = sum(1 for c in res.cells if c.errors)
    print(f"{len(res.cells)} cells, {n_bi} bistable, {n_err} with errors; wrote {out / 'sweep.csv'}")
    return EXIT_OK


def cmd_boundary(args) -> int:
    data = _merged(args)
    base = {"a": 1.0, "b": 1.0, "eps": 0.1, "rho": 0.0, "tau": 0.0}
    base.update(_take(data, ("a", "b", "eps", "rho", "tau")))
    try:
        params = SLParams.from_mapping(base)
    except (ValueError, TypeError) as exc:
        raise UsageError(str(exc)) from None
    tau_range = tuple(data.get("tau_range") or (0.0, 3 * math.pi / abs(params.omega)))
    rho_range = tuple(data.get("rho_range") or (-math.pi, math.pi))
    grid = tuple(data.get("grid") or (201, 201))
    order = int(data.get("order", 2))
    variant = data.get("variant", "full")
    which = data.get("which", "in")
    kinds = ("in", "anti") if which == "both" else (which,)
    lines = []
    try:
        for w in kinds:
            if order == 1:
                # first-order boundaries coincide for both states
                lines += first_order_lines(params, tau_range, rho_range) if w == kinds[0] else []
            else:
                lines += boundary_curves(params, tau_range, rho_range, grid, w, order, variant)
    except EmptyRange as exc:
        raise UsageError(str(exc)) from None
    out = _out_dir(args)
    write_polylines_csv(lines, out / "boundary.csv")
    spec = PlotSpec(kind="curves", x_range=tau_range, y_range=rho_range,
                    title=f"order {order} boundaries ({which})")
    write_svg(curves(spec, lines), out / "boundary.svg")
    print(f"{len(lines)} polylines; wrote {out / 'boundary.csv'}")
    return EXIT_OK


def cmd_verify(args) -> int:
    data = _merged(args)
    report = run_verification(seed=int(data.get("seed", 0)),
                              n_params=int(data.get("n_params", 10)),
                              n_samples=int(data.get("n_samples", 100)))
    out = _out_dir(args)
    (out / "verify_report.json").write_text(report_json(report) + "\n")
    for r in report["residuals"]:
        print(f"{r['equation_id']:12s} max {r['max_abs_residual']:.3e}  "
              f"{'PASS' if r['passed'] else 'FAIL'}")
    for e in report["frequency_expansion"]:
        print(f"expansion {e['branch']:10s} slopes {e['slope1']:.3f} {e['slope2']:.3f}  "
              f"{'PASS' if e['passed'] else 'FAIL'}")
    lin = report["linearization"]
    print(f"linearization max {lin['max_abs_mismatch']:.3e}  {'PASS' if lin['passed'] else 'FAIL'}")
    return EXIT_OK if report["passed"] else EXIT_VERIFY


def cmd_compare(args) -> int:
    data = _merged(args)
    workers = data.get("workers")
    cfg = _sweep_config(data)
    cmp = compare_engines(cfg, workers)
    out = _out_dir(args)
    cmp.write_csv(out / "compare.csv")
    (out / "compare_summary.json").write_text(json.dumps(cmp.summary(), indent=2, sort_keys=True) + "\n")
    lines = _overlay_curves(cfg.base, cfg, cfg.variant)
    write_svg(overlay(PlotSpec(kind="overlay", title="delay system with order-2 boundaries"),
                      cfg.taus, cfg.rhos, cmp.results["dde"].psi_first(), lines),
              out / "compare.svg")
    s = cmp.summary()
    print(f"agreement dde/phase1 {s['agreement_dde_phase1']:.3f}, "
          f"dde/phase2 {s['agreement_dde_phase2']:.3f} over {s['cells']} cells")
    return EXIT_OK


COMMANDS = {"simulate": cmd_simulate, "sweep": cmd_sweep, "boundary": cmd_boundary,
            "verify": cmd_verify, "compare": cmd_compare}


_VALUE_FLAGS = ("--tau-range", "--rho-range")


def _join_negative_values(argv: list) -> list:
    # argparse reads "-pi,pi" as an option; glue it to its flag instead
    out, i = [], 0
    while i < len(argv):
        tok = argv[i]
        if tok in _VALUE_FLAGS and i + 1 < len(argv) and argv[i + 1].startswith("-"):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


def main(argv=None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    args = parser.parse_args(_join_negative_values(argv))
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"dpl {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
