"""Delay-coupled Stuart-Landau oscillators and their phase reductions."""
from dpl.core_model import ComplexState, NetworkSpec, SLParams, as_network_spec, sl_rhs
from dpl.phase_reduction import PhasePoint

__version__ = "0.1.0"

__all__ = [
    "ComplexState",
    "NetworkSpec",
    "PhasePoint",
    "SLParams",
    "as_network_spec",
    "sl_rhs",
    "__version__",
]
